use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use affectkit::pipeline::{
    cost_summary, extract_features, gradcheck_report, load_manifest, synth_dataset, train_eval, ExtractOptions,
    ExtractSummary, Modality, SplitSpec, SynthSpec, MANIFEST_NAME,
};
use affectkit::train::TrainConfig;
use affectkit::Error;

const EXIT_USAGE: u8 = 1;
const EXIT_VALIDATION: u8 = 2;
const EXIT_IO: u8 = 3;

#[derive(Parser)]
#[command(name = "affectkit", version, about = "Emotion-recognition feature pipelines and attention experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset and its manifest.
    Synth(SynthArgs),
    /// Extract hand-crafted features for one modality into a feature file.
    Extract(ExtractArgs),
    /// Per-subject 70/30 training and evaluation; writes a JSON report.
    TrainEval(TrainEvalArgs),
    /// Attention diagnostics printed as JSON.
    Attnlab {
        #[command(subcommand)]
        command: AttnlabCommand,
    },
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, value_parser = parse_modality)]
    modality: Modality,
    #[arg(long)]
    subjects: usize,
    #[arg(long)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ExtractArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long, value_parser = parse_modality)]
    modality: Modality,
    #[arg(long)]
    out: PathBuf,
    /// Width of the embedding for raw vision frames.
    #[arg(long, default_value_t = ExtractOptions::default().vision_embed_dim)]
    embed_dim: usize,
    #[arg(long, default_value_t = 0)]
    embed_seed: u64,
    /// Overwrite feature 0 of each row with its row index (debugging).
    #[arg(long)]
    tag_rows: bool,
}

#[derive(Args)]
struct TrainEvalArgs {
    #[arg(long)]
    features: PathBuf,
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long, default_value_t = 0.7)]
    train_frac: f64,
    /// Seeds both the split and training; overrides the config's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// JSON training configuration; omitted fields take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    report: PathBuf,
    /// Needed only when the feature rows match more than one modality.
    #[arg(long, value_parser = parse_modality)]
    modality: Option<Modality>,
}

#[derive(Subcommand)]
enum AttnlabCommand {
    /// Finite-difference check of every registered differentiable op.
    Gradcheck {
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Full versus factorized attention score counts.
    Cost {
        #[arg(long, default_value_t = 25)]
        frames: u64,
        #[arg(long, default_value_t = 196)]
        patches: u64,
    },
}

fn parse_modality(s: &str) -> Result<Modality, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn write(path: &Path, contents: &[u8]) -> affectkit::Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn run(cli: Cli) -> affectkit::Result<u8> {
    match cli.command {
        Command::Synth(a) => {
            let spec = SynthSpec::new(a.modality, a.subjects, a.trials, a.seed);
            let manifest = synth_dataset(&spec, &a.out)?;
            let trials: usize = manifest.subjects.iter().map(|s| s.trials.len()).sum();
            println!("wrote {trials} {} trials for {} subjects to {}", a.modality, a.subjects, a.out.join(MANIFEST_NAME).display());
        }
        Command::Extract(a) => {
            let manifest = load_manifest(&a.manifest)?;
            let opts = ExtractOptions {
                vision_embed_dim: a.embed_dim,
                vision_embed_seed: a.embed_seed,
                tag_rows: a.tag_rows,
            };
            let features = extract_features(&manifest, a.modality, &opts)?;
            features.save(&a.out)?;
            let summary = ExtractSummary {
                modality: a.modality,
                count: features.len(),
                dim: features.dim(),
            };
            println!("{}", serde_json::to_string_pretty(&summary).expect("serializable"));
        }
        Command::TrainEval(a) => {
            let mut cfg = match &a.config {
                Some(path) => {
                    let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
                        path: path.clone(),
                        source: e,
                    })?;
                    serde_json::from_str::<TrainConfig>(&text)?
                }
                None => TrainConfig::default(),
            };
            if let Some(seed) = a.seed {
                cfg.seed = seed;
            }
            let split = SplitSpec::new(a.train_frac, cfg.seed)?;
            let features = affectkit::pipeline::FeatureFile::load(&a.features)?;
            let manifest = load_manifest(&a.manifest)?;
            let report = train_eval(&features, &manifest, a.modality, &split, &cfg)?;
            write(&a.report, report.to_json().as_bytes())?;
            println!(
                "{} subjects: mean accuracy {:.4} ± {:.4}, weighted F1 {:.4}",
                report.subjects.len(),
                report.mean_accuracy,
                report.std_accuracy,
                report.mean_weighted_f1
            );
        }
        Command::Attnlab { command } => match command {
            AttnlabCommand::Gradcheck { seed } => {
                let report = gradcheck_report(seed)?;
                println!("{}", serde_json::to_string_pretty(&report).expect("serializable"));
                if !report.passed {
                    return Ok(EXIT_VALIDATION);
                }
            }
            AttnlabCommand::Cost { frames, patches } => {
                println!("{}", serde_json::to_string_pretty(&cost_summary(frames, patches)?).expect("serializable"));
            }
        },
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { EXIT_VALIDATION } else { EXIT_IO })
        }
    }
}
