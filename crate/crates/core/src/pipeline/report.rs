use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numkit::Tensor;
use crate::train::{evaluate_metrics, mlp_for, train_classifier, TrainConfig};
use crate::NUM_CLASSES;

use super::feature_file::FeatureFile;
use super::manifest::{Manifest, Modality, TrialRef};
use super::split::{split_trials, SplitSpec};

pub const REPORT_LAYOUT: &str = "affectkit.run_report";
pub const REPORT_VERSION: &str = "1";

/// Fewest training trials a subject may contribute.
pub const MIN_TRAIN_TRIALS: usize = 10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubjectResult {
    pub id: String,
    pub n_train: usize,
    pub n_test: usize,
    pub train_accuracy: f64,
    pub accuracy: f64,
    pub weighted_f1: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub layout: String,
    pub version: String,
    /// Seconds since the Unix epoch; the only field that varies between
    /// otherwise identical runs.
    pub generated_at: u64,
    pub modality: Modality,
    pub feature_dim: usize,
    pub seed: u64,
    pub split: SplitSpec,
    pub config: TrainConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<serde_json::Value>,
    pub subjects: Vec<SubjectResult>,
    pub mean_accuracy: f64,
    /// Population standard deviation across subjects.
    pub std_accuracy: f64,
    pub mean_weighted_f1: f64,
    pub std_weighted_f1: f64,
}

/// Mean and population standard deviation.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

impl RunReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Picks the manifest trials the feature rows belong to: `modality` if
/// given, otherwise the unique modality whose trial count and labels match.
pub fn align(features: &FeatureFile, manifest: &Manifest, modality: Option<Modality>) -> Result<(Modality, Vec<TrialRef>)> {
    let matches = |m: Modality| -> std::result::Result<Vec<TrialRef>, String> {
        let refs = manifest.select(m);
        if refs.len() != features.len() {
            return Err(format!("{} has {} rows but the manifest has {} {m} trials", "feature file", features.len(), refs.len()));
        }
        if let Some(i) = refs.iter().zip(&features.labels).position(|(&r, &l)| manifest.entry(r).label != l) {
            return Err(format!("row {i} label {} disagrees with the manifest's {m} trial", features.labels[i]));
        }
        Ok(refs)
    };
    match modality {
        Some(m) => matches(m).map(|r| (m, r)).map_err(|msg| Error::invalid(format!("alignment mismatch: {msg}"))),
        None => {
            let found: Vec<_> = Modality::ALL.into_iter().filter_map(|m| matches(m).ok().map(|r| (m, r))).collect();
            match found.len() {
                1 => Ok(found.into_iter().next().expect("one")),
                0 => Err(Error::invalid("alignment mismatch: feature rows match no modality in the manifest")),
                _ => Err(Error::invalid("feature rows match several modalities; specify one")),
            }
        }
    }
}

fn accuracy(preds: &[usize], truth: &[usize]) -> f64 {
    preds.iter().zip(truth).filter(|(p, t)| p == t).count() as f64 / truth.len() as f64
}

fn rows(features: &FeatureFile, idx: &[usize]) -> Result<Tensor> {
    let data = idx.iter().flat_map(|&i| features.data.row(i).iter().copied()).collect();
    Tensor::new(vec![idx.len(), features.dim()], data)
}

/// Per-subject split, standardise, train and evaluate. Subjects run in
/// parallel; every subject's randomness derives from `seed` and its index,
/// so results do not depend on scheduling.
pub fn train_eval(
    features: &FeatureFile,
    manifest: &Manifest,
    modality: Option<Modality>,
    split: &SplitSpec,
    cfg: &TrainConfig,
) -> Result<RunReport> {
    split.validate()?;
    cfg.validate()?;
    let (modality, refs) = align(features, manifest, modality)?;
    let mut per_subject: Vec<Vec<usize>> = vec![Vec::new(); manifest.subjects.len()];
    for (row, r) in refs.iter().enumerate() {
        per_subject[r.subject].push(row);
    }
    let active: Vec<usize> = (0..per_subject.len()).filter(|&s| !per_subject[s].is_empty()).collect();
    let subjects = active
        .par_iter()
        .map(|&s| {
            let id = &manifest.subjects[s].id;
            let degenerate = |msg: String| Error::invalid(format!("subject `{id}` is degenerate: {msg}"));
            let rows_s = &per_subject[s];
            let labels: Vec<usize> = rows_s.iter().map(|&i| features.labels[i]).collect();
            let (train_local, test_local) = split_trials(&labels, split, s as u64)?;
            if train_local.len() < MIN_TRAIN_TRIALS || test_local.is_empty() {
                return Err(degenerate(format!("{} train / {} test trials", train_local.len(), test_local.len())));
            }
            let train_idx: Vec<usize> = train_local.iter().map(|&i| rows_s[i]).collect();
            let test_idx: Vec<usize> = test_local.iter().map(|&i| rows_s[i]).collect();
            let y_train: Vec<usize> = train_idx.iter().map(|&i| features.labels[i]).collect();
            let y_test: Vec<usize> = test_idx.iter().map(|&i| features.labels[i]).collect();
            let classes = (0..NUM_CLASSES).filter(|k| y_train.contains(k)).count();
            if classes < 2 {
                return Err(degenerate("training split has a single class".into()));
            }
            let subject_cfg = TrainConfig {
                seed: cfg.seed.wrapping_add(s as u64),
                ..cfg.clone()
            };
            let x_train = rows(features, &train_idx)?;
            let model = mlp_for(features.dim(), &subject_cfg)?;
            let trained = train_classifier(&x_train, &y_train, &subject_cfg, model)?;
            let train_pred = trained.predict(&x_train)?;
            let test_pred = trained.predict(&rows(features, &test_idx)?)?;
            let metrics = evaluate_metrics(&test_pred, &y_test)?;
            Ok(SubjectResult {
                id: id.clone(),
                n_train: train_idx.len(),
                n_test: test_idx.len(),
                train_accuracy: accuracy(&train_pred, &y_train),
                accuracy: metrics.accuracy,
                weighted_f1: metrics.weighted_f1,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let accs: Vec<f64> = subjects.iter().map(|s| s.accuracy).collect();
    let f1s: Vec<f64> = subjects.iter().map(|s| s.weighted_f1).collect();
    let (mean_accuracy, std_accuracy) = mean_std(&accs);
    let (mean_weighted_f1, std_weighted_f1) = mean_std(&f1s);
    let generated_at = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map_or(0, |d| d.as_secs());
    Ok(RunReport {
        layout: REPORT_LAYOUT.into(),
        version: REPORT_VERSION.into(),
        generated_at,
        modality,
        feature_dim: features.dim(),
        seed: cfg.seed,
        split: split.clone(),
        config: cfg.clone(),
        generator: manifest.generator.clone(),
        subjects,
        mean_accuracy,
        std_accuracy,
        mean_weighted_f1,
        std_weighted_f1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkit::Rng;
    use crate::pipeline::manifest::{Dtype, SubjectEntry, TrialEntry};

    fn fixture(subjects: usize, trials: usize) -> (FeatureFile, Manifest) {
        let mut rng = Rng::new(1);
        let mut labels = Vec::new();
        let mut data = Vec::new();
        let mut entries = Vec::new();
        for s in 0..subjects {
            let mut trial_entries = Vec::new();
            for t in 0..trials {
                let label = t % NUM_CLASSES;
                labels.push(label);
                for j in 0..8 {
                    let centre = if j == label { 5.0 } else { 0.0 };
                    data.push(centre + rng.normal());
                }
                trial_entries.push(TrialEntry {
                    modality: Modality::Vision,
                    label,
                    path: format!("{s}/{t}").into(),
                    shape: vec![25, 4],
                    dtype: Dtype::F32le,
                });
            }
            entries.push(SubjectEntry {
                id: format!("s{s}"),
                trials: trial_entries,
            });
        }
        let n = labels.len();
        let f = FeatureFile::new(labels, Tensor::new(vec![n, 8], data).unwrap()).unwrap();
        let m = Manifest {
            subjects: entries,
            generator: None,
            root: Default::default(),
        };
        (f, m)
    }

    fn quick() -> TrainConfig {
        TrainConfig {
            epochs: 150,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn separable_fixture() {
        let (f, m) = fixture(3, 60);
        let r = train_eval(&f, &m, None, &SplitSpec::default(), &quick()).unwrap();
        assert_eq!(r.modality, Modality::Vision);
        assert_eq!(r.subjects.len(), 3);
        for s in &r.subjects {
            assert_eq!((s.n_train, s.n_test), (42, 18));
            assert!(s.accuracy > 0.8, "{s:?}");
        }
        let mean = r.subjects.iter().map(|s| s.accuracy).sum::<f64>() / 3.0;
        assert!((r.mean_accuracy - mean).abs() < 1e-12);
    }

    #[test]
    fn deterministic_metrics() {
        let (f, m) = fixture(2, 40);
        let a = train_eval(&f, &m, None, &SplitSpec::default(), &quick()).unwrap();
        let b = train_eval(&f, &m, None, &SplitSpec::default(), &quick()).unwrap();
        assert_eq!(a.subjects, b.subjects);
    }

    #[test]
    fn population_std() {
        let (m, s) = mean_std(&[0.5, 0.7, 0.9]);
        assert!((m - 0.7).abs() < 1e-15);
        assert!((s - (0.08f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(mean_std(&[0.4]).1, 0.0);
    }

    #[test]
    fn misalignment_and_degenerate_subjects() {
        let (f, m) = fixture(2, 40);
        let (short, _) = fixture(1, 40);
        assert!(train_eval(&short, &m, None, &SplitSpec::default(), &quick()).is_err());
        let mut relabelled = f.clone();
        relabelled.labels[3] = (relabelled.labels[3] + 1) % NUM_CLASSES;
        assert!(train_eval(&relabelled, &m, None, &SplitSpec::default(), &quick()).is_err());
        assert!(train_eval(&f, &m, Some(Modality::Eeg), &SplitSpec::default(), &quick()).is_err());
        let (tiny_f, tiny_m) = fixture(1, 8);
        let err = train_eval(&tiny_f, &tiny_m, None, &SplitSpec::default(), &quick()).unwrap_err();
        assert!(err.to_string().contains("degenerate"), "{err}");
    }
}
