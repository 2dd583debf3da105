//! End-to-end acceptance checks. Each test prints one line:
//! `criterion N <name>: PASS|FAIL (<detail>; <elapsed> of <limit>)`.

use std::time::{Duration, Instant};

use affectkit::attention::{
    attention_cost, gradcheck_suite, param_count, registered_ops, scaled_dot_attention, skip_gate_fuse,
    AttentionParams, DualAttention, DualAttentionConfig, ModelDescriptor, Parameterized, SeBlock, SkipGate,
    SpaceTimeAttention, SpaceTimeConfig, TriStreamConfig, TriStreamModel,
};
use affectkit::audio::{delta_coeffs, AUDIO_FEATURE_DIM, N_CHROMA, N_MELS, N_MFCC};
use affectkit::eeg::{
    alpha_asymmetry, band_power, differential_entropy, welch_psd, EegTrial, Montage, WelchConfig, ALPHA, BANDS,
    EEG_SAMPLING_RATE,
};
use affectkit::pipeline::{
    extract_features, load_manifest, split_trials, synth_dataset, train_eval, ExtractOptions, Modality, SplitSpec,
    SynthSpec, MANIFEST_NAME,
};
use affectkit::train::{
    cross_entropy_logits, double_softmax_ce, evaluate_metrics, fit, predict, MlpClassifier, TrainConfig,
};
use affectkit::{Rng, Tensor, NUM_CLASSES};

fn verdict(n: usize, name: &str, pass: bool, detail: &str, elapsed: Duration, limit: Duration) {
    let ok = pass && elapsed <= limit;
    println!(
        "criterion {n} {name}: {} ({detail}; {:.2}s of {}s)",
        if ok { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64(),
        limit.as_secs()
    );
    assert!(pass, "criterion {n} failed: {detail}");
    assert!(elapsed <= limit, "criterion {n} exceeded its time limit");
}

fn secs(s: u64) -> Duration {
    Duration::from_secs(s)
}

#[test]
fn criterion_01_feature_dimensions() {
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let eeg_m = synth_dataset(&SynthSpec::new(Modality::Eeg, 1, 5, 1), dir.path().join("eeg")).unwrap();
    let audio_m = synth_dataset(&SynthSpec::new(Modality::Audio, 1, 5, 1), dir.path().join("audio")).unwrap();
    let eeg = extract_features(&eeg_m, Modality::Eeg, &ExtractOptions::default()).unwrap();
    let audio = extract_features(&audio_m, Modality::Audio, &ExtractOptions::default()).unwrap();
    let eeg_parts = 30 * BANDS.len() + 30 * BANDS.len() + Montage::default().pairs.len();
    let audio_parts = N_MFCC + N_MFCC + N_CHROMA + N_MELS;
    let pass = eeg.dim() == 306
        && eeg_parts == 306
        && audio.dim() == 220
        && audio_parts == 220
        && AUDIO_FEATURE_DIM == 220
        && eeg.len() == 5
        && audio.len() == 5;
    let detail = format!("eeg {} = 150+150+6, audio {} = 40+40+12+128", eeg.dim(), audio.dim());
    verdict(1, "feature dimensions", pass, &detail, start.elapsed(), secs(10));
}

#[test]
fn criterion_02_dsp_oracles() {
    let start = Instant::now();
    let fs = EEG_SAMPLING_RATE;
    let sine: Vec<f64> = (0..500).map(|t| (2.0 * std::f64::consts::PI * 10.0 * t as f64 / fs).sin()).collect();
    let psd = welch_psd(&sine, fs, &WelchConfig::default()).unwrap();
    let total = psd.total_power();
    let alpha_share = band_power(&psd, &BANDS[ALPHA]).unwrap() / total;

    let n = 1000;
    let scale = ((n - 1) as f64 / n as f64).sqrt();
    let unit: Vec<f64> = (0..n).map(|i| if i % 2 == 0 { scale } else { -scale }).collect();
    let de = differential_entropy(&unit).unwrap();

    let mut rng = Rng::new(2);
    let montage = Montage::default();
    let data = Tensor::randn(&[30, 500], 1.0, &mut rng);
    let mut swapped = data.clone();
    for p in &montage.pairs {
        let (l, r) = (data.row(p.left).to_vec(), data.row(p.right).to_vec());
        swapped.row_mut(p.left).copy_from_slice(&r);
        swapped.row_mut(p.right).copy_from_slice(&l);
    }
    let welch = WelchConfig::default();
    let a = alpha_asymmetry(&EegTrial::new(data, 0).unwrap(), &montage.pairs, &welch).unwrap();
    let b = alpha_asymmetry(&EegTrial::new(swapped, 0).unwrap(), &montage.pairs, &welch).unwrap();
    let antisymmetric = a.iter().zip(&b).all(|(x, y)| *x == -*y);

    let pass = alpha_share >= 0.95 && (total - 0.5).abs() <= 0.05 && (de - 1.41894).abs() < 1e-4 && antisymmetric;
    let detail = format!("alpha share {alpha_share:.4}, total {total:.4}, DE {de:.6}, antisymmetric {antisymmetric}");
    verdict(2, "dsp oracles", pass, &detail, start.elapsed(), secs(5));
}

#[test]
fn criterion_03_delta_formula() {
    let start = Instant::now();
    let window = 2;
    let frames = 12;
    let ramp = Tensor::new(
        vec![frames, 3],
        (0..frames).flat_map(|t| [3.0 * t as f64 - 7.0, -2.0 * t as f64, 0.5 * t as f64]).collect(),
    )
    .unwrap();
    let d = delta_coeffs(&ramp, window).unwrap();
    let ramp_exact = (window..frames - window).all(|t| d.row(t) == [3.0, -2.0, 0.5]);

    let constant = delta_coeffs(&Tensor::full(&[frames, 4], 2.75), window).unwrap();
    let constant_zero = constant.data().iter().all(|&v| v == 0.0);

    // (1·(9 − 1) + 2·(16 − 0)) / (2·(1 + 4)) = 40 / 10
    let squares = Tensor::new(vec![5, 1], vec![0.0, 1.0, 4.0, 9.0, 16.0]).unwrap();
    let hand = delta_coeffs(&squares, 2).unwrap().row(2)[0];

    let pass = ramp_exact && constant_zero && hand == 4.0;
    let detail = format!("ramp slopes exact {ramp_exact}, constant → 0 {constant_zero}, hand case {hand}");
    verdict(3, "delta formula", pass, &detail, start.elapsed(), secs(1));
}

fn rows_sum_to_one(p: &Tensor) -> f64 {
    let (n, _) = p.dims2();
    (0..n).map(|r| (p.row(r).iter().sum::<f64>() - 1.0).abs()).fold(0.0, f64::max)
}

#[test]
fn criterion_04_attention_invariants() {
    let start = Instant::now();
    let mut rng = Rng::new(4);
    let mut worst: f64 = 0.0;
    let mut maps = 0usize;
    let mut check = |p: &Tensor| {
        worst = worst.max(rows_sum_to_one(p));
        maps += 1;
    };

    let (q, k, v) = (
        Tensor::randn(&[7, 8], 3.0, &mut rng),
        Tensor::randn(&[9, 8], 3.0, &mut rng),
        Tensor::randn(&[9, 8], 1.0, &mut rng),
    );
    check(&scaled_dot_attention(&q, &k, &v).unwrap().1);

    let mha = AttentionParams::new(8, 2, &mut rng).unwrap();
    let bias: Vec<f64> = (0..11).map(|j| 0.1 * j as f64).collect();
    let (_, cache) = mha.forward(&Tensor::randn(&[11, 8], 2.0, &mut rng), Some(&bias)).unwrap();
    (0..cache.heads()).for_each(|h| check(&cache.probs(h)));

    let cfg = TriStreamConfig::default();
    let model = TriStreamModel::new(cfg.clone(), &mut rng).unwrap();
    let (_, tc) = model.forward(&Tensor::randn(&[30, 500], 1.0, &mut rng)).unwrap();
    for h in 0..cfg.heads {
        (0..cfg.steps()).for_each(|s| check(&tc.spatial_probs(s, h)));
        (0..cfg.steps()).for_each(|s| check(&tc.asymmetry_probs(s, h)));
        (0..cfg.channels).for_each(|c| check(&tc.temporal_probs(c, h)));
    }

    let dcfg = DualAttentionConfig {
        time: 9,
        freq: 4,
        dim: 8,
        heads: 2,
        ..Default::default()
    };
    let dual = DualAttention::new(dcfg, &mut rng).unwrap();
    let (_, dc) = dual
        .forward(&Tensor::randn(&[9, 4, 8], 1.0, &mut rng), &Tensor::randn(&[8], 1.0, &mut rng))
        .unwrap();
    dc.attention_maps().for_each(|p| check(&p));

    let scfg = SpaceTimeConfig {
        frames: 5,
        patches: 6,
        dim: 8,
        heads: 2,
        blocks: 2,
    };
    let st = SpaceTimeAttention::new(scfg, &mut rng).unwrap();
    let (_, sc) = st.forward(&Tensor::randn(&[5, 6, 8], 1.0, &mut rng)).unwrap();
    sc.attention_maps().for_each(|p| check(&p));

    let gate = SkipGate::new(SkipGate::PRETRAINED_INIT);
    let keep = skip_gate_fuse(&Tensor::full(&[4], 1.0), &Tensor::zeros(&[4]), gate).unwrap().data()[0];
    let take = skip_gate_fuse(&Tensor::zeros(&[4]), &Tensor::full(&[4], 1.0), gate).unwrap().data()[0];
    let conv_share = model.gate().alpha();

    let pass = worst < 1e-9
        && maps > 100
        && (keep - 0.8808).abs() < 1e-5
        && (take - 0.1192).abs() < 1e-5
        && (conv_share - 0.73106).abs() < 1e-5;
    let detail = format!(
        "{maps} maps, max |row sum − 1| {worst:.1e}, skip gate {keep:.5}/{take:.5}, conv gate {conv_share:.5}"
    );
    verdict(4, "attention invariants", pass, &detail, start.elapsed(), secs(5));
}

#[test]
fn criterion_05_cost_factorization() {
    let start = Instant::now();
    let c = attention_cost(25, 196);
    let pass = c.full_entries == 24_010_000 && c.factorized_entries == 1_082_900 && (22.0..=22.4).contains(&c.ratio);
    let detail = format!("full {}, factorized {}, ratio {:.4}", c.full_entries, c.factorized_entries, c.ratio);
    verdict(5, "cost factorization", pass, &detail, start.elapsed(), secs(1));
}

#[test]
fn criterion_06_gradient_verification() {
    let start = Instant::now();
    let results = gradcheck_suite(1).unwrap();
    let worst = results.iter().map(|r| r.max_rel_error).fold(0.0, f64::max);
    let names: Vec<String> = results.iter().map(|r| r.op.clone()).collect();
    let pass = worst < 1e-4 && names == registered_ops() && results.iter().all(|r| r.probes > 0);
    let worst_op = results.iter().max_by(|a, b| a.max_rel_error.total_cmp(&b.max_rel_error)).map_or("", |r| &r.op);
    let detail = format!("{} ops, max relative error {worst:.2e} ({worst_op})", results.len());
    verdict(6, "gradient verification", pass, &detail, start.elapsed(), secs(60));
}

#[test]
fn criterion_07_double_softmax() {
    let start = Instant::now();
    let closed_form = -(std::f64::consts::E / (std::f64::consts::E + 4.0)).ln();
    let mut rng = Rng::new(7);
    let mut floor = f64::INFINITY;
    for i in 0..10_000 {
        let scale = [1.0, 10.0, 100.0][i % 3];
        let logits = Tensor::randn(&[1, NUM_CLASSES], scale, &mut rng);
        let label = rng.below(NUM_CLASSES);
        floor = floor.min(double_softmax_ce(&logits, &[label]).unwrap());
    }
    let mut margin = Tensor::zeros(&[1, NUM_CLASSES]);
    margin.data_mut()[0] = 30.0;
    let correct = cross_entropy_logits(&margin, &[0], 0.0).unwrap().0;
    let pass = floor >= 0.90483 && floor >= closed_form - 1e-12 && correct < 1e-9;
    let detail = format!("double-softmax floor {floor:.6} (closed form {closed_form:.6}), CE at margin 30 {correct:.1e}");
    verdict(7, "double-softmax diagnostic", pass, &detail, start.elapsed(), secs(10));
}

#[test]
fn criterion_08_capacity() {
    let start = Instant::now();
    let mlp = param_count(&ModelDescriptor::mlp(&[306, 128, 64, 5], true));
    let built = MlpClassifier::new(&[306, 128, 64, 5], 0.5, &mut Rng::new(0)).unwrap().num_params();
    let se16 = param_count(&ModelDescriptor::se_block(2048, 16));
    let se1 = param_count(&ModelDescriptor::se_block(2048, 1));
    let formula = |c: usize, r: usize| 2 * c * c / r;
    let pass = mlp == 48_261
        && built == 48_261
        && se16 == 524_288
        && se1 == 8_388_608
        && SeBlock::param_count(2048, 16) == formula(2048, 16)
        && SeBlock::param_count(64, 4) == formula(64, 4);
    let detail = format!("mlp {mlp} (built {built}), SE r=16 {se16}, r=1 {se1}");
    verdict(8, "capacity accounting", pass, &detail, start.elapsed(), secs(1));
}

/// Independent counting oracle: accuracy and support-weighted F1.
fn oracle(preds: &[usize], truth: &[usize]) -> (f64, f64) {
    let n = truth.len() as f64;
    let correct = preds.iter().zip(truth).filter(|(p, t)| p == t).count() as f64;
    let mut weighted = 0.0;
    for k in 0..NUM_CLASSES {
        let tp = preds.iter().zip(truth).filter(|&(&p, &t)| p == k && t == k).count() as f64;
        let predicted = preds.iter().filter(|&&p| p == k).count() as f64;
        let support = truth.iter().filter(|&&t| t == k).count() as f64;
        let precision = if predicted > 0.0 { tp / predicted } else { 0.0 };
        let recall = if support > 0.0 { tp / support } else { 0.0 };
        let f1 = if precision + recall > 0.0 { 2.0 * precision * recall / (precision + recall) } else { 0.0 };
        weighted += f1 * support / n;
    }
    (correct / n, weighted)
}

#[test]
fn criterion_09_metrics_oracle() {
    let start = Instant::now();
    let mut rng = Rng::new(9);
    let truth: Vec<usize> = (0..1000).map(|_| rng.below(NUM_CLASSES)).collect();
    let preds: Vec<usize> = truth
        .iter()
        .map(|&t| if rng.uniform() < 0.6 { t } else { rng.below(NUM_CLASSES) })
        .collect();
    let r = evaluate_metrics(&preds, &truth).unwrap();
    let (acc, wf1) = oracle(&preds, &truth);
    let agree = (r.accuracy - acc).abs() < 1e-12 && (r.weighted_f1 - wf1).abs() < 1e-12;
    let worked = evaluate_metrics(&[0, 1, 1, 1, 2], &[0, 0, 1, 1, 2]).unwrap();
    let pass = agree && (worked.accuracy - 0.8).abs() < 1e-12 && (worked.weighted_f1 - 0.78667).abs() < 1e-5;
    let detail = format!(
        "oracle agreement {agree} (acc {acc:.4}, wF1 {wf1:.4}); worked example {:.4}/{:.5}",
        worked.accuracy, worked.weighted_f1
    );
    verdict(9, "metrics oracle", pass, &detail, start.elapsed(), secs(5));
}

/// Training epochs shared by the MLP and the tri-stream model.
const SMALL_SAMPLE_EPOCHS: usize = 10;
const SMALL_SAMPLE_SEEDS: [u64; 5] = [7, 8, 9, 10, 11];

#[test]
fn criterion_10_small_sample_finding() {
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let manifest = synth_dataset(&SynthSpec::new(Modality::Eeg, 5, 400, 7), dir.path()).unwrap();
    let features = extract_features(&manifest, Modality::Eeg, &ExtractOptions::default()).unwrap();
    let raw: Vec<Vec<Tensor>> = manifest
        .subjects
        .iter()
        .enumerate()
        .map(|(s, subj)| {
            (0..subj.trials.len())
                .map(|t| manifest.read_tensor(affectkit::pipeline::TrialRef { subject: s, trial: t }).unwrap())
                .collect()
        })
        .collect();
    let accuracy = |p: &[usize], t: &[usize]| p.iter().zip(t).filter(|(a, b)| a == b).count() as f64 / t.len() as f64;

    let (mut mlp_acc, mut tri_test, mut tri_train) = (0.0, 0.0, 0.0);
    let mut per_seed = Vec::new();
    for seed in SMALL_SAMPLE_SEEDS {
        let cfg = TrainConfig {
            epochs: SMALL_SAMPLE_EPOCHS,
            seed,
            ..TrainConfig::default()
        };
        let split = SplitSpec::new(0.7, seed).unwrap();
        let report = train_eval(&features, &manifest, Some(Modality::Eeg), &split, &cfg).unwrap();

        // same split, optimiser, schedule, epochs and per-subject seed as train_eval
        let (mut te_sum, mut tr_sum) = (0.0, 0.0);
        for (s, subj) in manifest.subjects.iter().enumerate() {
            let labels: Vec<usize> = subj.trials.iter().map(|t| t.label).collect();
            let (train, test) = split_trials(&labels, &split, s as u64).unwrap();
            let subject_cfg = TrainConfig {
                seed: seed.wrapping_add(s as u64),
                ..cfg.clone()
            };
            let mut model =
                TriStreamModel::new(TriStreamConfig::default(), &mut Rng::stream(subject_cfg.seed, 0)).unwrap();
            let x_train: Vec<Tensor> = train.iter().map(|&i| raw[s][i].clone()).collect();
            let x_test: Vec<Tensor> = test.iter().map(|&i| raw[s][i].clone()).collect();
            let y_train: Vec<usize> = train.iter().map(|&i| labels[i]).collect();
            let y_test: Vec<usize> = test.iter().map(|&i| labels[i]).collect();
            fit(&mut model, &x_train, &y_train, &subject_cfg, None).unwrap();
            tr_sum += accuracy(&predict(&model, &x_train).unwrap(), &y_train);
            te_sum += accuracy(&predict(&model, &x_test).unwrap(), &y_test);
        }
        let n = manifest.subjects.len() as f64;
        per_seed.push(format!(
            "seed {seed}: mlp {:.3}, tri {:.3}/{:.3}",
            report.mean_accuracy,
            tr_sum / n,
            te_sum / n
        ));
        mlp_acc += report.mean_accuracy;
        tri_test += te_sum / n;
        tri_train += tr_sum / n;
    }
    let k = SMALL_SAMPLE_SEEDS.len() as f64;
    let (mlp_acc, tri_test, tri_train) = (mlp_acc / k, tri_test / k, tri_train / k);
    let pass = mlp_acc >= 0.90 && mlp_acc - tri_test >= 0.10 && tri_train - tri_test > 0.20;
    for line in &per_seed {
        println!("  {line}");
    }
    let detail = format!(
        "mlp test {mlp_acc:.3}; tri-stream train {tri_train:.3}, test {tri_test:.3} (gap {:.3}, deficit {:.3})",
        tri_train - tri_test,
        mlp_acc - tri_test
    );
    verdict(10, "small-sample finding", pass, &detail, start.elapsed(), secs(15 * 60));
}

#[test]
fn criterion_11_determinism() {
    let start = Instant::now();
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let spec = SynthSpec::new(Modality::Eeg, 2, 30, 11);
    synth_dataset(&spec, a.path()).unwrap();
    synth_dataset(&spec, b.path()).unwrap();
    let ma = load_manifest(a.path().join(MANIFEST_NAME)).unwrap();
    let mb = load_manifest(b.path().join(MANIFEST_NAME)).unwrap();
    let data_identical = ma.subjects.iter().flat_map(|s| &s.trials).all(|t| {
        std::fs::read(a.path().join(&t.path)).unwrap() == std::fs::read(b.path().join(&t.path)).unwrap()
    });

    let opts = ExtractOptions::default();
    let fa = extract_features(&ma, Modality::Eeg, &opts).unwrap();
    let fb = extract_features(&mb, Modality::Eeg, &opts).unwrap();
    let (pa, pb) = (a.path().join("f.eavf"), b.path().join("f.eavf"));
    fa.save(&pa).unwrap();
    fb.save(&pb).unwrap();
    let features_identical = std::fs::read(&pa).unwrap() == std::fs::read(&pb).unwrap();

    let cfg = TrainConfig {
        epochs: 20,
        seed: 3,
        ..TrainConfig::default()
    };
    let split = SplitSpec::new(0.7, 3).unwrap();
    let mut ra = train_eval(&fa, &ma, None, &split, &cfg).unwrap();
    let mut rb = train_eval(&fb, &mb, None, &split, &cfg).unwrap();
    let metrics_identical = ra.subjects == rb.subjects
        && ra.mean_accuracy == rb.mean_accuracy
        && ra.std_accuracy == rb.std_accuracy;
    ra.generated_at = 0;
    rb.generated_at = 0;
    let reports_identical = ra.to_json() == rb.to_json();

    let pass = data_identical && features_identical && metrics_identical && reports_identical;
    let detail = format!(
        "data {data_identical}, feature files {features_identical}, metrics {metrics_identical}, reports {reports_identical}"
    );
    verdict(11, "determinism", pass, &detail, start.elapsed(), secs(5 * 60));
}
