use serde::{Deserialize, Serialize};

use crate::attention::{Parameterized, TriStreamCache, TriStreamModel};
use crate::error::{Error, Result};
use crate::numkit::{Rng, Tensor};

use super::augment::AugmentSpec;
use super::loss::cross_entropy_logits;
use super::mlp::{MlpCache, MlpClassifier};
use super::optim::{cosine_lr, AdamW};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr_max: f64,
    pub lr_min: f64,
    pub weight_decay: f64,
    pub label_smoothing: f64,
    pub seed: u64,
    /// Z-score features with training-split statistics.
    pub standardize: bool,
    pub hidden: Vec<usize>,
    pub dropout: f64,
    /// Raw-trial augmentation; ignored by feature-vector models.
    pub augment: Option<AugmentSpec>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 100,
            batch_size: 32,
            lr_max: 1e-3,
            lr_min: 1e-5,
            weight_decay: 0.01,
            label_smoothing: 0.1,
            seed: 0,
            standardize: true,
            hidden: vec![128, 64],
            dropout: 0.5,
            augment: None,
        }
    }
}

impl TrainConfig {
    pub fn eeg() -> Self {
        Self::default()
    }

    pub fn audio() -> Self {
        Self {
            weight_decay: 1e-4,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::invalid(m));
        if self.epochs == 0 || self.batch_size == 0 {
            return bad("epochs and batch size must be positive".into());
        }
        if !(self.lr_max > 0.0 && self.lr_min >= 0.0 && self.lr_min <= self.lr_max && self.lr_max.is_finite()) {
            return bad(format!("learning rates must satisfy 0 ≤ lr_min ≤ lr_max, 0 < lr_max ({} / {})", self.lr_min, self.lr_max));
        }
        if !(0.0..1.0).contains(&self.label_smoothing) {
            return bad(format!("label smoothing {} outside [0, 1)", self.label_smoothing));
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return bad(format!("weight decay {} must be ≥ 0", self.weight_decay));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad(format!("dropout {} outside [0, 1)", self.dropout));
        }
        if self.hidden.contains(&0) {
            return bad("hidden widths must be positive".into());
        }
        if let Some(a) = &self.augment {
            a.validate()?;
        }
        Ok(())
    }

    /// Full MLP widths for an input of `dim` features.
    pub fn widths(&self, dim: usize) -> Vec<usize> {
        let mut w = vec![dim];
        w.extend(&self.hidden);
        w.push(crate::NUM_CLASSES);
        w
    }
}

/// A model trainable by [`fit`].
pub trait Classifier: Parameterized {
    type Input;
    type Cache;

    /// Smallest batch the training-mode forward accepts.
    fn min_batch(&self) -> usize {
        1
    }

    fn forward_train(&mut self, batch: &[&Self::Input], rng: &mut Rng) -> Result<(Tensor, Self::Cache)>;

    /// Gradients in [`Parameterized::params`] order for upstream `dlogits [B, 5]`.
    fn backward(&self, cache: &Self::Cache, dlogits: &Tensor) -> Result<Vec<Tensor>>;

    fn predict_logits(&self, batch: &[&Self::Input]) -> Result<Tensor>;
}

fn stack(rows: &[&Vec<f64>]) -> Result<Tensor> {
    let dim = rows.first().map_or(0, |r| r.len());
    if rows.iter().any(|r| r.len() != dim) {
        return Err(Error::shape("feature rows differ in length"));
    }
    Tensor::new(vec![rows.len(), dim], rows.iter().flat_map(|r| r.iter().copied()).collect())
}

impl Classifier for MlpClassifier {
    type Input = Vec<f64>;
    type Cache = MlpCache;

    fn min_batch(&self) -> usize {
        if self.norms.is_empty() {
            1
        } else {
            2
        }
    }

    fn forward_train(&mut self, batch: &[&Vec<f64>], rng: &mut Rng) -> Result<(Tensor, MlpCache)> {
        MlpClassifier::forward_train(self, &stack(batch)?, rng)
    }

    fn backward(&self, cache: &MlpCache, dlogits: &Tensor) -> Result<Vec<Tensor>> {
        Ok(MlpClassifier::backward(self, cache, dlogits))
    }

    fn predict_logits(&self, batch: &[&Vec<f64>]) -> Result<Tensor> {
        MlpClassifier::predict_logits(self, &stack(batch)?)
    }
}

impl Classifier for TriStreamModel {
    type Input = Tensor;
    type Cache = Vec<TriStreamCache>;

    fn forward_train(&mut self, batch: &[&Tensor], _rng: &mut Rng) -> Result<(Tensor, Vec<TriStreamCache>)> {
        let mut logits = Vec::with_capacity(batch.len() * crate::NUM_CLASSES);
        let mut caches = Vec::with_capacity(batch.len());
        for x in batch {
            let (l, c) = self.forward(x)?;
            logits.extend_from_slice(l.data());
            caches.push(c);
        }
        Ok((Tensor::new(vec![batch.len(), crate::NUM_CLASSES], logits)?, caches))
    }

    fn backward(&self, caches: &Vec<TriStreamCache>, dlogits: &Tensor) -> Result<Vec<Tensor>> {
        let mut g = self.zeros_like();
        for (i, c) in caches.iter().enumerate() {
            TriStreamModel::backward(self, c, dlogits.row(i), &mut g)?;
        }
        Ok(g.into_grads())
    }

    fn predict_logits(&self, batch: &[&Tensor]) -> Result<Tensor> {
        let mut logits = Vec::with_capacity(batch.len() * crate::NUM_CLASSES);
        for x in batch {
            logits.extend_from_slice(self.forward(x)?.0.data());
        }
        Tensor::new(vec![batch.len(), crate::NUM_CLASSES], logits)
    }
}

/// Per-epoch training record.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct History {
    /// Mean training-mode loss over the epoch's samples.
    pub epoch_loss: Vec<f64>,
    pub epoch_lr: Vec<f64>,
}

/// Per-sample input transform applied to training batches only.
pub type Augmenter<'a, I> = &'a dyn Fn(&I, &mut Rng) -> Result<I>;

/// Minibatch AdamW training with cosine-annealed learning rate and
/// label-smoothed cross-entropy. Deterministic for a fixed `cfg.seed`.
pub fn fit<M: Classifier>(
    model: &mut M,
    inputs: &[M::Input],
    labels: &[usize],
    cfg: &TrainConfig,
    augment: Option<Augmenter<'_, M::Input>>,
) -> Result<History> {
    cfg.validate()?;
    if inputs.len() != labels.len() {
        return Err(Error::shape(format!("{} inputs for {} labels", inputs.len(), labels.len())));
    }
    if inputs.len() < model.min_batch() {
        return Err(Error::invalid("not enough training samples"));
    }
    let mut rng = Rng::stream(cfg.seed, 1);
    let mut opt = AdamW::new(cfg.weight_decay);
    let mut order: Vec<usize> = (0..inputs.len()).collect();
    let mut history = History::default();
    for epoch in 0..cfg.epochs {
        let lr = cosine_lr(epoch, cfg.epochs, cfg.lr_max, cfg.lr_min)?;
        rng.shuffle(&mut order);
        let mut total = 0.0;
        let mut seen = 0;
        for chunk in order.chunks(cfg.batch_size) {
            if chunk.len() < model.min_batch() {
                continue;
            }
            let augmented: Vec<M::Input>;
            let batch: Vec<&M::Input> = match augment {
                Some(f) => {
                    augmented = chunk.iter().map(|&i| f(&inputs[i], &mut rng)).collect::<Result<_>>()?;
                    augmented.iter().collect()
                }
                None => chunk.iter().map(|&i| &inputs[i]).collect(),
            };
            let y: Vec<usize> = chunk.iter().map(|&i| labels[i]).collect();
            let (logits, cache) = model.forward_train(&batch, &mut rng)?;
            let (loss, dlogits) = cross_entropy_logits(&logits, &y, cfg.label_smoothing)?;
            if !loss.is_finite() {
                return Err(Error::NonFinite(format!("training loss at epoch {epoch}")));
            }
            let grads = model.backward(&cache, &dlogits)?;
            opt.step(&mut model.params_mut(), &grads, lr)?;
            total += loss * chunk.len() as f64;
            seen += chunk.len();
        }
        history.epoch_loss.push(total / seen.max(1) as f64);
        history.epoch_lr.push(lr);
    }
    Ok(history)
}

/// Arg-max class per input, evaluated in inference mode.
pub fn predict<M: Classifier>(model: &M, inputs: &[M::Input]) -> Result<Vec<usize>> {
    let mut out = Vec::with_capacity(inputs.len());
    for chunk in inputs.chunks(256) {
        let refs: Vec<&M::Input> = chunk.iter().collect();
        let logits = model.predict_logits(&refs)?;
        for r in 0..chunk.len() {
            let row = logits.row(r);
            let best = (0..row.len()).fold(0, |b, k| if row[k] > row[b] { k } else { b });
            out.push(best);
        }
    }
    Ok(out)
}

/// Per-feature z-score from training rows. Zero-variance features keep unit scale.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    pub fn fit(rows: &Tensor) -> Self {
        let (n, d) = rows.dims2();
        let mut mean = vec![0.0; d];
        let mut scale = vec![0.0; d];
        for j in 0..d {
            let m = (0..n).map(|i| rows.data()[i * d + j]).sum::<f64>() / n as f64;
            let var = (0..n).map(|i| (rows.data()[i * d + j] - m).powi(2)).sum::<f64>() / n as f64;
            mean[j] = m;
            scale[j] = if var > 0.0 { var.sqrt() } else { 1.0 };
        }
        Self { mean, scale }
    }

    pub fn identity(d: usize) -> Self {
        Self {
            mean: vec![0.0; d],
            scale: vec![1.0; d],
        }
    }

    pub fn apply_row(&self, row: &[f64]) -> Vec<f64> {
        row.iter().zip(&self.mean).zip(&self.scale).map(|((v, m), s)| (v - m) / s).collect()
    }

    pub fn apply(&self, rows: &Tensor) -> Vec<Vec<f64>> {
        (0..rows.shape()[0]).map(|i| self.apply_row(rows.row(i))).collect()
    }
}

/// Trained feature-vector classifier together with its input scaling.
#[derive(Clone, Debug)]
pub struct TrainedMlp {
    pub model: MlpClassifier,
    pub standardizer: Standardizer,
    pub history: History,
}

impl TrainedMlp {
    pub fn predict(&self, features: &Tensor) -> Result<Vec<usize>> {
        predict(&self.model, &self.standardizer.apply(features))
    }
}

/// Fresh MLP for `dim` inputs, initialised from `cfg.seed`.
pub fn mlp_for(dim: usize, cfg: &TrainConfig) -> Result<MlpClassifier> {
    MlpClassifier::new(&cfg.widths(dim), cfg.dropout, &mut Rng::stream(cfg.seed, 0))
}

/// Standardises `features` (training statistics) and trains `model` on them.
pub fn train_classifier(features: &Tensor, labels: &[usize], cfg: &TrainConfig, mut model: MlpClassifier) -> Result<TrainedMlp> {
    cfg.validate()?;
    if features.rank() != 2 {
        return Err(Error::shape("features must be [N, dim]"));
    }
    let (n, d) = features.dims2();
    if n < 10 {
        return Err(Error::invalid(format!("need at least 10 training samples, got {n}")));
    }
    if d != model.input_dim() {
        return Err(Error::shape(format!("features have {d} dims, model expects {}", model.input_dim())));
    }
    if !features.all_finite() {
        return Err(Error::NonFinite("training features".into()));
    }
    let standardizer = if cfg.standardize {
        Standardizer::fit(features)
    } else {
        Standardizer::identity(d)
    };
    let rows = standardizer.apply(features);
    let history = fit(&mut model, &rows, labels, cfg, None)?;
    Ok(TrainedMlp {
        model,
        standardizer,
        history,
    })
}
