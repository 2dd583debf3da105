//! Tri-stream EEG attention: a per-electrode conv front-end feeding spatial,
//! temporal and hemispheric-asymmetry attention streams.
//!
//! Data flow for one trial `[C, T]`:
//!
//! 1. Each electrode's signal goes through the same conv stack
//!    (`1 → F_1 → … → F_L`, ReLU) and is average-pooled over windows of
//!    `pool` samples, giving `U: [C, T', F]`.
//! 2. Spatial stream: attention across the `C` electrodes at every `t'`.
//!    Temporal stream: attention across the `T'` steps of every electrode.
//!    Asymmetry stream: attention across the pair differences
//!    `U[right] − U[left]` at every `t'`, with the F3-F4 key column
//!    reweighted by `frontal_weight` and rows renormalised.
//! 3. Each stream output and the conv features `U` are flattened and
//!    linearly projected to `embed_dim`.
//! 4. `z = Σ softmax(fusion)_i · e_i`, then `b = (1−α)·z + α·e_conv`
//!    with `α = σ(gate)`, and a linear head gives 5 logits.

use serde::{Deserialize, Serialize};

use crate::eeg::{EegTrial, HemispherePair, Montage, EEG_CHANNELS, EEG_SAMPLES};
use crate::error::{Error, Result};
use crate::numkit::{conv1d, conv1d_backward, softmax_backward_slice, softmax_slice, Rng, Tensor};
use crate::NUM_CLASSES;

use super::gate::SkipGate;
use super::layers::Linear;
use super::mha::{AttentionCache, AttentionParams};
use super::Parameterized;

/// Where the asymmetry stream takes its pair differences from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AsymmetrySource {
    /// Differences of pooled conv features (default).
    ConvFeatures,
    /// Differences of raw signals, then passed through the conv front-end.
    Raw,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TriStreamConfig {
    pub channels: usize,
    pub samples: usize,
    /// Output features of each conv layer; the last entry is the token width `F`.
    pub conv_dims: Vec<usize>,
    pub kernel: usize,
    /// Average-pooling window over time after the conv stack.
    pub pool: usize,
    pub heads: usize,
    pub embed_dim: usize,
    /// Attention weight multiplier on the frontal pair; 1.0 disables it.
    pub frontal_weight: f64,
    pub asymmetry_source: AsymmetrySource,
    pub pairs: Vec<HemispherePair>,
    pub gate_init: f64,
}

impl Default for TriStreamConfig {
    fn default() -> Self {
        Self {
            channels: EEG_CHANNELS,
            samples: EEG_SAMPLES,
            conv_dims: vec![4],
            kernel: 11,
            pool: 20,
            heads: 2,
            embed_dim: 16,
            frontal_weight: 1.2,
            asymmetry_source: AsymmetrySource::ConvFeatures,
            pairs: Montage::default().pairs,
            gate_init: SkipGate::CONV_INIT,
        }
    }
}

impl TriStreamConfig {
    /// Small shapes for gradient checks.
    pub fn tiny() -> Self {
        Self {
            samples: 24,
            conv_dims: vec![2, 2],
            kernel: 3,
            pool: 6,
            heads: 1,
            embed_dim: 3,
            ..Self::default()
        }
    }

    pub fn features(&self) -> usize {
        *self.conv_dims.last().unwrap_or(&0)
    }

    pub fn steps(&self) -> usize {
        self.samples / self.pool.max(1)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::invalid(m));
        if self.conv_dims.is_empty() || self.conv_dims.contains(&0) {
            return bad(format!("conv dims must be non-empty and positive: {:?}", self.conv_dims));
        }
        if self.kernel % 2 == 0 {
            return bad(format!("conv kernel {} must be odd", self.kernel));
        }
        if self.pool == 0 || self.samples == 0 || self.samples % self.pool != 0 {
            return bad(format!("pool window {} must divide {} samples", self.pool, self.samples));
        }
        if self.heads == 0 || self.features() % self.heads != 0 {
            return bad(format!("{} heads do not divide {} conv features", self.heads, self.features()));
        }
        if self.embed_dim == 0 {
            return bad("embed_dim must be positive".into());
        }
        if !(self.frontal_weight > 0.0 && self.frontal_weight.is_finite()) {
            return bad(format!("frontal weight {} must be positive", self.frontal_weight));
        }
        if self.pairs.len() != 6 {
            return bad(format!("pair list needs 6 entries, got {}", self.pairs.len()));
        }
        if let Some(p) = self.pairs.iter().find(|p| p.left >= self.channels || p.right >= self.channels) {
            return bad(format!("pair {} references a channel outside 0..{}", p.name, self.channels));
        }
        Ok(())
    }

    /// Additive logit bias per pair; equivalent to weight-then-renormalise.
    fn pair_bias(&self) -> Vec<f64> {
        self.pairs
            .iter()
            .map(|p| if p.frontal { self.frontal_weight.ln() } else { 0.0 })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TriStreamModel {
    pub config: TriStreamConfig,
    pub conv_w: Vec<Tensor>,
    pub conv_b: Vec<Tensor>,
    pub spatial: AttentionParams,
    pub temporal: AttentionParams,
    pub asymmetry: AttentionParams,
    pub proj_spatial: Linear,
    pub proj_temporal: Linear,
    pub proj_asymmetry: Linear,
    pub proj_conv: Linear,
    /// `[3]`: spatial, temporal, asymmetry.
    pub fusion: Tensor,
    /// `[1]`: skip gate weight for the conv path.
    pub gate: Tensor,
    pub head: Linear,
}

/// One signal through the conv stack and pooling.
#[derive(Clone, Debug)]
struct FrontCache {
    /// Input to each layer.
    inputs: Vec<Tensor>,
    /// Post-ReLU output of each layer.
    outputs: Vec<Tensor>,
}

/// Everything [`TriStreamModel::backward`] needs.
#[derive(Clone, Debug)]
pub struct TriStreamCache {
    fronts: Vec<FrontCache>,
    pair_fronts: Vec<FrontCache>,
    u: Vec<f64>,
    diffs: Vec<f64>,
    spatial: Vec<AttentionCache>,
    temporal: Vec<AttentionCache>,
    asymmetry: Vec<AttentionCache>,
    flats: [Vec<f64>; 4],
    embeds: [Vec<f64>; 4],
    weights: Vec<f64>,
    fused: Vec<f64>,
    blended: Vec<f64>,
}

impl TriStreamCache {
    /// Post-renormalisation asymmetry attention of head `h` at step `t`.
    pub fn asymmetry_probs(&self, t: usize, h: usize) -> Tensor {
        self.asymmetry[t].probs(h)
    }

    pub fn spatial_probs(&self, t: usize, h: usize) -> Tensor {
        self.spatial[t].probs(h)
    }

    pub fn temporal_probs(&self, c: usize, h: usize) -> Tensor {
        self.temporal[c].probs(h)
    }

    /// Flattened stream outputs: spatial, temporal, asymmetry.
    pub fn stream_output(&self, i: usize) -> &[f64] {
        &self.flats[i]
    }

    /// Conv features `U` flattened as `[C, T', F]`.
    pub fn conv_features(&self) -> &[f64] {
        &self.u
    }

    /// Asymmetry-stream inputs flattened as `[pairs, T', F]`.
    pub fn pair_differences(&self) -> &[f64] {
        &self.diffs
    }

    pub fn fusion_weights(&self) -> &[f64] {
        &self.weights
    }
}

const SPATIAL: usize = 0;
const TEMPORAL: usize = 1;
const ASYM: usize = 2;
const CONV: usize = 3;

impl TriStreamModel {
    pub fn new(config: TriStreamConfig, rng: &mut Rng) -> Result<Self> {
        config.validate()?;
        let mut conv_w = Vec::new();
        let mut conv_b = Vec::new();
        let mut c_in = 1;
        for &c_out in &config.conv_dims {
            let fan_in = (c_in * config.kernel) as f64;
            conv_w.push(Tensor::uniform(&[c_out, c_in, config.kernel], (6.0 / fan_in).sqrt(), rng));
            conv_b.push(Tensor::uniform(&[c_out], 1.0 / fan_in.sqrt(), rng));
            c_in = c_out;
        }
        let f = config.features();
        let tokens = config.channels * config.steps() * f;
        let pair_tokens = config.pairs.len() * config.steps() * f;
        let e = config.embed_dim;
        Ok(Self {
            spatial: AttentionParams::new(f, config.heads, rng)?,
            temporal: AttentionParams::new(f, config.heads, rng)?,
            asymmetry: AttentionParams::new(f, config.heads, rng)?,
            proj_spatial: Linear::new(tokens, e, rng),
            proj_temporal: Linear::new(tokens, e, rng),
            proj_asymmetry: Linear::new(pair_tokens, e, rng),
            proj_conv: Linear::new(tokens, e, rng),
            fusion: Tensor::zeros(&[3]),
            gate: Tensor::full(&[1], config.gate_init),
            head: Linear::new(e, NUM_CLASSES, rng),
            conv_w,
            conv_b,
            config,
        })
    }

    /// Softmax of the fusion logits.
    pub fn fusion_weights(&self) -> Vec<f64> {
        let mut w = self.fusion.data().to_vec();
        softmax_slice(&mut w);
        w
    }

    pub fn gate(&self) -> SkipGate {
        SkipGate::new(self.gate.data()[0])
    }

    /// Conv stack and pooling for one signal; returns pooled tokens `[T', F]`.
    fn front(&self, signal: &[f64]) -> Result<(Vec<f64>, FrontCache)> {
        let pad = self.config.kernel / 2;
        let mut x = Tensor::new(vec![1, signal.len()], signal.to_vec())?;
        let mut cache = FrontCache {
            inputs: Vec::new(),
            outputs: Vec::new(),
        };
        for (w, b) in self.conv_w.iter().zip(&self.conv_b) {
            let mut y = conv1d(&x, w, pad)?;
            let t = y.shape()[1];
            for (o, bias) in b.data().iter().enumerate() {
                for v in &mut y.data_mut()[o * t..(o + 1) * t] {
                    *v = (*v + bias).max(0.0);
                }
            }
            cache.inputs.push(x);
            x = y.clone();
            cache.outputs.push(y);
        }
        let (f, t) = x.dims2();
        let pool = self.config.pool;
        let steps = t / pool;
        let mut pooled = vec![0.0; steps * f];
        for ch in 0..f {
            let row = x.row(ch);
            for s in 0..steps {
                pooled[s * f + ch] = row[s * pool..(s + 1) * pool].iter().sum::<f64>() / pool as f64;
            }
        }
        Ok((pooled, cache))
    }

    fn front_backward(&self, cache: &FrontCache, dpooled: &[f64], grads: &mut TriStreamModel) -> Result<()> {
        let f = self.config.features();
        let pool = self.config.pool;
        let t = self.config.samples;
        let mut dy = vec![0.0; f * t];
        for ch in 0..f {
            for s in 0..t / pool {
                let g = dpooled[s * f + ch] / pool as f64;
                for v in &mut dy[ch * t + s * pool..ch * t + (s + 1) * pool] {
                    *v = g;
                }
            }
        }
        let pad = self.config.kernel / 2;
        let mut dy = Tensor::new(vec![f, t], dy)?;
        for l in (0..self.conv_w.len()).rev() {
            let out = &cache.outputs[l];
            for (g, y) in dy.data_mut().iter_mut().zip(out.data()) {
                if *y <= 0.0 {
                    *g = 0.0;
                }
            }
            for o in 0..dy.shape()[0] {
                grads.conv_b[l].data_mut()[o] += dy.row(o).iter().sum::<f64>();
            }
            let (dx, dw) = conv1d_backward(&cache.inputs[l], &self.conv_w[l], pad, &dy)?;
            grads.conv_w[l].axpy(1.0, &dw)?;
            dy = dx;
        }
        Ok(())
    }

    fn check_input(&self, x: &Tensor) -> Result<()> {
        let shape = x.shape();
        if shape != [self.config.channels, self.config.samples] {
            return Err(Error::shape(format!(
                "tri-stream model expects [{}, {}], trial is {:?}",
                self.config.channels, self.config.samples, shape
            )));
        }
        Ok(())
    }

    pub fn forward_trial(&self, trial: &EegTrial) -> Result<(Tensor, TriStreamCache)> {
        self.forward(trial.data())
    }

    /// `x: [channels, samples]` → logits `[5]` plus the cache for
    /// [`TriStreamModel::backward`].
    pub fn forward(&self, x: &Tensor) -> Result<(Tensor, TriStreamCache)> {
        self.check_input(x)?;
        let cfg = &self.config;
        let (c, steps, f) = (cfg.channels, cfg.steps(), cfg.features());
        let np = cfg.pairs.len();

        let mut u = Vec::with_capacity(c * steps * f);
        let mut fronts = Vec::with_capacity(c);
        for ch in 0..c {
            let (p, fc) = self.front(x.row(ch))?;
            u.extend_from_slice(&p);
            fronts.push(fc);
        }
        let at = |ch: usize, s: usize| (ch * steps + s) * f;

        let mut diffs = Vec::with_capacity(np * steps * f);
        let mut pair_fronts = Vec::new();
        for pair in &cfg.pairs {
            match cfg.asymmetry_source {
                AsymmetrySource::ConvFeatures => {
                    for s in 0..steps {
                        for k in 0..f {
                            diffs.push(u[at(pair.right, s) + k] - u[at(pair.left, s) + k]);
                        }
                    }
                }
                AsymmetrySource::Raw => {
                    let d: Vec<f64> = x
                        .row(pair.right)
                        .iter()
                        .zip(x.row(pair.left))
                        .map(|(r, l)| r - l)
                        .collect();
                    let (p, fc) = self.front(&d)?;
                    diffs.extend_from_slice(&p);
                    pair_fronts.push(fc);
                }
            }
        }

        let mut s_out = vec![0.0; c * steps * f];
        let mut spatial = Vec::with_capacity(steps);
        for s in 0..steps {
            let mut tokens = Vec::with_capacity(c * f);
            for ch in 0..c {
                tokens.extend_from_slice(&u[at(ch, s)..at(ch, s) + f]);
            }
            let (y, cache) = self.spatial.forward(&Tensor::new(vec![c, f], tokens)?, None)?;
            for ch in 0..c {
                s_out[at(ch, s)..at(ch, s) + f].copy_from_slice(y.row(ch));
            }
            spatial.push(cache);
        }

        let mut t_out = Vec::with_capacity(c * steps * f);
        let mut temporal = Vec::with_capacity(c);
        for ch in 0..c {
            let tokens = Tensor::new(vec![steps, f], u[at(ch, 0)..at(ch, 0) + steps * f].to_vec())?;
            let (y, cache) = self.temporal.forward(&tokens, None)?;
            t_out.extend_from_slice(y.data());
            temporal.push(cache);
        }

        let bias = cfg.pair_bias();
        let mut a_out = vec![0.0; np * steps * f];
        let mut asymmetry = Vec::with_capacity(steps);
        for s in 0..steps {
            let mut tokens = Vec::with_capacity(np * f);
            for p in 0..np {
                tokens.extend_from_slice(&diffs[at(p, s)..at(p, s) + f]);
            }
            let (y, cache) = self.asymmetry.forward(&Tensor::new(vec![np, f], tokens)?, Some(&bias))?;
            for p in 0..np {
                a_out[at(p, s)..at(p, s) + f].copy_from_slice(y.row(p));
            }
            asymmetry.push(cache);
        }

        let flats = [s_out, t_out, a_out, u.clone()];
        let projs = self.projections();
        let embeds: [Vec<f64>; 4] = std::array::from_fn(|i| projs[i].forward_vec(&flats[i]));
        let weights = self.fusion_weights();
        let e = cfg.embed_dim;
        let fused: Vec<f64> = (0..e).map(|k| (0..3).map(|i| weights[i] * embeds[i][k]).sum()).collect();
        let alpha = self.gate().alpha();
        let blended: Vec<f64> = fused
            .iter()
            .zip(&embeds[CONV])
            .map(|(z, ec)| (1.0 - alpha) * z + alpha * ec)
            .collect();
        let logits = Tensor::from_vec(self.head.forward_vec(&blended));
        if !logits.all_finite() {
            return Err(Error::NonFinite("tri-stream logits".into()));
        }
        let cache = TriStreamCache {
            fronts,
            pair_fronts,
            u,
            diffs,
            spatial,
            temporal,
            asymmetry,
            flats,
            embeds,
            weights,
            fused,
            blended,
        };
        Ok((logits, cache))
    }

    fn projections(&self) -> [&Linear; 4] {
        [&self.proj_spatial, &self.proj_temporal, &self.proj_asymmetry, &self.proj_conv]
    }

    /// Accumulates parameter gradients for upstream `dlogits` into `grads`.
    pub fn backward(&self, cache: &TriStreamCache, dlogits: &[f64], grads: &mut TriStreamModel) -> Result<()> {
        let cfg = &self.config;
        let (c, steps, f) = (cfg.channels, cfg.steps(), cfg.features());
        let np = cfg.pairs.len();
        let at = |ch: usize, s: usize| (ch * steps + s) * f;

        let dblend = self.head.backward_vec(&cache.blended, dlogits, &mut grads.head);
        let alpha = self.gate().alpha();
        let dgate: f64 = alpha
            * (1.0 - alpha)
            * dblend
                .iter()
                .zip(&cache.embeds[CONV])
                .zip(&cache.fused)
                .map(|((d, ec), z)| d * (ec - z))
                .sum::<f64>();
        grads.gate.data_mut()[0] += dgate;
        let dfused: Vec<f64> = dblend.iter().map(|d| (1.0 - alpha) * d).collect();
        let dconv_embed: Vec<f64> = dblend.iter().map(|d| alpha * d).collect();

        let dweights: Vec<f64> = (0..3)
            .map(|i| cache.embeds[i].iter().zip(&dfused).map(|(e, d)| e * d).sum())
            .collect();
        let dlog = softmax_backward_slice(&cache.weights, &dweights);
        for (g, d) in grads.fusion.data_mut().iter_mut().zip(dlog) {
            *g += d;
        }

        let dembeds: [Vec<f64>; 4] = std::array::from_fn(|i| {
            if i == CONV {
                dconv_embed.clone()
            } else {
                dfused.iter().map(|d| cache.weights[i] * d).collect()
            }
        });
        let ds = self.proj_spatial.backward_vec(&cache.flats[SPATIAL], &dembeds[SPATIAL], &mut grads.proj_spatial);
        let dt = self.proj_temporal.backward_vec(&cache.flats[TEMPORAL], &dembeds[TEMPORAL], &mut grads.proj_temporal);
        let da = self.proj_asymmetry.backward_vec(&cache.flats[ASYM], &dembeds[ASYM], &mut grads.proj_asymmetry);
        let mut du = self.proj_conv.backward_vec(&cache.flats[CONV], &dembeds[CONV], &mut grads.proj_conv);

        for s in 0..steps {
            let mut dy = Vec::with_capacity(c * f);
            for ch in 0..c {
                dy.extend_from_slice(&ds[at(ch, s)..at(ch, s) + f]);
            }
            let dx = self.spatial.backward(&cache.spatial[s], &Tensor::new(vec![c, f], dy)?, &mut grads.spatial);
            for ch in 0..c {
                for (g, v) in du[at(ch, s)..at(ch, s) + f].iter_mut().zip(dx.row(ch)) {
                    *g += v;
                }
            }
        }

        for ch in 0..c {
            let dy = Tensor::new(vec![steps, f], dt[at(ch, 0)..at(ch, 0) + steps * f].to_vec())?;
            let dx = self.temporal.backward(&cache.temporal[ch], &dy, &mut grads.temporal);
            for (g, v) in du[at(ch, 0)..at(ch, 0) + steps * f].iter_mut().zip(dx.data()) {
                *g += v;
            }
        }

        let mut ddiff = vec![0.0; np * steps * f];
        for s in 0..steps {
            let mut dy = Vec::with_capacity(np * f);
            for p in 0..np {
                dy.extend_from_slice(&da[at(p, s)..at(p, s) + f]);
            }
            let dx = self.asymmetry.backward(&cache.asymmetry[s], &Tensor::new(vec![np, f], dy)?, &mut grads.asymmetry);
            for p in 0..np {
                ddiff[at(p, s)..at(p, s) + f].copy_from_slice(dx.row(p));
            }
        }
        match cfg.asymmetry_source {
            AsymmetrySource::ConvFeatures => {
                for (p, pair) in cfg.pairs.iter().enumerate() {
                    for s in 0..steps {
                        for k in 0..f {
                            let g = ddiff[at(p, s) + k];
                            du[at(pair.right, s) + k] += g;
                            du[at(pair.left, s) + k] -= g;
                        }
                    }
                }
            }
            AsymmetrySource::Raw => {
                for (p, fc) in cache.pair_fronts.iter().enumerate() {
                    self.front_backward(fc, &ddiff[at(p, 0)..at(p, 0) + steps * f], grads)?;
                }
            }
        }

        for (ch, fc) in cache.fronts.iter().enumerate() {
            self.front_backward(fc, &du[at(ch, 0)..at(ch, 0) + steps * f], grads)?;
        }
        Ok(())
    }
}

impl Parameterized for TriStreamModel {
    fn params(&self) -> Vec<&Tensor> {
        let mut p: Vec<&Tensor> = Vec::new();
        for (w, b) in self.conv_w.iter().zip(&self.conv_b) {
            p.push(w);
            p.push(b);
        }
        p.extend(self.spatial.params());
        p.extend(self.temporal.params());
        p.extend(self.asymmetry.params());
        p.extend(self.proj_spatial.params());
        p.extend(self.proj_temporal.params());
        p.extend(self.proj_asymmetry.params());
        p.extend(self.proj_conv.params());
        p.push(&self.fusion);
        p.push(&self.gate);
        p.extend(self.head.params());
        p
    }

    fn params_mut(&mut self) -> Vec<&mut Tensor> {
        let mut p: Vec<&mut Tensor> = Vec::new();
        for (w, b) in self.conv_w.iter_mut().zip(self.conv_b.iter_mut()) {
            p.push(w);
            p.push(b);
        }
        p.extend(self.spatial.params_mut());
        p.extend(self.temporal.params_mut());
        p.extend(self.asymmetry.params_mut());
        p.extend(self.proj_spatial.params_mut());
        p.extend(self.proj_temporal.params_mut());
        p.extend(self.proj_asymmetry.params_mut());
        p.extend(self.proj_conv.params_mut());
        p.push(&mut self.fusion);
        p.push(&mut self.gate);
        p.extend(self.head.params_mut());
        p
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attention::mha::reweight_columns;
    use proptest::prelude::*;
    use crate::numkit::Rng;

    fn small_cfg() -> TriStreamConfig {
        TriStreamConfig {
            samples: 60,
            conv_dims: vec![3, 4],
            kernel: 5,
            pool: 10,
            heads: 2,
            embed_dim: 6,
            ..TriStreamConfig::default()
        }
    }

    fn input(cfg: &TriStreamConfig, seed: u64) -> Tensor {
        Tensor::randn(&[cfg.channels, cfg.samples], 1.0, &mut Rng::new(seed))
    }

    #[test]
    fn default_forward_on_a_trial() {
        let model = TriStreamModel::new(TriStreamConfig::default(), &mut Rng::new(1)).unwrap();
        let trial = EegTrial::new(Tensor::randn(&[30, 500], 1.0, &mut Rng::new(2)), 3).unwrap();
        let (logits, cache) = model.forward_trial(&trial).unwrap();
        assert_eq!(logits.shape(), &[5]);
        assert_eq!(cache.conv_features().len(), 30 * 25 * 4);
        assert!(model.forward(&Tensor::zeros(&[30, 499])).is_err());
    }

    #[test]
    fn equal_fusion_logits_are_uniform() {
        let mut model = TriStreamModel::new(small_cfg(), &mut Rng::new(1)).unwrap();
        model.fusion = Tensor::full(&[3], 0.7);
        for w in model.fusion_weights() {
            assert!((w - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn conv_gate_carries_73_percent() {
        let model = TriStreamModel::new(small_cfg(), &mut Rng::new(1)).unwrap();
        assert!((model.gate().alpha() - 0.73106).abs() < 1e-5);
    }

    /// Direct loops: per-electrode conv stack with ReLU, then window means.
    fn conv_oracle(model: &TriStreamModel, x: &Tensor) -> Vec<f64> {
        let cfg = &model.config;
        let pad = cfg.kernel as isize / 2;
        let mut flat = Vec::new();
        for ch in 0..cfg.channels {
            let mut h: Vec<Vec<f64>> = vec![x.row(ch).to_vec()];
            for (w, b) in model.conv_w.iter().zip(&model.conv_b) {
                let (c_out, c_in, k) = (w.shape()[0], w.shape()[1], w.shape()[2]);
                let mut next = vec![vec![0.0; cfg.samples]; c_out];
                for o in 0..c_out {
                    for t in 0..cfg.samples {
                        let mut acc = b.data()[o];
                        for i in 0..c_in {
                            for tap in 0..k {
                                let s = t as isize + tap as isize - pad;
                                if s >= 0 && (s as usize) < cfg.samples {
                                    acc += w.get(&[o, i, tap]) * h[i][s as usize];
                                }
                            }
                        }
                        next[o][t] = acc.max(0.0);
                    }
                }
                h = next;
            }
            for s in 0..cfg.steps() {
                for row in &h {
                    flat.push(row[s * cfg.pool..(s + 1) * cfg.pool].iter().sum::<f64>() / cfg.pool as f64);
                }
            }
        }
        flat
    }

    #[test]
    fn silenced_streams_leave_the_gated_conv_path() {
        let mut model = TriStreamModel::new(small_cfg(), &mut Rng::new(3)).unwrap();
        model.conv_b[0] = Tensor::full(&[3], 0.1);
        for a in [&mut model.spatial, &mut model.temporal, &mut model.asymmetry] {
            a.w_o.fill(0.0);
        }
        for p in [&mut model.proj_spatial, &mut model.proj_temporal, &mut model.proj_asymmetry] {
            p.b.fill(0.0);
        }
        let x = input(&model.config, 4);
        let (logits, cache) = model.forward(&x).unwrap();
        for i in 0..3 {
            assert!(cache.stream_output(i).iter().all(|&v| v == 0.0));
        }
        let u = conv_oracle(&model, &x);
        let e = model.proj_conv.forward_vec(&u);
        let alpha = sigmoid_ref(model.gate.data()[0]);
        let blended: Vec<f64> = e.iter().map(|v| alpha * v).collect();
        let oracle = model.head.forward_vec(&blended);
        for (a, b) in logits.data().iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    fn sigmoid_ref(w: f64) -> f64 {
        1.0 / (1.0 + (-w).exp())
    }

    #[test]
    fn frontal_weight_reweights_only_the_frontal_column() {
        let cfg = small_cfg();
        let plain_cfg = TriStreamConfig {
            frontal_weight: 1.0,
            ..cfg.clone()
        };
        let model = TriStreamModel::new(cfg, &mut Rng::new(5)).unwrap();
        let plain = TriStreamModel {
            config: plain_cfg,
            ..model.clone()
        };
        let x = input(&model.config, 6);
        let (_, weighted) = model.forward(&x).unwrap();
        let (_, unweighted) = plain.forward(&x).unwrap();
        let (np, f) = (6, model.config.features());
        let steps = model.config.steps();

        let mut col = vec![1.0; np];
        col[crate::eeg::FRONTAL_PAIR] = 1.2;
        for s in 0..steps {
            let mut tokens = Vec::new();
            for p in 0..np {
                tokens.extend_from_slice(&unweighted.pair_differences()[(p * steps + s) * f..(p * steps + s + 1) * f]);
            }
            let (y, oracle) = model.asymmetry.forward(&Tensor::new(vec![np, f], tokens).unwrap(), None).unwrap();
            for p in 0..np {
                let got = &unweighted.stream_output(2)[(p * steps + s) * f..(p * steps + s + 1) * f];
                for (a, b) in got.iter().zip(y.row(p)) {
                    assert!((a - b).abs() < 1e-12);
                }
            }
            for h in 0..model.config.heads {
                assert!(unweighted.asymmetry_probs(s, h).max_abs_diff(&oracle.probs(h)) < 1e-12);
                let want = reweight_columns(&oracle.probs(h), &col);
                let got = weighted.asymmetry_probs(s, h);
                assert!(got.max_abs_diff(&want) < 1e-12);
                for r in 0..np {
                    assert!((got.row(r).iter().sum::<f64>() - 1.0).abs() < 1e-9);
                    assert!(got.get(&[r, 1]) > oracle.probs(h).get(&[r, 1]));
                }
            }
        }
        // Streams that never see the pair bias are unaffected.
        assert_eq!(weighted.stream_output(0), unweighted.stream_output(0));
        assert_eq!(weighted.stream_output(1), unweighted.stream_output(1));
    }

    #[test]
    fn every_attention_row_is_stochastic() {
        let model = TriStreamModel::new(small_cfg(), &mut Rng::new(7)).unwrap();
        let (_, cache) = model.forward(&input(&model.config, 8)).unwrap();
        let heads = model.config.heads;
        let check = |p: Tensor| {
            for r in 0..p.shape()[0] {
                assert!((p.row(r).iter().sum::<f64>() - 1.0).abs() < 1e-9);
            }
        };
        for h in 0..heads {
            for s in 0..model.config.steps() {
                check(cache.spatial_probs(s, h));
                check(cache.asymmetry_probs(s, h));
            }
            for c in 0..30 {
                check(cache.temporal_probs(c, h));
            }
        }
    }

    #[test]
    fn raw_asymmetry_source_runs_through_the_front_end() {
        let cfg = TriStreamConfig {
            asymmetry_source: AsymmetrySource::Raw,
            ..small_cfg()
        };
        let raw = TriStreamModel::new(cfg, &mut Rng::new(9)).unwrap();
        let feat = TriStreamModel {
            config: small_cfg(),
            ..raw.clone()
        };
        let x = input(&raw.config, 10);
        let (a, _) = raw.forward(&x).unwrap();
        let (b, _) = feat.forward(&x).unwrap();
        assert!(a.all_finite());
        assert!(a.max_abs_diff(&b) > 0.0);
    }

    #[test]
    fn invalid_configs_rejected() {
        let bad = [
            TriStreamConfig { kernel: 4, ..small_cfg() },
            TriStreamConfig { pool: 7, ..small_cfg() },
            TriStreamConfig { heads: 3, ..small_cfg() },
            TriStreamConfig { conv_dims: vec![], ..small_cfg() },
            TriStreamConfig { frontal_weight: 0.0, ..small_cfg() },
            TriStreamConfig { pairs: Montage::default().pairs[..5].to_vec(), ..small_cfg() },
        ];
        for cfg in bad {
            assert!(TriStreamModel::new(cfg, &mut Rng::new(0)).is_err());
        }
    }

    proptest! {
        #[test]
        fn fusion_weights_on_simplex(a in -50.0f64..50.0, b in -50.0f64..50.0, c in -50.0f64..50.0) {
            let mut model = TriStreamModel::new(TriStreamConfig::tiny(), &mut Rng::new(0)).unwrap();
            model.fusion = Tensor::from_vec(vec![a, b, c]);
            let w = model.fusion_weights();
            prop_assert!(w.iter().all(|&v| (0.0..=1.0).contains(&v)));
            prop_assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }
}
