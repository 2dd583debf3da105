//! Dual (time then frequency) attention over a spectrogram token grid,
//! pooled and skip-gated against a preserved class embedding.

use crate::error::{Error, Result};
use crate::numkit::{Rng, Tensor};

use super::gate::{skip_gate_backward, skip_gate_fuse, SkipGate};
use super::grid::{add_positions, axis_backward, axis_forward, check_grid, mean_tokens, position_grads, Axis};
use super::mha::{AttentionCache, AttentionParams};
use super::Parameterized;

#[derive(Clone, Debug, PartialEq)]
pub struct DualAttentionConfig {
    pub time: usize,
    pub freq: usize,
    pub dim: usize,
    pub heads: usize,
    pub blocks: usize,
    pub gate_init: f64,
}

impl Default for DualAttentionConfig {
    /// 101 × 12 = 1212 tokens, toy width 32.
    fn default() -> Self {
        Self {
            time: 101,
            freq: 12,
            dim: 32,
            heads: 4,
            blocks: 2,
            gate_init: SkipGate::PRETRAINED_INIT,
        }
    }
}

impl DualAttentionConfig {
    pub fn tokens(&self) -> usize {
        self.time * self.freq
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DualBlock {
    pub temporal: AttentionParams,
    pub frequency: AttentionParams,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DualAttention {
    pub config: DualAttentionConfig,
    /// `[T, D]`
    pub pos_time: Tensor,
    /// `[F, D]`
    pub pos_freq: Tensor,
    pub blocks: Vec<DualBlock>,
    /// `[1]`
    pub gate: Tensor,
}

#[derive(Clone, Debug)]
pub struct DualCache {
    steps: Vec<(Vec<AttentionCache>, Vec<AttentionCache>)>,
    pooled: Tensor,
    cls_pre: Tensor,
}

impl DualCache {
    pub fn pooled(&self) -> &Tensor {
        &self.pooled
    }

    /// Every attention matrix produced in the forward pass.
    pub fn attention_maps(&self) -> impl Iterator<Item = Tensor> + '_ {
        self.steps
            .iter()
            .flat_map(|(a, b)| a.iter().chain(b))
            .flat_map(|c| (0..c.heads()).map(move |h| c.probs(h)))
    }
}

impl DualAttention {
    pub fn new(config: DualAttentionConfig, rng: &mut Rng) -> Result<Self> {
        if config.time == 0 || config.freq == 0 || config.blocks == 0 {
            return Err(Error::invalid("dual attention needs T, F and block count ≥ 1"));
        }
        let d = config.dim;
        let blocks = (0..config.blocks)
            .map(|_| {
                Ok(DualBlock {
                    temporal: AttentionParams::new(d, config.heads, rng)?,
                    frequency: AttentionParams::new(d, config.heads, rng)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            pos_time: Tensor::randn(&[config.time, d], 0.02, rng),
            pos_freq: Tensor::randn(&[config.freq, d], 0.02, rng),
            blocks,
            gate: Tensor::full(&[1], config.gate_init),
            config,
        })
    }

    pub fn gate(&self) -> SkipGate {
        SkipGate::new(self.gate.data()[0])
    }

    fn dims(&self) -> (usize, usize, usize) {
        (self.config.time, self.config.freq, self.config.dim)
    }

    /// `grid: [T, F, D]`, `cls_pre: [D]` → `[D]`.
    pub fn forward(&self, grid: &Tensor, cls_pre: &Tensor) -> Result<(Tensor, DualCache)> {
        let (t, f, d) = self.dims();
        check_grid(grid, t, f, d, "dual attention")?;
        if cls_pre.shape() != [d] {
            return Err(Error::shape(format!("cls embedding {:?}, expected [{d}]", cls_pre.shape())));
        }
        let mut x = add_positions(grid, &self.pos_time, &self.pos_freq);
        let mut steps = Vec::with_capacity(self.blocks.len());
        for blk in &self.blocks {
            let (y, ct) = axis_forward(&blk.temporal, &x, self.dims(), Axis::First)?;
            let (y, cf) = axis_forward(&blk.frequency, &y, self.dims(), Axis::Second)?;
            x = y;
            steps.push((ct, cf));
        }
        let pooled = Tensor::from_vec(mean_tokens(&x, t * f, d));
        let out = skip_gate_fuse(cls_pre, &pooled, self.gate())?;
        Ok((
            out,
            DualCache {
                steps,
                pooled,
                cls_pre: cls_pre.clone(),
            },
        ))
    }

    /// Accumulates parameter gradients; returns `(d_grid, d_cls_pre)`.
    pub fn backward(&self, cache: &DualCache, dout: &Tensor, grads: &mut DualAttention) -> Result<(Tensor, Tensor)> {
        let (t, f, d) = self.dims();
        let (dcls, dpooled, dw) = skip_gate_backward(&cache.cls_pre, &cache.pooled, self.gate(), dout);
        grads.gate.data_mut()[0] += dw;
        let n = t * f;
        let mut dx: Vec<f64> = (0..n).flat_map(|_| dpooled.data().iter().map(|v| v / n as f64)).collect();
        for (i, blk) in self.blocks.iter().enumerate().rev() {
            let (ct, cf) = &cache.steps[i];
            let g = &mut grads.blocks[i];
            dx = axis_backward(&blk.frequency, cf, &dx, self.dims(), Axis::Second, &mut g.frequency)?;
            dx = axis_backward(&blk.temporal, ct, &dx, self.dims(), Axis::First, &mut g.temporal)?;
        }
        position_grads(&dx, self.dims(), &mut grads.pos_time, &mut grads.pos_freq);
        Ok((Tensor::new(vec![t, f, d], dx)?, dcls))
    }
}

impl Parameterized for DualAttention {
    fn params(&self) -> Vec<&Tensor> {
        let mut p = vec![&self.pos_time, &self.pos_freq];
        for b in &self.blocks {
            p.extend(b.temporal.params());
            p.extend(b.frequency.params());
        }
        p.push(&self.gate);
        p
    }

    fn params_mut(&mut self) -> Vec<&mut Tensor> {
        let mut p = vec![&mut self.pos_time, &mut self.pos_freq];
        for b in &mut self.blocks {
            p.extend(b.temporal.params_mut());
            p.extend(b.frequency.params_mut());
        }
        p.push(&mut self.gate);
        p
    }
}
