//! Factorized space–time attention: spatial attention within each frame,
//! then temporal attention at each patch position, repeated per block.

use crate::error::{Error, Result};
use crate::numkit::{Rng, Tensor};

use super::grid::{add_positions, axis_backward, axis_forward, check_grid, mean_tokens, position_grads, Axis};
use super::mha::{AttentionCache, AttentionParams};
use super::Parameterized;

#[derive(Clone, Debug, PartialEq)]
pub struct SpaceTimeConfig {
    pub frames: usize,
    pub patches: usize,
    pub dim: usize,
    pub heads: usize,
    pub blocks: usize,
}

impl Default for SpaceTimeConfig {
    fn default() -> Self {
        Self {
            frames: 25,
            patches: 196,
            dim: 32,
            heads: 4,
            blocks: 4,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpaceTimeBlock {
    pub spatial: AttentionParams,
    pub temporal: AttentionParams,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpaceTimeAttention {
    pub config: SpaceTimeConfig,
    /// `[T, D]`
    pub pos_time: Tensor,
    /// `[P, D]`
    pub pos_space: Tensor,
    pub blocks: Vec<SpaceTimeBlock>,
}

#[derive(Clone, Debug)]
pub struct SpaceTimeCache {
    steps: Vec<(Vec<AttentionCache>, Vec<AttentionCache>)>,
}

impl SpaceTimeCache {
    pub fn attention_maps(&self) -> impl Iterator<Item = Tensor> + '_ {
        self.steps
            .iter()
            .flat_map(|(a, b)| a.iter().chain(b))
            .flat_map(|c| (0..c.heads()).map(move |h| c.probs(h)))
    }
}

impl SpaceTimeAttention {
    pub fn new(config: SpaceTimeConfig, rng: &mut Rng) -> Result<Self> {
        if config.frames == 0 || config.patches == 0 || config.blocks == 0 {
            return Err(Error::invalid("space-time attention needs T, P and block count ≥ 1"));
        }
        let d = config.dim;
        let blocks = (0..config.blocks)
            .map(|_| {
                Ok(SpaceTimeBlock {
                    spatial: AttentionParams::new(d, config.heads, rng)?,
                    temporal: AttentionParams::new(d, config.heads, rng)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            pos_time: Tensor::randn(&[config.frames, d], 0.02, rng),
            pos_space: Tensor::randn(&[config.patches, d], 0.02, rng),
            blocks,
            config,
        })
    }

    fn dims(&self) -> (usize, usize, usize) {
        (self.config.frames, self.config.patches, self.config.dim)
    }

    /// `grid: [T, P, D]` → mean-pooled `[D]`.
    pub fn forward(&self, grid: &Tensor) -> Result<(Tensor, SpaceTimeCache)> {
        let (t, p, d) = self.dims();
        check_grid(grid, t, p, d, "space-time attention")?;
        let mut x = add_positions(grid, &self.pos_time, &self.pos_space);
        let mut steps = Vec::with_capacity(self.blocks.len());
        for blk in &self.blocks {
            let (y, cs) = axis_forward(&blk.spatial, &x, self.dims(), Axis::Second)?;
            let (y, ct) = axis_forward(&blk.temporal, &y, self.dims(), Axis::First)?;
            x = y;
            steps.push((cs, ct));
        }
        Ok((Tensor::from_vec(mean_tokens(&x, t * p, d)), SpaceTimeCache { steps }))
    }

    /// Accumulates parameter gradients; returns `d_grid`.
    pub fn backward(&self, cache: &SpaceTimeCache, dout: &Tensor, grads: &mut SpaceTimeAttention) -> Result<Tensor> {
        let (t, p, d) = self.dims();
        let n = t * p;
        let mut dx: Vec<f64> = (0..n).flat_map(|_| dout.data().iter().map(|v| v / n as f64)).collect();
        for (i, blk) in self.blocks.iter().enumerate().rev() {
            let (cs, ct) = &cache.steps[i];
            let g = &mut grads.blocks[i];
            dx = axis_backward(&blk.temporal, ct, &dx, self.dims(), Axis::First, &mut g.temporal)?;
            dx = axis_backward(&blk.spatial, cs, &dx, self.dims(), Axis::Second, &mut g.spatial)?;
        }
        position_grads(&dx, self.dims(), &mut grads.pos_time, &mut grads.pos_space);
        Tensor::new(vec![t, p, d], dx)
    }
}

impl Parameterized for SpaceTimeAttention {
    fn params(&self) -> Vec<&Tensor> {
        let mut p = vec![&self.pos_time, &self.pos_space];
        for b in &self.blocks {
            p.extend(b.spatial.params());
            p.extend(b.temporal.params());
        }
        p
    }

    fn params_mut(&mut self) -> Vec<&mut Tensor> {
        let mut p = vec![&mut self.pos_time, &mut self.pos_space];
        for b in &mut self.blocks {
            p.extend(b.spatial.params_mut());
            p.extend(b.temporal.params_mut());
        }
        p
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn output_shape_and_stochastic_rows() {
        let cfg = SpaceTimeConfig {
            frames: 3,
            patches: 5,
            dim: 8,
            heads: 2,
            blocks: 2,
        };
        let model = SpaceTimeAttention::new(cfg, &mut Rng::new(1)).unwrap();
        let grid = Tensor::randn(&[3, 5, 8], 1.0, &mut Rng::new(2));
        let (out, cache) = model.forward(&grid).unwrap();
        assert_eq!(out.shape(), &[8]);
        let mut maps = 0;
        for p in cache.attention_maps() {
            maps += 1;
            for r in 0..p.shape()[0] {
                assert!((p.row(r).iter().sum::<f64>() - 1.0).abs() < 1e-9);
            }
        }
        assert_eq!(maps, 2 * (3 + 5) * 2);
        assert!(model.forward(&Tensor::zeros(&[3, 4, 8])).is_err());
    }

    #[test]
    fn single_frame_matches_spatial_only_oracle() {
        let cfg = SpaceTimeConfig {
            frames: 1,
            patches: 6,
            dim: 4,
            heads: 2,
            blocks: 3,
        };
        let model = SpaceTimeAttention::new(cfg, &mut Rng::new(5)).unwrap();
        let grid = Tensor::randn(&[1, 6, 4], 1.0, &mut Rng::new(6));
        let (out, _) = model.forward(&grid).unwrap();

        // With one frame every temporal attention row is [1.0], so the block
        // reduces to the value and output projections.
        let mut x = Tensor::new(vec![6, 4], add_positions(&grid, &model.pos_time, &model.pos_space)).unwrap();
        for blk in &model.blocks {
            let (y, _) = blk.spatial.forward(&x, None).unwrap();
            x = y.matmul(&blk.temporal.w_v).unwrap().matmul(&blk.temporal.w_o).unwrap();
        }
        let oracle = Tensor::from_vec(mean_tokens(x.data(), 6, 4));
        assert!(out.max_abs_diff(&oracle) < 1e-12);
    }

    #[test]
    fn uniform_attention_matches_full_attention_oracle() {
        let (t, p, d) = (2, 3, 4);
        let cfg = SpaceTimeConfig {
            frames: t,
            patches: p,
            dim: d,
            heads: 2,
            blocks: 4,
        };
        let mut model = SpaceTimeAttention::new(cfg, &mut Rng::new(7)).unwrap();
        model.pos_time.fill(0.0);
        model.pos_space.fill(0.0);
        let eye = AttentionParams::identity(d, 2).unwrap();
        for blk in &mut model.blocks {
            for a in [&mut blk.spatial, &mut blk.temporal] {
                a.w_k = eye.w_k.clone();
                a.w_v = eye.w_v.clone();
                a.w_o = eye.w_o.clone();
                a.w_q.fill(0.0);
            }
        }
        let grid = Tensor::randn(&[t, p, d], 1.0, &mut Rng::new(8));
        let (out, _) = model.forward(&grid).unwrap();

        let tokens = Tensor::new(vec![t * p, d], grid.data().to_vec()).unwrap();
        let full = AttentionParams {
            w_q: Tensor::zeros(&[d, d]),
            ..eye
        };
        let mut x = tokens;
        for _ in 0..4 {
            x = full.forward(&x, None).unwrap().0;
        }
        let oracle = Tensor::from_vec(mean_tokens(x.data(), t * p, d));
        assert!(out.max_abs_diff(&oracle) < 1e-12);
    }
}
