use crate::error::{Error, Result};
use crate::numkit::{sigmoid, Rng, Tensor};

use super::Parameterized;

/// Squeeze-and-excitation: `s = σ(W2·ReLU(W1·z))`, `z` the per-channel mean,
/// each channel rescaled by `s_c`. No biases.
#[derive(Clone, Debug, PartialEq)]
pub struct SeBlock {
    /// `[C/r, C]`
    pub w1: Tensor,
    /// `[C, C/r]`
    pub w2: Tensor,
    reduction: usize,
}

/// Forward intermediates of [`SeBlock::forward`].
#[derive(Clone, Debug)]
pub struct SeCache {
    z: Vec<f64>,
    a1: Vec<f64>,
    h: Vec<f64>,
    s: Vec<f64>,
}

impl SeCache {
    pub fn scales(&self) -> &[f64] {
        &self.s
    }
}

impl SeBlock {
    pub fn new(channels: usize, reduction: usize, rng: &mut Rng) -> Result<Self> {
        Self::check(channels, reduction)?;
        let hidden = channels / reduction;
        Ok(Self {
            w1: Tensor::randn(&[hidden, channels], 1.0 / (channels as f64).sqrt(), rng),
            w2: Tensor::randn(&[channels, hidden], 1.0 / (hidden as f64).sqrt(), rng),
            reduction,
        })
    }

    pub fn zeros(channels: usize, reduction: usize) -> Result<Self> {
        Self::check(channels, reduction)?;
        let hidden = channels / reduction;
        Ok(Self {
            w1: Tensor::zeros(&[hidden, channels]),
            w2: Tensor::zeros(&[channels, hidden]),
            reduction,
        })
    }

    fn check(channels: usize, reduction: usize) -> Result<()> {
        if channels == 0 || reduction == 0 || channels % reduction != 0 {
            return Err(Error::invalid(format!(
                "SE block needs r ≥ 1 dividing C (C = {channels}, r = {reduction})"
            )));
        }
        Ok(())
    }

    pub fn channels(&self) -> usize {
        self.w1.shape()[1]
    }

    pub fn reduction(&self) -> usize {
        self.reduction
    }

    /// `2·C²/r`
    pub fn param_count(channels: usize, reduction: usize) -> usize {
        2 * channels * channels / reduction
    }

    /// `x: [C, L]`.
    pub fn forward(&self, x: &Tensor) -> Result<(Tensor, SeCache)> {
        let c = self.channels();
        if x.rank() != 2 || x.shape()[0] != c {
            return Err(Error::shape(format!("SE block over {c} channels applied to {:?}", x.shape())));
        }
        let l = x.shape()[1];
        let hidden = c / self.reduction;
        let z: Vec<f64> = (0..c).map(|ch| x.row(ch).iter().sum::<f64>() / l as f64).collect();
        let a1: Vec<f64> = (0..hidden).map(|i| self.w1.row(i).iter().zip(&z).map(|(w, v)| w * v).sum()).collect();
        let h: Vec<f64> = a1.iter().map(|v| v.max(0.0)).collect();
        let s: Vec<f64> = (0..c)
            .map(|ch| sigmoid(self.w2.row(ch).iter().zip(&h).map(|(w, v)| w * v).sum()))
            .collect();
        let mut y = x.clone();
        for (ch, sc) in s.iter().enumerate() {
            for v in y.row_mut(ch) {
                *v *= sc;
            }
        }
        Ok((y, SeCache { z, a1, h, s }))
    }

    pub fn backward(&self, x: &Tensor, cache: &SeCache, dy: &Tensor, grads: &mut SeBlock) -> Tensor {
        let (c, l) = x.dims2();
        let hidden = c / self.reduction;
        let mut dx = dy.clone();
        let mut da2 = vec![0.0; c];
        for ch in 0..c {
            let ds: f64 = x.row(ch).iter().zip(dy.row(ch)).map(|(a, b)| a * b).sum();
            let s = cache.s[ch];
            da2[ch] = ds * s * (1.0 - s);
            for v in dx.row_mut(ch) {
                *v *= s;
            }
        }
        let mut dh = vec![0.0; hidden];
        for ch in 0..c {
            for i in 0..hidden {
                grads.w2.data_mut()[ch * hidden + i] += da2[ch] * cache.h[i];
                dh[i] += self.w2.data()[ch * hidden + i] * da2[ch];
            }
        }
        let mut dz = vec![0.0; c];
        for i in 0..hidden {
            let da1 = if cache.a1[i] > 0.0 { dh[i] } else { 0.0 };
            for ch in 0..c {
                grads.w1.data_mut()[i * c + ch] += da1 * cache.z[ch];
                dz[ch] += self.w1.data()[i * c + ch] * da1;
            }
        }
        for ch in 0..c {
            let g = dz[ch] / l as f64;
            for v in dx.row_mut(ch) {
                *v += g;
            }
        }
        dx
    }
}

impl Parameterized for SeBlock {
    fn params(&self) -> Vec<&Tensor> {
        vec![&self.w1, &self.w2]
    }

    fn params_mut(&mut self) -> Vec<&mut Tensor> {
        vec![&mut self.w1, &mut self.w2]
    }
}
