use serde::{Deserialize, Serialize};

use crate::eeg::EegTrial;
use crate::error::{Error, Result};
use crate::numkit::{Rng, Tensor};

/// Training-time EEG augmentation: amplitude scaling, circular time shift
/// and additive Gaussian noise scaled by each channel's standard deviation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AugmentSpec {
    pub scale_min: f64,
    pub scale_max: f64,
    pub noise_fraction: f64,
    pub max_shift: usize,
}

impl Default for AugmentSpec {
    fn default() -> Self {
        Self {
            scale_min: 0.9,
            scale_max: 1.1,
            noise_fraction: 0.05,
            max_shift: 50,
        }
    }
}

/// Random quantities drawn for one trial.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AugmentDraw {
    pub scale: f64,
    pub shift: isize,
}

impl AugmentSpec {
    pub fn identity() -> Self {
        Self {
            scale_min: 1.0,
            scale_max: 1.0,
            noise_fraction: 0.0,
            max_shift: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.scale_min > 0.0 && self.scale_min <= self.scale_max && self.scale_max.is_finite()) {
            return Err(Error::invalid(format!(
                "augment scale range [{}, {}] invalid",
                self.scale_min, self.scale_max
            )));
        }
        if !(self.noise_fraction >= 0.0 && self.noise_fraction.is_finite()) {
            return Err(Error::invalid("augment noise fraction must be ≥ 0"));
        }
        Ok(())
    }

    pub fn draw(&self, rng: &mut Rng) -> AugmentDraw {
        let scale = if self.scale_max > self.scale_min {
            rng.uniform_range(self.scale_min, self.scale_max)
        } else {
            self.scale_min
        };
        let m = self.max_shift as i64;
        AugmentDraw {
            scale,
            shift: rng.int_inclusive(-m, m) as isize,
        }
    }
}

/// Rolls every row right by `shift` samples (negative rolls left).
pub fn circular_shift(data: &Tensor, shift: isize) -> Tensor {
    let (c, t) = data.dims2();
    let s = shift.rem_euclid(t as isize) as usize;
    let mut out = Tensor::zeros(&[c, t]);
    for ch in 0..c {
        let src = data.row(ch);
        let dst = out.row_mut(ch);
        dst[s..].copy_from_slice(&src[..t - s]);
        dst[..s].copy_from_slice(&src[t - s..]);
    }
    out
}

/// `scale · shift(x) + noise`, label kept.
pub fn augment_eeg(trial: &EegTrial, spec: &AugmentSpec, rng: &mut Rng) -> Result<EegTrial> {
    let d = spec.draw(rng);
    let x = trial.data();
    let mut out = circular_shift(x, d.shift).scale(d.scale);
    if spec.noise_fraction > 0.0 {
        let (c, t) = x.dims2();
        for ch in 0..c {
            let row = x.row(ch);
            let mean = row.iter().sum::<f64>() / t as f64;
            let std = (row.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / t as f64).sqrt();
            let sigma = spec.noise_fraction * std;
            for v in out.row_mut(ch) {
                *v += sigma * rng.normal();
            }
        }
    }
    trial.with_data(out)
}
