//! EEG feature extraction: Welch band power, band-limited differential
//! entropy and frontal/hemispheric alpha asymmetry.
//!
//! A trial is 30 channels × 500 samples at 100 Hz. The resulting vector has
//! 306 entries laid out as
//!
//! ```text
//! [0, 150)    band power  P[c, b]   channel-major, band-minor
//! [150, 300)  diff. entropy DE[c, b] same order
//! [300, 306)  alpha asymmetry, one per hemisphere pair
//! ```

mod bands;
mod features;
mod montage;
mod welch;

pub use bands::{BandDef, ALPHA, BANDS};
pub use features::{
    alpha_asymmetry, brickwall_bandpass, differential_entropy, extract_eeg_features,
    extract_eeg_features_with, EegFeatureVector, FeatureConfig, ASYM_OFFSET, DE_OFFSET,
    EEG_FEATURE_DIM,
};
pub use montage::{HemispherePair, Montage, DEFAULT_CHANNELS, DEFAULT_PAIRS, FRONTAL_PAIR};
pub use welch::{band_power, welch_psd, Psd, WelchConfig};

use crate::error::{Error, Result};
use crate::numkit::Tensor;

pub const EEG_CHANNELS: usize = 30;
pub const EEG_SAMPLES: usize = 500;
pub const EEG_SAMPLING_RATE: f64 = 100.0;

/// Floor applied to variances and powers before taking logarithms.
pub const LOG_FLOOR: f64 = 1e-12;

/// One EEG segment: 30 channels × 500 samples at 100 Hz.
#[derive(Clone, Debug, PartialEq)]
pub struct EegTrial {
    data: Tensor,
    pub label: usize,
}

impl EegTrial {
    pub fn new(data: Tensor, label: usize) -> Result<Self> {
        if data.shape() != [EEG_CHANNELS, EEG_SAMPLES] {
            return Err(Error::shape(format!(
                "EEG trial must be [{EEG_CHANNELS}, {EEG_SAMPLES}], got {:?}",
                data.shape()
            )));
        }
        if !data.all_finite() {
            return Err(Error::NonFinite("EEG trial".into()));
        }
        if label >= crate::NUM_CLASSES {
            return Err(Error::invalid(format!("label {label} out of range 0..5")));
        }
        Ok(Self { data, label })
    }

    pub fn data(&self) -> &Tensor {
        &self.data
    }

    pub fn channel(&self, c: usize) -> &[f64] {
        self.data.row(c)
    }

    pub fn sampling_rate(&self) -> f64 {
        EEG_SAMPLING_RATE
    }

    /// Replaces the signal, keeping the label. The shape must not change.
    pub fn with_data(&self, data: Tensor) -> Result<Self> {
        Self::new(data, self.label)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trial_contract() {
        assert!(EegTrial::new(Tensor::zeros(&[30, 500]), 4).is_ok());
        assert!(EegTrial::new(Tensor::zeros(&[30, 499]), 0).is_err());
        assert!(EegTrial::new(Tensor::zeros(&[30, 500]), 5).is_err());
        let mut t = Tensor::zeros(&[30, 500]);
        t.data_mut()[7] = f64::NAN;
        assert!(EegTrial::new(t, 0).is_err());
    }
}
