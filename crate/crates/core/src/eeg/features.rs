use crate::error::{Error, Result};
use crate::numkit::{dft_real, idft_real, Tensor};

use super::bands::ALPHA;
use super::{
    band_power, welch_psd, BandDef, EegTrial, HemispherePair, Montage, WelchConfig, BANDS,
    EEG_CHANNELS, LOG_FLOOR,
};

pub const EEG_FEATURE_DIM: usize = 306;
pub const DE_OFFSET: usize = 150;
pub const ASYM_OFFSET: usize = 300;

#[derive(Clone, Debug, Default)]
pub struct FeatureConfig {
    pub welch: WelchConfig,
    pub montage: Montage,
}

/// 306-dim EEG descriptor; see the module docs for the layout.
#[derive(Clone, Debug, PartialEq)]
pub struct EegFeatureVector {
    pub values: Tensor,
}

impl EegFeatureVector {
    pub fn band_power(&self, channel: usize, band: usize) -> f64 {
        self.values.data()[channel * BANDS.len() + band]
    }

    pub fn entropy(&self, channel: usize, band: usize) -> f64 {
        self.values.data()[DE_OFFSET + channel * BANDS.len() + band]
    }

    pub fn asymmetry(&self, pair: usize) -> f64 {
        self.values.data()[ASYM_OFFSET + pair]
    }
}

/// Ideal band-pass: zeroes every DFT bin whose frequency lies outside
/// `[f_low, f_high]` and transforms back. Zero-phase and idempotent.
pub fn brickwall_bandpass(signal: &[f64], band: &BandDef, fs: f64) -> Result<Vec<f64>> {
    band.validate(fs)?;
    let mut spec = dft_real(signal, fs)?;
    for (k, bin) in spec.bins.iter_mut().enumerate() {
        let f = k as f64 * spec.bin_hz;
        if f < band.f_low || f > band.f_high {
            *bin = Default::default();
        }
    }
    Ok(idft_real(&spec))
}

/// Gaussian differential entropy `½·ln(2πe·σ²)` from the unbiased sample
/// variance, floored at [`LOG_FLOOR`].
pub fn differential_entropy(band_signal: &[f64]) -> Result<f64> {
    let n = band_signal.len();
    if n < 2 {
        return Err(Error::invalid(format!(
            "differential entropy needs at least 2 samples, got {n}"
        )));
    }
    let mean = band_signal.iter().sum::<f64>() / n as f64;
    let var = band_signal.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    Ok(0.5 * (2.0 * std::f64::consts::PI * std::f64::consts::E * var.max(LOG_FLOOR)).ln())
}

fn alpha_power(signal: &[f64], fs: f64, welch: &WelchConfig) -> Result<f64> {
    band_power(&welch_psd(signal, fs, welch)?, &BANDS[ALPHA])
}

fn log_ratio(right: f64, left: f64) -> f64 {
    right.max(LOG_FLOOR).ln() - left.max(LOG_FLOOR).ln()
}

/// `ln P_right^α − ln P_left^α` for each pair.
pub fn alpha_asymmetry(
    trial: &EegTrial,
    pairs: &[HemispherePair],
    welch: &WelchConfig,
) -> Result<Vec<f64>> {
    let fs = trial.sampling_rate();
    pairs
        .iter()
        .map(|p| {
            if p.left >= EEG_CHANNELS || p.right >= EEG_CHANNELS {
                return Err(Error::invalid(format!("pair {} indexes past channel 29", p.name)));
            }
            let left = alpha_power(trial.channel(p.left), fs, welch)?;
            let right = alpha_power(trial.channel(p.right), fs, welch)?;
            Ok(log_ratio(right, left))
        })
        .collect()
}

/// Default-configuration 306-dim feature vector.
pub fn extract_eeg_features(trial: &EegTrial) -> Result<EegFeatureVector> {
    extract_eeg_features_with(trial, &FeatureConfig::default())
}

pub fn extract_eeg_features_with(
    trial: &EegTrial,
    cfg: &FeatureConfig,
) -> Result<EegFeatureVector> {
    let fs = trial.sampling_rate();
    let n_bands = BANDS.len();
    let mut values = vec![0.0; EEG_FEATURE_DIM];
    for c in 0..EEG_CHANNELS {
        let x = trial.channel(c);
        let psd = welch_psd(x, fs, &cfg.welch)?;
        for (b, band) in BANDS.iter().enumerate() {
            values[c * n_bands + b] = band_power(&psd, band)?;
            let filtered = brickwall_bandpass(x, band, fs)?;
            values[DE_OFFSET + c * n_bands + b] = differential_entropy(&filtered)?;
        }
    }
    // reuse the α band powers computed above
    for (i, p) in cfg.montage.pairs.iter().enumerate() {
        let left = values[p.left * n_bands + ALPHA];
        let right = values[p.right * n_bands + ALPHA];
        values[ASYM_OFFSET + i] = log_ratio(right, left);
    }
    Ok(EegFeatureVector {
        values: Tensor::from_vec(values),
    })
}
