//! Audio features: log-mel spectrogram, MFCC, delta-MFCC and chroma, each
//! averaged over time into a 220-dim vector, plus SpecAugment masking.
//!
//! Framing is 25 ms / 10 ms (400 / 160 samples at 16 kHz) with a symmetric
//! Hann window zero-padded to a 512-point DFT; a 5 s clip yields 498 frames.

mod chroma;
mod delta;
mod mel;
mod mfcc;
mod specaugment;
mod stft;

pub use chroma::{chroma, pitch_class, CHROMA_FMIN};
pub use delta::{delta_coeffs, DEFAULT_DELTA_WINDOW};
pub use mel::{hz_to_mel, mel_spectrogram, mel_to_hz, MelFilterbank};
pub use mfcc::{dct_ii_ortho, dct_iii_ortho, mfcc, MEL_LOG_FLOOR};
pub use specaugment::{spec_augment, Mask, MaskAxis, SpecAugmentConfig};
pub use stft::{frame_count, stft_frames};

use crate::error::{Error, Result};
use crate::numkit::Tensor;

pub const SAMPLE_RATE: f64 = 16_000.0;
pub const CLIP_SAMPLES: usize = 80_000;
pub const FRAME_LEN: usize = 400;
pub const HOP: usize = 160;
pub const N_FFT: usize = 512;
pub const N_MELS: usize = 128;
pub const N_MFCC: usize = 40;
pub const N_CHROMA: usize = 12;
pub const AUDIO_FEATURE_DIM: usize = N_MFCC * 2 + N_CHROMA + N_MELS;

/// Five seconds of 16 kHz mono audio.
#[derive(Clone, Debug, PartialEq)]
pub struct AudioClip {
    samples: Vec<f64>,
    pub label: usize,
}

impl AudioClip {
    pub fn new(samples: Vec<f64>, label: usize) -> Result<Self> {
        if samples.len() != CLIP_SAMPLES {
            return Err(Error::shape(format!(
                "audio clip must have {CLIP_SAMPLES} samples, got {}",
                samples.len()
            )));
        }
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("audio clip".into()));
        }
        if label >= crate::NUM_CLASSES {
            return Err(Error::invalid(format!("label {label} out of range 0..5")));
        }
        Ok(Self { samples, label })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }
}

/// 220-dim time-averaged descriptor:
/// `[0,40)` MFCC, `[40,80)` ΔMFCC, `[80,92)` chroma, `[92,220)` mel.
#[derive(Clone, Debug, PartialEq)]
pub struct AudioFeatureVector {
    pub values: Tensor,
}

impl AudioFeatureVector {
    pub fn mfcc(&self) -> &[f64] {
        &self.values.data()[..N_MFCC]
    }

    pub fn delta(&self) -> &[f64] {
        &self.values.data()[N_MFCC..2 * N_MFCC]
    }

    pub fn chroma(&self) -> &[f64] {
        &self.values.data()[2 * N_MFCC..2 * N_MFCC + N_CHROMA]
    }

    pub fn mel(&self) -> &[f64] {
        &self.values.data()[2 * N_MFCC + N_CHROMA..]
    }
}

fn column_means(t: &Tensor) -> Vec<f64> {
    let (rows, cols) = t.dims2();
    let mut out = vec![0.0; cols];
    for r in 0..rows {
        for (o, v) in out.iter_mut().zip(t.row(r)) {
            *o += v;
        }
    }
    out.iter_mut().for_each(|v| *v /= rows as f64);
    out
}

/// Time-averaged MFCC, ΔMFCC (window 2), chroma and mel.
pub fn extract_audio_features(clip: &AudioClip) -> Result<AudioFeatureVector> {
    extract_audio_features_with(clip, DEFAULT_DELTA_WINDOW)
}

pub fn extract_audio_features_with(
    clip: &AudioClip,
    delta_window: usize,
) -> Result<AudioFeatureVector> {
    let mel = mel_spectrogram(clip)?;
    let cep = mfcc(&mel)?;
    let dcep = delta_coeffs(&cep, delta_window)?;
    let chr = chroma(clip)?;
    let mut values = Vec::with_capacity(AUDIO_FEATURE_DIM);
    values.extend(column_means(&cep));
    values.extend(column_means(&dcep));
    values.extend(column_means(&chr));
    values.extend(column_means(&mel));
    debug_assert_eq!(values.len(), AUDIO_FEATURE_DIM);
    Ok(AudioFeatureVector {
        values: Tensor::from_vec(values),
    })
}
