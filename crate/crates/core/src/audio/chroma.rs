use crate::error::Result;
use crate::numkit::Tensor;

use super::{stft_frames, AudioClip, N_CHROMA, N_FFT, SAMPLE_RATE};

/// C1; lower bins are ignored.
pub const CHROMA_FMIN: f64 = 32.7;

/// Pitch class of `f` Hz with C = 0 and A4 = 440 Hz → 9.
pub fn pitch_class(f: f64) -> usize {
    let semis = (12.0 * (f / 440.0).log2()).round() as i64;
    (semis + 9).rem_euclid(12) as usize
}

/// Per-frame sums of spectral magnitude folded onto the 12 pitch classes.
pub fn chroma(clip: &AudioClip) -> Result<Tensor> {
    let df = SAMPLE_RATE / N_FFT as f64;
    let classes: Vec<Option<usize>> = (0..N_FFT / 2 + 1)
        .map(|k| {
            let f = k as f64 * df;
            (f >= CHROMA_FMIN).then(|| pitch_class(f))
        })
        .collect();
    let frames = stft_frames(clip.samples());
    let mut data = vec![0.0; frames.len() * N_CHROMA];
    for (t, mags) in frames.iter().enumerate() {
        let row = &mut data[t * N_CHROMA..(t + 1) * N_CHROMA];
        for (m, class) in mags.iter().zip(&classes) {
            if let Some(c) = class {
                row[*c] += m;
            }
        }
    }
    Tensor::new(vec![frames.len(), N_CHROMA], data)
}
