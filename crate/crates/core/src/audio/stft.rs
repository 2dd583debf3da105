use std::f64::consts::PI;

use rustfft::num_complex::Complex64;

use crate::numkit::dft::fft_in_place;

use super::{FRAME_LEN, HOP, N_FFT};

pub fn frame_count(n_samples: usize) -> usize {
    if n_samples < FRAME_LEN {
        0
    } else {
        1 + (n_samples - FRAME_LEN) / HOP
    }
}

/// Symmetric Hann window; `w[n] == w[L-1-n]` exactly.
fn hann_symmetric(len: usize) -> Vec<f64> {
    let half: Vec<f64> = (0..len.div_ceil(2))
        .map(|n| 0.5 - 0.5 * (2.0 * PI * n as f64 / (len - 1) as f64).cos())
        .collect();
    (0..len).map(|n| half[n.min(len - 1 - n)]).collect()
}

/// Magnitude spectra of the Hann-windowed frames, `frame_count × (N_FFT/2+1)`.
pub fn stft_frames(samples: &[f64]) -> Vec<Vec<f64>> {
    let window = hann_symmetric(FRAME_LEN);
    let n_bins = N_FFT / 2 + 1;
    let mut buf = vec![Complex64::new(0.0, 0.0); N_FFT];
    (0..frame_count(samples.len()))
        .map(|f| {
            let start = f * HOP;
            buf.iter_mut().for_each(|c| *c = Complex64::new(0.0, 0.0));
            for (i, (x, w)) in samples[start..start + FRAME_LEN].iter().zip(&window).enumerate() {
                buf[i].re = x * w;
            }
            fft_in_place(&mut buf, false);
            buf[..n_bins].iter().map(|c| c.norm()).collect()
        })
        .collect()
}
