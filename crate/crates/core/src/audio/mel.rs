use crate::error::Result;
use crate::numkit::Tensor;

use super::{stft_frames, AudioClip, N_FFT, N_MELS, SAMPLE_RATE};

pub fn hz_to_mel(f: f64) -> f64 {
    2595.0 * (1.0 + f / 700.0).log10()
}

pub fn mel_to_hz(m: f64) -> f64 {
    700.0 * (10f64.powf(m / 2595.0) - 1.0)
}

/// Triangular mel filterbank on the one-sided DFT grid.
///
/// Each triangle has unit area (peak `2 / (hi − lo)`), and the weight of a
/// DFT bin is the triangle's integral over the bin's frequency cell
/// `[f_k − Δ/2, f_k + Δ/2]`. The cells tile the axis, so every row sums to
/// exactly one even where a filter is narrower than a bin.
#[derive(Clone, Debug)]
pub struct MelFilterbank {
    /// `[n_mels, n_bins]`
    pub weights: Tensor,
    /// `n_mels + 2` edge frequencies in Hz: filter `m` spans
    /// `edges[m]..edges[m + 2]` and peaks at `edges[m + 1]`.
    pub edges: Vec<f64>,
}

/// `∫_a^b` of the unit-area triangle `(lo, centre, hi)`.
fn triangle_integral(lo: f64, centre: f64, hi: f64, a: f64, b: f64) -> f64 {
    let h = 2.0 / (hi - lo);
    let mut acc = 0.0;
    let (u, v) = (a.max(lo), b.min(centre));
    if u < v {
        acc += h / (centre - lo) * ((v - lo).powi(2) - (u - lo).powi(2)) / 2.0;
    }
    let (u, v) = (a.max(centre), b.min(hi));
    if u < v {
        acc += h / (hi - centre) * ((hi - u).powi(2) - (hi - v).powi(2)) / 2.0;
    }
    acc
}

impl MelFilterbank {
    pub fn new(n_mels: usize, n_fft: usize, sample_rate: f64, f_min: f64, f_max: f64) -> Self {
        let n_bins = n_fft / 2 + 1;
        let df = sample_rate / n_fft as f64;
        let (m_lo, m_hi) = (hz_to_mel(f_min), hz_to_mel(f_max));
        let edges: Vec<f64> = (0..n_mels + 2)
            .map(|i| mel_to_hz(m_lo + (m_hi - m_lo) * i as f64 / (n_mels + 1) as f64))
            .collect();
        let mut weights = Tensor::zeros(&[n_mels, n_bins]);
        for m in 0..n_mels {
            let (lo, c, hi) = (edges[m], edges[m + 1], edges[m + 2]);
            let row = weights.row_mut(m);
            for (k, w) in row.iter_mut().enumerate() {
                let f = k as f64 * df;
                *w = triangle_integral(lo, c, hi, f - df / 2.0, f + df / 2.0);
            }
        }
        Self { weights, edges }
    }

    /// 128 filters over 0–8 kHz for the 512-point 16 kHz grid.
    pub fn standard() -> Self {
        Self::new(N_MELS, N_FFT, SAMPLE_RATE, 0.0, SAMPLE_RATE / 2.0)
    }

    pub fn n_mels(&self) -> usize {
        self.weights.dims2().0
    }

    /// Applies the bank to one power spectrum.
    pub fn apply(&self, power: &[f64]) -> Vec<f64> {
        (0..self.n_mels())
            .map(|m| self.weights.row(m).iter().zip(power).map(|(w, p)| w * p).sum())
            .collect()
    }
}

/// `[frames, 128]` mel-band energies of the power spectrogram.
pub fn mel_spectrogram(clip: &AudioClip) -> Result<Tensor> {
    let bank = MelFilterbank::standard();
    let frames = stft_frames(clip.samples());
    let mut data = Vec::with_capacity(frames.len() * N_MELS);
    for mags in &frames {
        let power: Vec<f64> = mags.iter().map(|m| m * m).collect();
        data.extend(bank.apply(&power));
    }
    Tensor::new(vec![frames.len(), N_MELS], data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::audio::CLIP_SAMPLES;
    use std::f64::consts::PI;

    #[test]
    fn mel_scale_round_trip() {
        for f in [0.0, 100.0, 1000.0, 8000.0] {
            assert!((mel_to_hz(hz_to_mel(f)) - f).abs() < 1e-9);
        }
        assert!((hz_to_mel(700.0) - 2595.0 * 2f64.log10()).abs() < 1e-12);
    }

    #[test]
    fn rows_have_unit_area() {
        let bank = MelFilterbank::standard();
        assert_eq!(bank.weights.shape(), &[128, 257]);
        for m in 0..128 {
            let s: f64 = bank.weights.row(m).iter().sum();
            assert!((s - 1.0).abs() < 1e-12, "row {m} sums to {s}");
            assert!(bank.weights.row(m).iter().all(|&w| w >= 0.0));
        }
    }

    #[test]
    fn triangle_integral_pieces() {
        // unit-area triangle on [0, 2] peaking at 1
        assert!((triangle_integral(0.0, 1.0, 2.0, -5.0, 5.0) - 1.0).abs() < 1e-15);
        assert!((triangle_integral(0.0, 1.0, 2.0, 0.0, 1.0) - 0.5).abs() < 1e-15);
        assert!((triangle_integral(0.0, 1.0, 2.0, 0.5, 1.5) - 0.75).abs() < 1e-15);
        assert_eq!(triangle_integral(0.0, 1.0, 2.0, 3.0, 4.0), 0.0);
    }

    #[test]
    fn silence_is_zero() {
        let clip = AudioClip::new(vec![0.0; CLIP_SAMPLES], 0).unwrap();
        let mel = mel_spectrogram(&clip).unwrap();
        assert_eq!(mel.shape(), &[498, 128]);
        assert!(mel.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn tone_lands_in_its_filter() {
        let clip = AudioClip::new(
            (0..CLIP_SAMPLES)
                .map(|i| (2.0 * PI * 1000.0 * i as f64 / SAMPLE_RATE).sin())
                .collect(),
            0,
        )
        .unwrap();
        let bank = MelFilterbank::standard();
        let mel = mel_spectrogram(&clip).unwrap();
        for t in 0..mel.dims2().0 {
            let row = mel.row(t);
            let m = (0..128).max_by(|&a, &b| row[a].total_cmp(&row[b])).unwrap();
            assert!(
                bank.edges[m] <= 1000.0 && 1000.0 <= bank.edges[m + 2],
                "frame {t}: argmax filter {m} spans {}..{}",
                bank.edges[m],
                bank.edges[m + 2]
            );
        }
    }
}
