use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::numkit::dft_real;

use super::BandDef;

/// Welch estimator settings. Defaults: 1 s segments at 100 Hz, 50 % overlap.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WelchConfig {
    pub seg_len: usize,
    pub overlap: f64,
}

impl Default for WelchConfig {
    fn default() -> Self {
        Self {
            seg_len: 100,
            overlap: 0.5,
        }
    }
}

/// One-sided power spectral density on a uniform grid starting at 0 Hz.
#[derive(Clone, Debug, PartialEq)]
pub struct Psd {
    pub freqs: Vec<f64>,
    pub psd: Vec<f64>,
    pub fs: f64,
}

impl Psd {
    pub fn df(&self) -> f64 {
        self.freqs[1] - self.freqs[0]
    }

    /// Trapezoidal integral over the whole grid.
    pub fn total_power(&self) -> f64 {
        let n = self.psd.len();
        let inner: f64 = self.psd.iter().sum();
        (inner - 0.5 * (self.psd[0] + self.psd[n - 1])) * self.df()
    }
}

/// Periodic Hann window (the DFT-even form used for spectral estimation).
pub(crate) fn hann_periodic(len: usize) -> Vec<f64> {
    (0..len)
        .map(|n| 0.5 - 0.5 * (2.0 * PI * n as f64 / len as f64).cos())
        .collect()
}

/// Welch PSD: mean of Hann-windowed periodograms of overlapping segments,
/// scaled to power per Hz (`1 / (fs · Σw²)`, doubled off DC/Nyquist).
pub fn welch_psd(signal: &[f64], fs: f64, cfg: &WelchConfig) -> Result<Psd> {
    let n = signal.len();
    let seg = cfg.seg_len;
    if seg < 8 {
        return Err(Error::invalid(format!("Welch segment length {seg} < 8")));
    }
    if seg > n {
        return Err(Error::invalid(format!(
            "Welch segment length {seg} exceeds signal length {n}"
        )));
    }
    if !(0.0..1.0).contains(&cfg.overlap) {
        return Err(Error::invalid(format!(
            "Welch overlap {} outside [0, 1)",
            cfg.overlap
        )));
    }
    if !(fs > 0.0) {
        return Err(Error::invalid(format!("sampling rate {fs} must be positive")));
    }
    let step = (seg - (cfg.overlap * seg as f64).floor() as usize).max(1);
    let n_segs = 1 + (n - seg) / step;
    let window = hann_periodic(seg);
    let win_power: f64 = window.iter().map(|w| w * w).sum();
    let n_bins = seg / 2 + 1;

    let mut acc = vec![0.0; n_bins];
    let mut buf = vec![0.0; seg];
    for s in 0..n_segs {
        let start = s * step;
        for (b, (x, w)) in buf.iter_mut().zip(signal[start..start + seg].iter().zip(&window)) {
            *b = x * w;
        }
        let spec = dft_real(&buf, fs)?;
        for (a, p) in acc.iter_mut().zip(spec.powers()) {
            *a += p;
        }
    }
    let scale = 1.0 / (fs * win_power * n_segs as f64);
    let nyquist_bin = if seg % 2 == 0 { Some(seg / 2) } else { None };
    let psd = acc
        .iter()
        .enumerate()
        .map(|(k, &p)| {
            let one_sided = if k == 0 || Some(k) == nyquist_bin { 1.0 } else { 2.0 };
            p * scale * one_sided
        })
        .collect();
    let df = fs / seg as f64;
    Ok(Psd {
        freqs: (0..n_bins).map(|k| k as f64 * df).collect(),
        psd,
        fs,
    })
}

/// Integral of the linearly interpolated PSD over `[f_low, f_high]`.
///
/// On grid-aligned edges this is the trapezoid rule with half weights at
/// both band edges; off-grid edges are interpolated.
pub fn band_power(psd: &Psd, band: &BandDef) -> Result<f64> {
    let f_max = *psd.freqs.last().expect("non-empty grid");
    if band.f_low < 0.0 || band.f_high > f_max + 1e-9 || band.f_low >= band.f_high {
        return Err(Error::invalid(format!(
            "band {} [{}, {}] Hz outside PSD range [0, {f_max}] Hz",
            band.name, band.f_low, band.f_high
        )));
    }
    let df = psd.df();
    let value_at = |f: f64| {
        let pos = f / df;
        let i = (pos.floor() as usize).min(psd.psd.len() - 2);
        let frac = pos - i as f64;
        psd.psd[i] * (1.0 - frac) + psd.psd[i + 1] * frac
    };
    let mut total = 0.0;
    let mut f = band.f_low;
    let mut v = value_at(f);
    // walk grid points strictly inside the band
    let first = (band.f_low / df).floor() as usize + 1;
    for k in first..psd.psd.len() {
        let fk = k as f64 * df;
        if fk >= band.f_high {
            break;
        }
        let vk = psd.psd[k];
        total += 0.5 * (v + vk) * (fk - f);
        f = fk;
        v = vk;
    }
    let v_end = value_at(band.f_high);
    total += 0.5 * (v + v_end) * (band.f_high - f);
    Ok(total.max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eeg::BANDS;
    use crate::numkit::Rng;

    fn sine(freq: f64, amp: f64, n: usize, fs: f64) -> Vec<f64> {
        (0..n)
            .map(|t| amp * (2.0 * PI * freq * t as f64 / fs).sin())
            .collect()
    }

    #[test]
    fn zero_signal_zero_psd() {
        let p = welch_psd(&[0.0; 500], 100.0, &WelchConfig::default()).unwrap();
        assert_eq!(p.psd.len(), 51);
        assert!(p.psd.iter().all(|&v| v == 0.0));
        assert_eq!(band_power(&p, &BANDS[2]).unwrap(), 0.0);
    }

    #[test]
    fn white_noise_integrates_to_variance() {
        let mut rng = Rng::new(2024);
        let x: Vec<f64> = (0..500).map(|_| rng.normal()).collect();
        let p = welch_psd(&x, 100.0, &WelchConfig::default()).unwrap();
        let total = p.total_power();
        assert!((0.85..=1.15).contains(&total), "integrated psd {total}");
        assert!(p.psd.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn sinusoid_peak_and_alpha_share() {
        let x = sine(10.0, 1.0, 500, 100.0);
        let p = welch_psd(&x, 100.0, &WelchConfig::default()).unwrap();
        let argmax = p
            .psd
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap()
            .0;
        assert_eq!(p.freqs[argmax], 10.0);

        let total = p.total_power();
        assert!((total - 0.5).abs() < 0.05, "total {total}");
        let alpha = band_power(&p, &BANDS[2]).unwrap();
        let beta = band_power(&p, &BANDS[3]).unwrap();
        assert!(alpha >= 0.95 * total);
        assert!(beta <= 0.02 * total);
    }

    #[test]
    fn trapezoid_with_off_grid_edges() {
        // psd = f on a 1 Hz grid; exact integral over [0.5, 4] is (16 - 0.25)/2
        let psd = Psd {
            freqs: (0..=50).map(f64::from).collect(),
            psd: (0..=50).map(f64::from).collect(),
            fs: 100.0,
        };
        let v = band_power(&psd, &BANDS[0]).unwrap();
        assert!((v - 7.875).abs() < 1e-12);
        let v = band_power(&psd, &BandDef { name: "x", f_low: 2.25, f_high: 2.75 }).unwrap();
        assert!((v - 1.25).abs() < 1e-12);
    }

    #[test]
    fn argument_errors() {
        let x = vec![0.0; 50];
        assert!(welch_psd(&x, 100.0, &WelchConfig { seg_len: 64, overlap: 0.5 }).is_err());
        assert!(welch_psd(&x, 100.0, &WelchConfig { seg_len: 4, overlap: 0.5 }).is_err());
        assert!(welch_psd(&x, 100.0, &WelchConfig { seg_len: 16, overlap: 1.0 }).is_err());
        let p = welch_psd(&x, 100.0, &WelchConfig { seg_len: 16, overlap: 0.0 }).unwrap();
        let outside = BandDef { name: "x", f_low: 30.0, f_high: 60.0 };
        assert!(band_power(&p, &outside).is_err());
    }
}
