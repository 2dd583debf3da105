use std::cell::RefCell;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// One-sided spectrum of a real signal.
#[derive(Clone, Debug)]
pub struct Spectrum {
    /// `floor(N/2) + 1` bins, DC first.
    pub bins: Vec<Complex64>,
    /// Spacing between bins, `sampling_rate / N`.
    pub bin_hz: f64,
    /// Length of the transformed signal.
    pub len: usize,
}

impl Spectrum {
    pub fn magnitudes(&self) -> Vec<f64> {
        self.bins.iter().map(|c| c.norm()).collect()
    }

    pub fn powers(&self) -> Vec<f64> {
        self.bins.iter().map(|c| c.norm_sqr()).collect()
    }

    pub fn frequency(&self, bin: usize) -> f64 {
        bin as f64 * self.bin_hz
    }
}

/// Full complex DFT of `buf` in place (unnormalised, `e^{-2πi kn/N}` kernel).
pub(crate) fn fft_in_place(buf: &mut [Complex64], inverse: bool) {
    let n = buf.len();
    let plan = PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if inverse {
            p.plan_fft_inverse(n)
        } else {
            p.plan_fft_forward(n)
        }
    });
    plan.process(buf);
}

/// DFT of a real signal, keeping the non-redundant half.
pub fn dft_real(signal: &[f64], sampling_rate: f64) -> Result<Spectrum> {
    if signal.len() < 2 {
        return Err(Error::invalid(format!(
            "dft needs at least 2 samples, got {}",
            signal.len()
        )));
    }
    let n = signal.len();
    let mut buf: Vec<Complex64> = signal.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft_in_place(&mut buf, false);
    buf.truncate(n / 2 + 1);
    Ok(Spectrum {
        bins: buf,
        bin_hz: sampling_rate / n as f64,
        len: n,
    })
}

/// Inverse of [`dft_real`]: rebuilds the length-`spectrum.len` real signal
/// from its one-sided bins (imaginary parts of DC/Nyquist are ignored).
pub fn idft_real(spectrum: &Spectrum) -> Vec<f64> {
    let n = spectrum.len;
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    for (k, c) in spectrum.bins.iter().enumerate() {
        buf[k] = *c;
        if k != 0 && n - k != k {
            buf[n - k] = c.conj();
        }
    }
    buf[0].im = 0.0;
    if n % 2 == 0 {
        buf[n / 2].im = 0.0;
    }
    fft_in_place(&mut buf, true);
    buf.iter().map(|c| c.re / n as f64).collect()
}
