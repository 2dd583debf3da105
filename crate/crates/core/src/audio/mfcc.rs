use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::numkit::Tensor;

use super::N_MFCC;

/// Added to mel energies before the logarithm.
pub const MEL_LOG_FLOOR: f64 = 1e-10;

fn dct_basis(n: usize) -> Vec<f64> {
    let mut b = vec![0.0; n * n];
    for k in 0..n {
        let s = if k == 0 { (1.0 / n as f64).sqrt() } else { (2.0 / n as f64).sqrt() };
        for i in 0..n {
            b[k * n + i] = s * (PI * k as f64 * (2 * i + 1) as f64 / (2 * n) as f64).cos();
        }
    }
    b
}

/// Orthonormal DCT-II.
pub fn dct_ii_ortho(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let b = dct_basis(n);
    (0..n)
        .map(|k| b[k * n..(k + 1) * n].iter().zip(x).map(|(a, v)| a * v).sum())
        .collect()
}

/// Orthonormal DCT-III, the inverse of [`dct_ii_ortho`].
pub fn dct_iii_ortho(c: &[f64]) -> Vec<f64> {
    let n = c.len();
    let b = dct_basis(n);
    (0..n)
        .map(|i| (0..n).map(|k| b[k * n + i] * c[k]).sum())
        .collect()
}

/// First 40 orthonormal DCT-II coefficients of `ln(mel + 1e-10)`, per frame.
pub fn mfcc(mel: &Tensor) -> Result<Tensor> {
    if mel.rank() != 2 {
        return Err(Error::shape(format!("mfcc expects [T, n_mels], got {:?}", mel.shape())));
    }
    let (frames, n_mels) = mel.dims2();
    if n_mels < N_MFCC {
        return Err(Error::shape(format!("need at least {N_MFCC} mel bands, got {n_mels}")));
    }
    if mel.data().iter().any(|&v| v < 0.0) {
        return Err(Error::invalid("mel energies must be nonnegative"));
    }
    let basis = dct_basis(n_mels);
    let mut out = Vec::with_capacity(frames * N_MFCC);
    let mut logs = vec![0.0; n_mels];
    for t in 0..frames {
        for (l, v) in logs.iter_mut().zip(mel.row(t)) {
            *l = (v + MEL_LOG_FLOOR).ln();
        }
        for k in 0..N_MFCC {
            out.push(
                basis[k * n_mels..(k + 1) * n_mels]
                    .iter()
                    .zip(&logs)
                    .map(|(a, v)| a * v)
                    .sum(),
            );
        }
    }
    Tensor::new(vec![frames, N_MFCC], out)
}
