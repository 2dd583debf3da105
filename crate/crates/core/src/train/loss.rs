use crate::error::{Error, Result};
use crate::numkit::{log_softmax_slice, softmax_slice, Tensor};

fn check(logits: &Tensor, labels: &[usize]) -> Result<(usize, usize)> {
    if logits.rank() != 2 {
        return Err(Error::shape(format!("logits must be [B, K], got {:?}", logits.shape())));
    }
    let (b, k) = logits.dims2();
    if labels.len() != b {
        return Err(Error::shape(format!("{} labels for a batch of {b}", labels.len())));
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= k) {
        return Err(Error::invalid(format!("label {bad} out of range 0..{k}")));
    }
    Ok((b, k))
}

/// Mean label-smoothed cross-entropy on raw logits and its gradient.
/// Targets are `(1−ε)·1[k = label] + ε/K`.
pub fn cross_entropy_logits(logits: &Tensor, labels: &[usize], smoothing: f64) -> Result<(f64, Tensor)> {
    let (b, k) = check(logits, labels)?;
    if !(0.0..1.0).contains(&smoothing) {
        return Err(Error::invalid(format!("label smoothing {smoothing} outside [0, 1)")));
    }
    let mut loss = 0.0;
    let mut grad = Tensor::zeros(&[b, k]);
    for (r, &label) in labels.iter().enumerate() {
        let logp = log_softmax_slice(logits.row(r));
        let g = grad.row_mut(r);
        for j in 0..k {
            let y = smoothing / k as f64 + if j == label { 1.0 - smoothing } else { 0.0 };
            loss -= y * logp[j];
            g[j] = (logp[j].exp() - y) / b as f64;
        }
    }
    Ok((loss / b as f64, grad))
}

/// Cross-entropy applied after an extra softmax. Kept only to show the
/// confidence ceiling this causes: the loss never drops below
/// `ln((e + K − 1)/e)`.
pub fn double_softmax_ce(logits: &Tensor, labels: &[usize]) -> Result<f64> {
    let (b, _) = check(logits, labels)?;
    let mut loss = 0.0;
    for (r, &label) in labels.iter().enumerate() {
        let mut p = logits.row(r).to_vec();
        softmax_slice(&mut p);
        loss -= log_softmax_slice(&p)[label];
    }
    Ok(loss / b as f64)
}
