use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::NUM_CLASSES;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub accuracy: f64,
    pub weighted_f1: f64,
    pub precision: [f64; NUM_CLASSES],
    pub recall: [f64; NUM_CLASSES],
    pub f1: [f64; NUM_CLASSES],
    pub support: [usize; NUM_CLASSES],
    /// `confusion[truth][pred]`
    pub confusion: [[usize; NUM_CLASSES]; NUM_CLASSES],
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Accuracy and support-weighted F1 over 5 classes.
pub fn evaluate_metrics(preds: &[usize], truth: &[usize]) -> Result<MetricsReport> {
    if preds.len() != truth.len() {
        return Err(Error::shape(format!("{} predictions for {} labels", preds.len(), truth.len())));
    }
    if preds.is_empty() {
        return Err(Error::invalid("no predictions to evaluate"));
    }
    if let Some(&bad) = preds.iter().chain(truth).find(|&&l| l >= NUM_CLASSES) {
        return Err(Error::invalid(format!("label {bad} out of range 0..{NUM_CLASSES}")));
    }
    let mut confusion = [[0usize; NUM_CLASSES]; NUM_CLASSES];
    for (&p, &t) in preds.iter().zip(truth) {
        confusion[t][p] += 1;
    }
    let n = preds.len();
    let mut report = MetricsReport {
        accuracy: ratio((0..NUM_CLASSES).map(|k| confusion[k][k]).sum(), n),
        weighted_f1: 0.0,
        precision: [0.0; NUM_CLASSES],
        recall: [0.0; NUM_CLASSES],
        f1: [0.0; NUM_CLASSES],
        support: [0; NUM_CLASSES],
        confusion,
    };
    for k in 0..NUM_CLASSES {
        let tp = confusion[k][k];
        let support: usize = confusion[k].iter().sum();
        let predicted: usize = (0..NUM_CLASSES).map(|t| confusion[t][k]).sum();
        let (p, r) = (ratio(tp, predicted), ratio(tp, support));
        report.precision[k] = p;
        report.recall[k] = r;
        report.f1[k] = if p + r > 0.0 { 2.0 * p * r / (p + r) } else { 0.0 };
        report.support[k] = support;
        report.weighted_f1 += support as f64 * report.f1[k] / n as f64;
    }
    Ok(report)
}
