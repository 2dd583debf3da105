use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numkit::Rng;
use crate::NUM_CLASSES;

/// Train fractions are resolved to parts per million so the train count is
/// exact integer arithmetic (0.7 · 400 = 280, not 279.99…).
const PPM: u64 = 1_000_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            train_fraction: 0.7,
            seed: 0,
        }
    }
}

impl SplitSpec {
    pub fn new(train_fraction: f64, seed: u64) -> Result<Self> {
        let s = Self { train_fraction, seed };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::invalid(format!("train fraction {} must lie in (0, 1)", self.train_fraction)));
        }
        Ok(())
    }

    fn ppm(&self) -> u64 {
        (self.train_fraction * PPM as f64).round() as u64
    }

    /// `floor(fraction · n)`.
    pub fn train_count(&self, n: usize) -> usize {
        (n as u64 * self.ppm() / PPM) as usize
    }
}

/// Per-class train quotas: floors of `fraction · n_k`, topped up by largest
/// remainder (ties to the lower class) until they sum to `floor(fraction · N)`.
pub fn stratified_quotas(counts: &[usize; NUM_CLASSES], spec: &SplitSpec) -> [usize; NUM_CLASSES] {
    let p = spec.ppm();
    let total: usize = counts.iter().sum();
    let mut quota = [0usize; NUM_CLASSES];
    let mut rem = [0u64; NUM_CLASSES];
    for k in 0..NUM_CLASSES {
        let scaled = counts[k] as u64 * p;
        quota[k] = (scaled / PPM) as usize;
        rem[k] = scaled % PPM;
    }
    let short = spec.train_count(total) - quota.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..NUM_CLASSES).filter(|&k| rem[k] > 0).collect();
    order.sort_by(|&a, &b| rem[b].cmp(&rem[a]).then(a.cmp(&b)));
    for &k in order.iter().take(short) {
        quota[k] += 1;
    }
    quota
}

/// Stratified, seeded train/test partition of one subject's trials.
///
/// Returns sorted trial indices. `stream` separates subjects sharing a seed.
pub fn split_trials(labels: &[usize], spec: &SplitSpec, stream: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    spec.validate()?;
    if labels.is_empty() {
        return Err(Error::invalid("cannot split a subject with no trials"));
    }
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); NUM_CLASSES];
    for (i, &l) in labels.iter().enumerate() {
        if l >= NUM_CLASSES {
            return Err(Error::invalid(format!("label {l} out of range")));
        }
        by_class[l].push(i);
    }
    let mut counts = [0usize; NUM_CLASSES];
    for k in 0..NUM_CLASSES {
        counts[k] = by_class[k].len();
    }
    let quota = stratified_quotas(&counts, spec);
    let mut rng = Rng::stream(spec.seed, stream);
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for (members, q) in by_class.iter_mut().zip(quota) {
        rng.shuffle(members);
        train.extend_from_slice(&members[..q]);
        test.extend_from_slice(&members[q..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}
