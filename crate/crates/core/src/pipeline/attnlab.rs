use serde::{Deserialize, Serialize};

use crate::attention::{attention_cost, gradcheck_suite, GradCheckResult};
use crate::error::{Error, Result};

/// Pass threshold for the gradient-check report.
pub const GRADCHECK_TOLERANCE: f64 = 1e-4;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostSummary {
    pub frames: u64,
    pub patches: u64,
    pub full: u64,
    pub factorized: u64,
    pub ratio: f64,
    pub degenerate: bool,
}

/// Largest token count whose squared entry count still fits in `u64`.
const MAX_TOKENS: u64 = u32::MAX as u64;

pub fn cost_summary(frames: u64, patches: u64) -> Result<CostSummary> {
    if frames == 0 || patches == 0 {
        return Err(Error::invalid("frames and patches must be positive"));
    }
    if frames.checked_mul(patches).is_none_or(|n| n > MAX_TOKENS) {
        return Err(Error::invalid(format!("{frames} × {patches} tokens is too large")));
    }
    let c = attention_cost(frames, patches);
    Ok(CostSummary {
        frames: c.frames,
        patches: c.patches,
        full: c.full_entries,
        factorized: c.factorized_entries,
        ratio: c.ratio,
        degenerate: c.degenerate,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradcheckReport {
    pub seed: u64,
    pub tolerance: f64,
    pub ops: Vec<GradCheckResult>,
    pub max_rel_error: f64,
    pub passed: bool,
}

pub fn gradcheck_report(seed: u64) -> Result<GradcheckReport> {
    let ops = gradcheck_suite(seed)?;
    let max_rel_error = ops.iter().map(|r| r.max_rel_error).fold(0.0, f64::max);
    Ok(GradcheckReport {
        seed,
        tolerance: GRADCHECK_TOLERANCE,
        passed: max_rel_error < GRADCHECK_TOLERANCE,
        ops,
        max_rel_error,
    })
}
