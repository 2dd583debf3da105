use serde::{Deserialize, Serialize};

/// Attention-score entry counts for a `T × P` token grid.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostReport {
    pub frames: u64,
    pub patches: u64,
    /// `(T·P)²`
    pub full_entries: u64,
    /// `T·P² + P·T²`
    pub factorized_entries: u64,
    pub ratio: f64,
    /// Set when `T = 1` or `P = 1`, where factorizing cannot help.
    pub degenerate: bool,
}

/// Joint versus factorized attention cost. `T` and `P` are clamped to ≥ 1.
pub fn attention_cost(frames: u64, patches: u64) -> CostReport {
    let (t, p) = (frames.max(1), patches.max(1));
    let full = (t * p) * (t * p);
    let factorized = t * p * p + p * t * t;
    CostReport {
        frames: t,
        patches: p,
        full_entries: full,
        factorized_entries: factorized,
        ratio: full as f64 / factorized as f64,
        degenerate: t == 1 || p == 1,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn video_grid() {
        let c = attention_cost(25, 196);
        assert_eq!(c.full_entries, 24_010_000);
        assert_eq!(c.factorized_entries, 1_082_900);
        assert!((c.ratio - 22.17).abs() < 0.005);
        assert!(!c.degenerate);
    }

    #[test]
    fn single_token() {
        let c = attention_cost(1, 1);
        assert_eq!((c.full_entries, c.factorized_entries), (1, 2));
        assert_eq!(c.ratio, 0.5);
        assert!(c.degenerate);
    }

    proptest! {
        #[test]
        fn factorizing_pays_off_beyond_one(t in 2u64..200, p in 2u64..200) {
            let c = attention_cost(t, p);
            prop_assert!(c.ratio > 1.0);
            prop_assert_eq!(c.full_entries, (t * p).pow(2));
        }
    }
}
