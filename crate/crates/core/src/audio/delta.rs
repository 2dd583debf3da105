use crate::error::{Error, Result};
use crate::numkit::Tensor;

pub const DEFAULT_DELTA_WINDOW: usize = 2;

/// Regression deltas along the time axis of a `[T, D]` sequence:
///
/// `Δc_t = Σ_{n=1..N} n (c_{t+n} − c_{t−n}) / (2 Σ n²)`
///
/// with edge frames replicated beyond both ends.
pub fn delta_coeffs(c: &Tensor, window: usize) -> Result<Tensor> {
    if c.rank() != 2 {
        return Err(Error::shape(format!("delta expects [T, D], got {:?}", c.shape())));
    }
    if window == 0 {
        return Err(Error::invalid("delta window must be at least 1"));
    }
    let (frames, dim) = c.dims2();
    let denom = 2.0 * (1..=window).map(|n| (n * n) as f64).sum::<f64>();
    let clamp = |t: isize| t.clamp(0, frames as isize - 1) as usize;
    let mut out = Tensor::zeros(&[frames, dim]);
    for t in 0..frames {
        let row = out.row_mut(t);
        for n in 1..=window {
            let ahead = c.row(clamp(t as isize + n as isize));
            let behind = c.row(clamp(t as isize - n as isize));
            for ((o, a), b) in row.iter_mut().zip(ahead).zip(behind) {
                *o += n as f64 * (a - b);
            }
        }
        row.iter_mut().for_each(|v| *v /= denom);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkit::Rng;
    use proptest::prelude::*;

    fn column(v: &[f64]) -> Tensor {
        Tensor::new(vec![v.len(), 1], v.to_vec()).unwrap()
    }

    #[test]
    fn constant_gives_zero() {
        let d = delta_coeffs(&Tensor::full(&[10, 3], 4.2), 2).unwrap();
        assert!(d.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn ramp_recovers_slope() {
        let ramp: Vec<f64> = (0..20).map(f64::from).collect();
        for window in [1, 2, 3] {
            let d = delta_coeffs(&column(&ramp), window).unwrap();
            for t in window..20 - window {
                assert_eq!(d.data()[t], 1.0);
            }
        }
    }

    #[test]
    fn hand_case_with_edge_replication() {
        let d = delta_coeffs(&column(&[0.0, 1.0, 0.0, 0.0, 0.0]), 2).unwrap();
        assert_eq!(d.data()[0], 0.1);
        assert_eq!(d.data()[1], 0.0);
        // t=2: 1·(0−1) + 2·(0−0) = −1 → −0.1
        assert_eq!(d.data()[2], -0.1);
        // t=3: 1·(0−0) + 2·(0−1) = −2 → −0.2
        assert_eq!(d.data()[3], -0.2);
    }

    #[test]
    fn window_one_denominator_two() {
        let d = delta_coeffs(&column(&[0.0, 2.0, 6.0]), 1).unwrap();
        assert_eq!(d.data(), &[1.0, 3.0, 2.0]);
    }

    #[test]
    fn errors() {
        assert!(delta_coeffs(&Tensor::zeros(&[4]), 2).is_err());
        assert!(delta_coeffs(&Tensor::zeros(&[4, 2]), 0).is_err());
    }

    proptest! {
        #[test]
        fn linear(seed in 0u64..1000, a in -3.0f64..3.0, b in -3.0f64..3.0) {
            let mut rng = Rng::new(seed);
            let x = Tensor::randn(&[12, 4], 1.0, &mut rng);
            let y = Tensor::randn(&[12, 4], 1.0, &mut rng);
            let lhs = delta_coeffs(&x.scale(a).add(&y.scale(b)).unwrap(), 2).unwrap();
            let rhs = delta_coeffs(&x, 2).unwrap().scale(a)
                .add(&delta_coeffs(&y, 2).unwrap().scale(b)).unwrap();
            prop_assert!(lhs.max_abs_diff(&rhs) < 1e-10);
        }
    }
}
