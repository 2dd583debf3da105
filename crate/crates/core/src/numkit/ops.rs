use crate::error::{Error, Result};

use super::Tensor;

/// Logistic function, evaluated without overflow for large `|x|`.
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Max-subtracted softmax over a contiguous slice, in place.
pub fn softmax_slice(x: &mut [f64]) {
    let max = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in x.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in x.iter_mut() {
        *v /= sum;
    }
}

/// `log softmax` over a slice.
pub fn log_softmax_slice(x: &[f64]) -> Vec<f64> {
    let max = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + x.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
    x.iter().map(|v| v - lse).collect()
}

/// Given softmax output `p` and upstream `dp`, returns the logit gradient
/// `p ⊙ (dp − ⟨p, dp⟩)`.
pub fn softmax_backward_slice(p: &[f64], dp: &[f64]) -> Vec<f64> {
    let inner: f64 = p.iter().zip(dp).map(|(a, b)| a * b).sum();
    p.iter().zip(dp).map(|(pi, di)| pi * (di - inner)).collect()
}

/// Softmax along `axis` of an arbitrary-rank tensor.
pub fn softmax(x: &Tensor, axis: usize) -> Result<Tensor> {
    let shape = x.shape();
    if axis >= shape.len() {
        return Err(Error::invalid(format!(
            "axis {axis} out of range for rank {}",
            shape.len()
        )));
    }
    let n = shape[axis];
    let inner: usize = shape[axis + 1..].iter().product();
    let outer: usize = shape[..axis].iter().product();
    let mut out = x.clone();
    let data = out.data_mut();
    let mut lane = vec![0.0; n];
    for o in 0..outer {
        for i in 0..inner {
            let base = o * n * inner + i;
            for (j, v) in lane.iter_mut().enumerate() {
                *v = data[base + j * inner];
            }
            softmax_slice(&mut lane);
            for (j, v) in lane.iter().enumerate() {
                data[base + j * inner] = *v;
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkit::Rng;
    use proptest::prelude::*;

    #[test]
    fn softmax_examples() {
        let s = softmax(&Tensor::from_vec(vec![0.0, 0.0]), 0).unwrap();
        assert_eq!(s.data(), &[0.5, 0.5]);

        for c in [-1e3, -3.0, 0.0, 7.5, 1e3] {
            let s = softmax(&Tensor::from_vec(vec![c; 5]), 0).unwrap();
            for v in s.data() {
                assert!((v - 0.2).abs() < 1e-15);
            }
        }

        let s = softmax(
            &Tensor::from_vec(vec![1f64.ln(), 2f64.ln(), 3f64.ln()]),
            0,
        )
        .unwrap();
        for (v, want) in s.data().iter().zip([1.0 / 6.0, 2.0 / 6.0, 3.0 / 6.0]) {
            assert!((v - want).abs() < 1e-15);
        }
    }

    #[test]
    fn softmax_over_inner_axis() {
        let x = Tensor::new(vec![2, 3], vec![0.0, 10.0, 0.0, 1.0, 1.0, 1.0]).unwrap();
        let s = softmax(&x, 0).unwrap();
        // columns sum to one
        for j in 0..3 {
            assert!((s.get(&[0, j]) + s.get(&[1, j]) - 1.0).abs() < 1e-12);
        }
        assert!(softmax(&x, 2).is_err());
    }

    #[test]
    fn sigmoid_examples() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!((sigmoid(-2.0) - 0.11920).abs() < 1e-5);
        assert!((sigmoid(1.0) - 0.73106).abs() < 1e-5);
        assert!(sigmoid(-800.0) >= 0.0 && sigmoid(800.0) <= 1.0);
    }

    #[test]
    fn softmax_backward_matches_finite_differences() {
        let mut rng = Rng::new(9);
        let x: Vec<f64> = (0..6).map(|_| rng.normal()).collect();
        let w: Vec<f64> = (0..6).map(|_| rng.normal()).collect();
        let f = |x: &[f64]| {
            let mut p = x.to_vec();
            softmax_slice(&mut p);
            p.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>()
        };
        let mut p = x.clone();
        softmax_slice(&mut p);
        let g = softmax_backward_slice(&p, &w);
        for i in 0..6 {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[i] += 1e-6;
            xm[i] -= 1e-6;
            let num = (f(&xp) - f(&xm)) / 2e-6;
            assert!((num - g[i]).abs() < 1e-8);
        }
    }

    proptest! {
        #[test]
        fn softmax_rows_sum_to_one_and_shift_invariant(
            xs in prop::collection::vec(-50.0f64..50.0, 1..20),
            shift in -100.0f64..100.0,
        ) {
            let t = Tensor::from_vec(xs.clone());
            let p = softmax(&t, 0).unwrap();
            prop_assert!(p.data().iter().all(|&v| v >= 0.0));
            prop_assert!((p.sum() - 1.0).abs() < 1e-12);
            let shifted = Tensor::from_vec(xs.iter().map(|v| v + shift).collect());
            let q = softmax(&shifted, 0).unwrap();
            prop_assert!(p.max_abs_diff(&q) < 1e-12);
        }

        #[test]
        fn sigmoid_is_antisymmetric(x in -30.0f64..30.0) {
            let s = sigmoid(x);
            prop_assert!(s > 0.0 && s < 1.0);
            prop_assert!((sigmoid(-x) - (1.0 - s)).abs() < 1e-15);
        }
    }
}
