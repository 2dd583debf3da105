//! Per-axis self-attention over a token grid `[A, B, D]` stored row-major.

use crate::error::{Error, Result};
use crate::numkit::Tensor;

use super::mha::{AttentionCache, AttentionParams};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(super) enum Axis {
    /// Attend across `A` for each fixed `b`.
    First,
    /// Attend across `B` for each fixed `a`.
    Second,
}

/// Index lists of the independent attention groups along `axis`.
fn groups(a: usize, b: usize, axis: Axis) -> Vec<Vec<usize>> {
    match axis {
        Axis::First => (0..b).map(|j| (0..a).map(|i| i * b + j).collect()).collect(),
        Axis::Second => (0..a).map(|i| (0..b).map(|j| i * b + j).collect()).collect(),
    }
}

fn gather(x: &[f64], idx: &[usize], d: usize) -> Result<Tensor> {
    let mut out = Vec::with_capacity(idx.len() * d);
    for &t in idx {
        out.extend_from_slice(&x[t * d..(t + 1) * d]);
    }
    Tensor::new(vec![idx.len(), d], out)
}

/// Replaces every token by its attention output along `axis`.
pub(super) fn axis_forward(
    p: &AttentionParams,
    x: &[f64],
    dims: (usize, usize, usize),
    axis: Axis,
) -> Result<(Vec<f64>, Vec<AttentionCache>)> {
    let (a, b, d) = dims;
    let mut out = vec![0.0; a * b * d];
    let mut caches = Vec::new();
    for idx in groups(a, b, axis) {
        let (y, cache) = p.forward(&gather(x, &idx, d)?, None)?;
        for (r, &t) in idx.iter().enumerate() {
            out[t * d..(t + 1) * d].copy_from_slice(y.row(r));
        }
        caches.push(cache);
    }
    Ok((out, caches))
}

pub(super) fn axis_backward(
    p: &AttentionParams,
    caches: &[AttentionCache],
    dy: &[f64],
    dims: (usize, usize, usize),
    axis: Axis,
    grads: &mut AttentionParams,
) -> Result<Vec<f64>> {
    let (a, b, d) = dims;
    let mut dx = vec![0.0; a * b * d];
    for (idx, cache) in groups(a, b, axis).iter().zip(caches) {
        let g = p.backward(cache, &gather(dy, idx, d)?, grads);
        for (r, &t) in idx.iter().enumerate() {
            dx[t * d..(t + 1) * d].copy_from_slice(g.row(r));
        }
    }
    Ok(dx)
}

/// `x[i, j] + pos_a[i] + pos_b[j]`.
pub(super) fn add_positions(x: &Tensor, pos_a: &Tensor, pos_b: &Tensor) -> Vec<f64> {
    let (a, b, d) = (x.shape()[0], x.shape()[1], x.shape()[2]);
    let mut out = x.data().to_vec();
    for i in 0..a {
        for j in 0..b {
            let t = i * b + j;
            for k in 0..d {
                out[t * d + k] += pos_a.row(i)[k] + pos_b.row(j)[k];
            }
        }
    }
    out
}

/// Accumulates position gradients given `dL/d(x + pos)`.
pub(super) fn position_grads(dx: &[f64], dims: (usize, usize, usize), ga: &mut Tensor, gb: &mut Tensor) {
    let (a, b, d) = dims;
    for i in 0..a {
        for j in 0..b {
            let t = i * b + j;
            for k in 0..d {
                ga.row_mut(i)[k] += dx[t * d + k];
                gb.row_mut(j)[k] += dx[t * d + k];
            }
        }
    }
}

pub(super) fn mean_tokens(x: &[f64], n: usize, d: usize) -> Vec<f64> {
    let mut m = vec![0.0; d];
    for t in 0..n {
        for k in 0..d {
            m[k] += x[t * d + k];
        }
    }
    m.iter_mut().for_each(|v| *v /= n as f64);
    m
}

pub(super) fn check_grid(grid: &Tensor, a: usize, b: usize, d: usize, what: &str) -> Result<()> {
    if grid.shape() != [a, b, d] {
        return Err(Error::shape(format!("{what} expects grid [{a}, {b}, {d}], got {:?}", grid.shape())));
    }
    Ok(())
}
