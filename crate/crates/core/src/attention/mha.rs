use crate::error::{Error, Result};
use crate::numkit::{linalg, softmax_slice, Rng, Tensor};

use super::Parameterized;

/// Column window of one attention head inside row-major `[n, ld]` buffers.
#[derive(Clone, Copy)]
struct Head {
    ld: usize,
    off: usize,
    dk: usize,
}

impl Head {
    fn idx(&self, row: usize, c: usize) -> usize {
        row * self.ld + self.off + c
    }

    /// The head's columns of `x: [n, ld]` as `[dk, n]`.
    fn transposed(&self, x: &[f64], n: usize) -> Vec<f64> {
        let mut t = vec![0.0; self.dk * n];
        for j in 0..n {
            for c in 0..self.dk {
                t[c * n + j] = x[self.idx(j, c)];
            }
        }
        t
    }

    /// Adds `t: [dk, n]` into the head's columns of `x`.
    fn scatter_add(&self, t: &[f64], n: usize, x: &mut [f64]) {
        for j in 0..n {
            for c in 0..self.dk {
                x[self.idx(j, c)] += t[c * n + j];
            }
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yv, xv) in y.iter_mut().zip(x) {
        *yv += alpha * xv;
    }
}

/// Softmax attention for one head; `kt`, `vt` are the head's keys and
/// values as `[dk, nk]`. `bias` (length `nk`) is added to every row of
/// logits. Writes the head's columns of `out`, returns probs `[nq, nk]`.
#[allow(clippy::too_many_arguments)]
fn attend(q: &[f64], kt: &[f64], vt: &[f64], nq: usize, nk: usize, h: Head, bias: Option<&[f64]>, out: &mut [f64]) -> Vec<f64> {
    let scale = 1.0 / (h.dk as f64).sqrt();
    let mut probs = vec![0.0; nq * nk];
    for i in 0..nq {
        let row = &mut probs[i * nk..(i + 1) * nk];
        if let Some(b) = bias {
            row.copy_from_slice(b);
        }
        for c in 0..h.dk {
            axpy(q[h.idx(i, c)] * scale, &kt[c * nk..(c + 1) * nk], row);
        }
        softmax_slice(row);
        for c in 0..h.dk {
            out[h.idx(i, c)] = dot(row, &vt[c * nk..(c + 1) * nk]);
        }
    }
    probs
}

/// Backward of [`attend`]: accumulates into the head's columns of `dq` and
/// into `dkt`, `dvt` (`[dk, nk]`).
#[allow(clippy::too_many_arguments)]
fn attend_backward(
    q: &[f64],
    kt: &[f64],
    vt: &[f64],
    probs: &[f64],
    dout: &[f64],
    nq: usize,
    nk: usize,
    h: Head,
    dq: &mut [f64],
    dkt: &mut [f64],
    dvt: &mut [f64],
) {
    let scale = 1.0 / (h.dk as f64).sqrt();
    let mut ds = vec![0.0; nk];
    for i in 0..nq {
        let p = &probs[i * nk..(i + 1) * nk];
        ds.iter_mut().for_each(|v| *v = 0.0);
        for c in 0..h.dk {
            let d = dout[h.idx(i, c)];
            axpy(d, &vt[c * nk..(c + 1) * nk], &mut ds);
            axpy(d, p, &mut dvt[c * nk..(c + 1) * nk]);
        }
        let inner = dot(p, &ds);
        for (g, &pj) in ds.iter_mut().zip(p) {
            *g = pj * (*g - inner) * scale;
        }
        for c in 0..h.dk {
            dq[h.idx(i, c)] += dot(&ds, &kt[c * nk..(c + 1) * nk]);
            axpy(q[h.idx(i, c)], &ds, &mut dkt[c * nk..(c + 1) * nk]);
        }
    }
}

/// `softmax(QKᵀ/√d_k)·V`. `Q: [n_q, d_k]`, `K, V: [n_k, d_k]`.
/// Returns the output and the attention matrix `[n_q, n_k]`.
pub fn scaled_dot_attention(q: &Tensor, k: &Tensor, v: &Tensor) -> Result<(Tensor, Tensor)> {
    if q.rank() != 2 || k.rank() != 2 || v.rank() != 2 {
        return Err(Error::shape("attention inputs must be matrices"));
    }
    let (nq, dk) = q.dims2();
    let (nk, dk2) = k.dims2();
    if dk2 != dk || v.shape() != k.shape() {
        return Err(Error::shape(format!(
            "attention dims mismatch: Q {:?}, K {:?}, V {:?}",
            q.shape(),
            k.shape(),
            v.shape()
        )));
    }
    let head = Head { ld: dk, off: 0, dk };
    let (kt, vt) = (head.transposed(k.data(), nk), head.transposed(v.data(), nk));
    let mut out = vec![0.0; nq * dk];
    let probs = attend(q.data(), &kt, &vt, nq, nk, head, None, &mut out);
    Ok((Tensor::new(vec![nq, dk], out)?, Tensor::new(vec![nq, nk], probs)?))
}

/// Gradients `(dQ, dK, dV)` of [`scaled_dot_attention`] given the upstream
/// gradient of its output.
pub fn scaled_dot_attention_backward(q: &Tensor, k: &Tensor, v: &Tensor, probs: &Tensor, dout: &Tensor) -> (Tensor, Tensor, Tensor) {
    let (nq, dk) = q.dims2();
    let nk = k.shape()[0];
    let head = Head { ld: dk, off: 0, dk };
    let (kt, vt) = (head.transposed(k.data(), nk), head.transposed(v.data(), nk));
    let mut dq = Tensor::zeros(q.shape());
    let mut dkt = vec![0.0; dk * nk];
    let mut dvt = vec![0.0; dk * nk];
    attend_backward(q.data(), &kt, &vt, probs.data(), dout.data(), nq, nk, head, dq.data_mut(), &mut dkt, &mut dvt);
    let mut dk_ = Tensor::zeros(k.shape());
    let mut dv = Tensor::zeros(v.shape());
    head.scatter_add(&dkt, nk, dk_.data_mut());
    head.scatter_add(&dvt, nk, dv.data_mut());
    (dq, dk_, dv)
}

/// Multiplies attention column `j` by `weights[j]` and renormalises each row.
pub fn reweight_columns(probs: &Tensor, weights: &[f64]) -> Tensor {
    let (n, m) = probs.dims2();
    assert_eq!(m, weights.len());
    let mut out = probs.clone();
    for r in 0..n {
        let row = out.row_mut(r);
        for (p, w) in row.iter_mut().zip(weights) {
            *p *= w;
        }
        let s: f64 = row.iter().sum();
        for p in row.iter_mut() {
            *p /= s;
        }
    }
    out
}

/// Multi-head self-attention projections (row-vector convention, no biases).
#[derive(Clone, Debug, PartialEq)]
pub struct AttentionParams {
    pub w_q: Tensor,
    pub w_k: Tensor,
    pub w_v: Tensor,
    pub w_o: Tensor,
    pub heads: usize,
}

/// Intermediate values kept by [`AttentionParams::forward`].
#[derive(Clone, Debug)]
pub struct AttentionCache {
    x: Tensor,
    q: Vec<f64>,
    k: Vec<f64>,
    v: Vec<f64>,
    /// Per head, `[n, n]` row-stochastic.
    probs: Vec<Vec<f64>>,
    ctx: Vec<f64>,
}

impl AttentionCache {
    /// Attention matrix of head `h`, `[n, n]`.
    pub fn probs(&self, h: usize) -> Tensor {
        let n = self.x.shape()[0];
        Tensor::new(vec![n, n], self.probs[h].clone()).expect("cached shape")
    }

    pub fn heads(&self) -> usize {
        self.probs.len()
    }
}

impl AttentionParams {
    /// Normal initialisation with std `1/√d_model`.
    pub fn new(d_model: usize, heads: usize, rng: &mut Rng) -> Result<Self> {
        Self::check(d_model, heads)?;
        let std = 1.0 / (d_model as f64).sqrt();
        let shape = [d_model, d_model];
        Ok(Self {
            w_q: Tensor::randn(&shape, std, rng),
            w_k: Tensor::randn(&shape, std, rng),
            w_v: Tensor::randn(&shape, std, rng),
            w_o: Tensor::randn(&shape, std, rng),
            heads,
        })
    }

    /// All four projections set to the identity.
    pub fn identity(d_model: usize, heads: usize) -> Result<Self> {
        Self::check(d_model, heads)?;
        let mut eye = Tensor::zeros(&[d_model, d_model]);
        for i in 0..d_model {
            eye.set(&[i, i], 1.0);
        }
        Ok(Self {
            w_q: eye.clone(),
            w_k: eye.clone(),
            w_v: eye.clone(),
            w_o: eye,
            heads,
        })
    }

    fn check(d_model: usize, heads: usize) -> Result<()> {
        if d_model == 0 || heads == 0 || d_model % heads != 0 {
            return Err(Error::invalid(format!("d_model {d_model} not divisible by {heads} heads")));
        }
        Ok(())
    }

    pub fn d_model(&self) -> usize {
        self.w_q.shape()[0]
    }

    pub fn d_k(&self) -> usize {
        self.d_model() / self.heads
    }

    /// Self-attention over `x: [n, d_model]`. `key_bias` (length `n`) is added
    /// to the logits of every query row.
    pub fn forward(&self, x: &Tensor, key_bias: Option<&[f64]>) -> Result<(Tensor, AttentionCache)> {
        let d = self.d_model();
        if x.rank() != 2 || x.shape()[1] != d {
            return Err(Error::shape(format!("attention over d_model {d} applied to {:?}", x.shape())));
        }
        let n = x.shape()[0];
        if let Some(b) = key_bias {
            if b.len() != n {
                return Err(Error::shape(format!("key bias of length {} for {n} tokens", b.len())));
            }
        }
        let proj = |w: &Tensor| {
            let mut out = vec![0.0; n * d];
            linalg::gemm_nn(x.data(), w.data(), n, d, d, &mut out);
            out
        };
        let (q, k, v) = (proj(&self.w_q), proj(&self.w_k), proj(&self.w_v));
        let dk = self.d_k();
        let mut ctx = vec![0.0; n * d];
        let mut probs = Vec::with_capacity(self.heads);
        for h in 0..self.heads {
            let head = Head { ld: d, off: h * dk, dk };
            let (kt, vt) = (head.transposed(&k, n), head.transposed(&v, n));
            probs.push(attend(&q, &kt, &vt, n, n, head, key_bias, &mut ctx));
        }
        let mut y = vec![0.0; n * d];
        linalg::gemm_nn(&ctx, self.w_o.data(), n, d, d, &mut y);
        let cache = AttentionCache {
            x: x.clone(),
            q,
            k,
            v,
            probs,
            ctx,
        };
        Ok((Tensor::new(vec![n, d], y)?, cache))
    }

    /// Accumulates weight gradients into `grads` and returns `dL/dx`.
    pub fn backward(&self, cache: &AttentionCache, dy: &Tensor, grads: &mut AttentionParams) -> Tensor {
        let d = self.d_model();
        let n = cache.x.shape()[0];
        let dk = self.d_k();
        linalg::gemm_tn(&cache.ctx, dy.data(), n, d, d, grads.w_o.data_mut());
        let mut dctx = vec![0.0; n * d];
        linalg::gemm_nt(dy.data(), self.w_o.data(), n, d, d, &mut dctx);
        let mut dq = vec![0.0; n * d];
        let mut dkk = vec![0.0; n * d];
        let mut dv = vec![0.0; n * d];
        for h in 0..self.heads {
            let head = Head { ld: d, off: h * dk, dk };
            let (kt, vt) = (head.transposed(&cache.k, n), head.transposed(&cache.v, n));
            let mut dkt = vec![0.0; dk * n];
            let mut dvt = vec![0.0; dk * n];
            attend_backward(&cache.q, &kt, &vt, &cache.probs[h], &dctx, n, n, head, &mut dq, &mut dkt, &mut dvt);
            head.scatter_add(&dkt, n, &mut dkk);
            head.scatter_add(&dvt, n, &mut dv);
        }
        let x = cache.x.data();
        linalg::gemm_tn(x, &dq, n, d, d, grads.w_q.data_mut());
        linalg::gemm_tn(x, &dkk, n, d, d, grads.w_k.data_mut());
        linalg::gemm_tn(x, &dv, n, d, d, grads.w_v.data_mut());
        let mut dx = vec![0.0; n * d];
        linalg::gemm_nt(&dq, self.w_q.data(), n, d, d, &mut dx);
        linalg::gemm_nt(&dkk, self.w_k.data(), n, d, d, &mut dx);
        linalg::gemm_nt(&dv, self.w_v.data(), n, d, d, &mut dx);
        Tensor::new(vec![n, d], dx).expect("shape follows input")
    }
}

impl Parameterized for AttentionParams {
    fn params(&self) -> Vec<&Tensor> {
        vec![&self.w_q, &self.w_k, &self.w_v, &self.w_o]
    }

    fn params_mut(&mut self) -> Vec<&mut Tensor> {
        vec![&mut self.w_q, &mut self.w_k, &mut self.w_v, &mut self.w_o]
    }
}
