use crate::error::{Error, Result};
use crate::numkit::{linalg, Rng, Tensor};

use super::Parameterized;

pub fn relu(x: f64) -> f64 {
    x.max(0.0)
}

/// Affine map on row vectors: `y = x·W + b`, `W: [in, out]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Linear {
    pub w: Tensor,
    pub b: Tensor,
}

impl Linear {
    /// Uniform `±1/√in` initialisation for weights and bias.
    pub fn new(inputs: usize, outputs: usize, rng: &mut Rng) -> Self {
        let bound = 1.0 / (inputs as f64).sqrt();
        Self {
            w: Tensor::uniform(&[inputs, outputs], bound, rng),
            b: Tensor::uniform(&[outputs], bound, rng),
        }
    }

    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            w: Tensor::zeros(&[inputs, outputs]),
            b: Tensor::zeros(&[outputs]),
        }
    }

    pub fn inputs(&self) -> usize {
        self.w.shape()[0]
    }

    pub fn outputs(&self) -> usize {
        self.w.shape()[1]
    }

    /// `x: [n, in]` → `[n, out]`.
    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        if x.rank() != 2 || x.shape()[1] != self.inputs() {
            return Err(Error::shape(format!(
                "linear {}→{} applied to {:?}",
                self.inputs(),
                self.outputs(),
                x.shape()
            )));
        }
        let n = x.shape()[0];
        let m = self.outputs();
        let mut out = Vec::with_capacity(n * m);
        for _ in 0..n {
            out.extend_from_slice(self.b.data());
        }
        linalg::gemm_nn(x.data(), self.w.data(), n, self.inputs(), m, &mut out);
        Tensor::new(vec![n, m], out)
    }

    /// Single row vector.
    pub fn forward_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut out = self.b.data().to_vec();
        linalg::gemm_nn(x, self.w.data(), 1, self.inputs(), self.outputs(), &mut out);
        out
    }

    /// Accumulates parameter gradients into `grads` and returns `dL/dx`.
    pub fn backward(&self, x: &Tensor, dy: &Tensor, grads: &mut Linear) -> Tensor {
        let (n, k) = x.dims2();
        let m = self.outputs();
        linalg::gemm_tn(x.data(), dy.data(), n, k, m, grads.w.data_mut());
        for r in 0..n {
            for (g, d) in grads.b.data_mut().iter_mut().zip(dy.row(r)) {
                *g += d;
            }
        }
        let mut dx = vec![0.0; n * k];
        linalg::gemm_nt(dy.data(), self.w.data(), n, m, k, &mut dx);
        Tensor::new(vec![n, k], dx).expect("shape follows input")
    }

    pub fn backward_vec(&self, x: &[f64], dy: &[f64], grads: &mut Linear) -> Vec<f64> {
        let (k, m) = (self.inputs(), self.outputs());
        linalg::gemm_tn(x, dy, 1, k, m, grads.w.data_mut());
        for (g, d) in grads.b.data_mut().iter_mut().zip(dy) {
            *g += d;
        }
        let mut dx = vec![0.0; k];
        linalg::gemm_nt(dy, self.w.data(), 1, m, k, &mut dx);
        dx
    }
}

impl Parameterized for Linear {
    fn params(&self) -> Vec<&Tensor> {
        vec![&self.w, &self.b]
    }

    fn params_mut(&mut self) -> Vec<&mut Tensor> {
        vec![&mut self.w, &mut self.b]
    }
}

/// Per-row layer normalisation with learned scale and shift.
#[derive(Clone, Debug, PartialEq)]
pub struct LayerNorm {
    pub gamma: Tensor,
    pub beta: Tensor,
    pub eps: f64,
}

impl LayerNorm {
    pub fn new(dim: usize) -> Self {
        Self {
            gamma: Tensor::full(&[dim], 1.0),
            beta: Tensor::zeros(&[dim]),
            eps: 1e-5,
        }
    }

    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        let (n, d) = x.dims2();
        if d != self.gamma.len() {
            return Err(Error::shape(format!("layer norm over {d} features, expected {}", self.gamma.len())));
        }
        let mut out = x.clone();
        for r in 0..n {
            let row = out.row_mut(r);
            let mean = row.iter().sum::<f64>() / d as f64;
            let var = row.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / d as f64;
            let inv = 1.0 / (var + self.eps).sqrt();
            for ((v, g), b) in row.iter_mut().zip(self.gamma.data()).zip(self.beta.data()) {
                *v = (*v - mean) * inv * g + b;
            }
        }
        Ok(out)
    }
}

impl Parameterized for LayerNorm {
    fn params(&self) -> Vec<&Tensor> {
        vec![&self.gamma, &self.beta]
    }

    fn params_mut(&mut self) -> Vec<&mut Tensor> {
        vec![&mut self.gamma, &mut self.beta]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_forward_and_backward() {
        let mut rng = Rng::new(3);
        let lin = Linear::new(4, 3, &mut rng);
        let x = Tensor::randn(&[5, 4], 1.0, &mut rng);
        let up = Tensor::randn(&[5, 3], 1.0, &mut rng);
        let y = lin.forward(&x).unwrap();
        let want = x.matmul(&lin.w).unwrap();
        for r in 0..5 {
            for c in 0..3 {
                assert!((y.get(&[r, c]) - want.get(&[r, c]) - lin.b.data()[c]).abs() < 1e-12);
            }
        }
        let mut g = lin.zeros_like();
        let dx = lin.backward(&x, &up, &mut g);
        let loss = |l: &Linear, x: &Tensor| l.forward(x).unwrap().dot(&up);
        let h = 1e-6;
        for i in 0..x.len() {
            let mut xp = x.clone();
            xp.data_mut()[i] += h;
            let mut xm = x.clone();
            xm.data_mut()[i] -= h;
            let num = (loss(&lin, &xp) - loss(&lin, &xm)) / (2.0 * h);
            assert!((num - dx.data()[i]).abs() < 1e-7);
        }
        let flat = lin.flat_params();
        let analytic = flatten(&g.params());
        for i in 0..flat.len() {
            let mut p = lin.clone();
            let mut f = flat.clone();
            f[i] += h;
            p.set_flat_params(&f);
            let up_v = loss(&p, &x);
            f[i] -= 2.0 * h;
            p.set_flat_params(&f);
            let num = (up_v - loss(&p, &x)) / (2.0 * h);
            assert!((num - analytic[i]).abs() < 1e-7);
        }
        assert!(lin.forward(&Tensor::zeros(&[2, 5])).is_err());
    }

    #[test]
    fn layer_norm_rows_are_standardised() {
        let mut rng = Rng::new(1);
        let x = Tensor::randn(&[3, 8], 2.0, &mut rng);
        let y = LayerNorm::new(8).forward(&x).unwrap();
        for r in 0..3 {
            let row = y.row(r);
            let mean = row.iter().sum::<f64>() / 8.0;
            let var = row.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 8.0;
            assert!(mean.abs() < 1e-12);
            assert!((var - 1.0).abs() < 1e-3);
        }
    }

    use super::super::flatten;
}
