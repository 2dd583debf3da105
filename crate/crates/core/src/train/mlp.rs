use std::path::Path;

use crate::attention::{Linear, Parameterized};
use crate::error::{Error, Result};
use crate::numkit::{Rng, Tensor};

use super::checkpoint::{load_checkpoint, save_checkpoint};

/// Batch normalisation over the batch axis of `[B, C]`.
#[derive(Clone, Debug, PartialEq)]
pub struct BatchNorm {
    pub gamma: Tensor,
    pub beta: Tensor,
    pub running_mean: Tensor,
    pub running_var: Tensor,
    pub momentum: f64,
    pub eps: f64,
}

#[derive(Clone, Debug)]
pub struct BnCache {
    xhat: Tensor,
    inv_std: Vec<f64>,
}

impl BatchNorm {
    pub fn new(c: usize) -> Self {
        Self {
            gamma: Tensor::full(&[c], 1.0),
            beta: Tensor::zeros(&[c]),
            running_mean: Tensor::zeros(&[c]),
            running_var: Tensor::full(&[c], 1.0),
            momentum: 0.1,
            eps: 1e-5,
        }
    }

    fn check(&self, x: &Tensor) -> Result<(usize, usize)> {
        if x.rank() != 2 || x.shape()[1] != self.gamma.len() {
            return Err(Error::shape(format!("batch norm over {} features got {:?}", self.gamma.len(), x.shape())));
        }
        Ok(x.dims2())
    }

    /// Normalises with batch statistics and updates the running averages
    /// (running variance uses the unbiased batch variance).
    pub fn forward_train(&mut self, x: &Tensor) -> Result<(Tensor, BnCache)> {
        let (b, c) = self.check(x)?;
        if b < 2 {
            return Err(Error::invalid("batch norm needs at least 2 samples in training mode"));
        }
        let mut xhat = Tensor::zeros(&[b, c]);
        let mut y = Tensor::zeros(&[b, c]);
        let mut inv_std = vec![0.0; c];
        for j in 0..c {
            let mean = (0..b).map(|i| x.data()[i * c + j]).sum::<f64>() / b as f64;
            let ss: f64 = (0..b).map(|i| (x.data()[i * c + j] - mean).powi(2)).sum();
            let var = ss / b as f64;
            let inv = 1.0 / (var + self.eps).sqrt();
            inv_std[j] = inv;
            for i in 0..b {
                let h = (x.data()[i * c + j] - mean) * inv;
                xhat.data_mut()[i * c + j] = h;
                y.data_mut()[i * c + j] = self.gamma.data()[j] * h + self.beta.data()[j];
            }
            let m = self.momentum;
            let rm = &mut self.running_mean.data_mut()[j];
            *rm = (1.0 - m) * *rm + m * mean;
            let rv = &mut self.running_var.data_mut()[j];
            *rv = (1.0 - m) * *rv + m * ss / (b - 1) as f64;
        }
        Ok((y, BnCache { xhat, inv_std }))
    }

    pub fn forward_eval(&self, x: &Tensor) -> Result<Tensor> {
        let (b, c) = self.check(x)?;
        let mut y = x.clone();
        for i in 0..b {
            for j in 0..c {
                let v = &mut y.data_mut()[i * c + j];
                let inv = 1.0 / (self.running_var.data()[j] + self.eps).sqrt();
                *v = self.gamma.data()[j] * (*v - self.running_mean.data()[j]) * inv + self.beta.data()[j];
            }
        }
        Ok(y)
    }

    pub fn backward(&self, cache: &BnCache, dy: &Tensor, grads: &mut BatchNorm) -> Tensor {
        let (b, c) = dy.dims2();
        let mut dx = Tensor::zeros(&[b, c]);
        for j in 0..c {
            let g = self.gamma.data()[j];
            let mut sum_d = 0.0;
            let mut sum_dx = 0.0;
            for i in 0..b {
                let d = dy.data()[i * c + j];
                let h = cache.xhat.data()[i * c + j];
                grads.gamma.data_mut()[j] += d * h;
                grads.beta.data_mut()[j] += d;
                sum_d += d * g;
                sum_dx += d * g * h;
            }
            for i in 0..b {
                let dh = dy.data()[i * c + j] * g;
                let h = cache.xhat.data()[i * c + j];
                dx.data_mut()[i * c + j] = cache.inv_std[j] / b as f64 * (b as f64 * dh - sum_d - h * sum_dx);
            }
        }
        dx
    }
}

impl Parameterized for BatchNorm {
    fn params(&self) -> Vec<&Tensor> {
        vec![&self.gamma, &self.beta]
    }

    fn params_mut(&mut self) -> Vec<&mut Tensor> {
        vec![&mut self.gamma, &mut self.beta]
    }
}

/// `in → h1 → … → 5` MLP: every hidden layer is Linear → BatchNorm → ReLU →
/// Dropout.
#[derive(Clone, Debug, PartialEq)]
pub struct MlpClassifier {
    pub layers: Vec<Linear>,
    pub norms: Vec<BatchNorm>,
    pub dropout: f64,
}

#[derive(Clone, Debug)]
pub struct MlpCache {
    inputs: Vec<Tensor>,
    norms: Vec<BnCache>,
    /// ReLU gate times inverted-dropout scale, per hidden layer.
    masks: Vec<Vec<f64>>,
}

impl MlpClassifier {
    pub const DEFAULT_WIDTHS: [usize; 4] = [306, 128, 64, 5];

    pub fn new(widths: &[usize], dropout: f64, rng: &mut Rng) -> Result<Self> {
        if widths.len() < 2 || widths.contains(&0) {
            return Err(Error::invalid(format!("MLP widths {widths:?} invalid")));
        }
        if !(0.0..1.0).contains(&dropout) {
            return Err(Error::invalid(format!("dropout {dropout} outside [0, 1)")));
        }
        let layers = widths.windows(2).map(|w| Linear::new(w[0], w[1], rng)).collect();
        let norms = widths[1..widths.len() - 1].iter().map(|&c| BatchNorm::new(c)).collect();
        Ok(Self { layers, norms, dropout })
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().expect("at least one layer").outputs()
    }

    fn check(&self, x: &Tensor) -> Result<()> {
        if x.rank() != 2 || x.shape()[1] != self.input_dim() {
            return Err(Error::shape(format!("MLP expects [B, {}], got {:?}", self.input_dim(), x.shape())));
        }
        Ok(())
    }

    /// Training-mode forward: batch statistics, running-average update,
    /// inverted dropout drawn from `rng`.
    pub fn forward_train(&mut self, x: &Tensor, rng: &mut Rng) -> Result<(Tensor, MlpCache)> {
        self.check(x)?;
        let keep = 1.0 - self.dropout;
        let mut cache = MlpCache {
            inputs: Vec::new(),
            norms: Vec::new(),
            masks: Vec::new(),
        };
        let mut h = x.clone();
        for i in 0..self.norms.len() {
            let z = self.layers[i].forward(&h)?;
            let (mut b, bc) = self.norms[i].forward_train(&z)?;
            let mut mask = Vec::with_capacity(b.len());
            for v in b.data_mut() {
                let drop = if self.dropout > 0.0 && rng.uniform() >= keep { 0.0 } else { 1.0 / keep };
                let m = if *v > 0.0 { drop } else { 0.0 };
                *v *= m;
                mask.push(m);
            }
            cache.inputs.push(h);
            cache.norms.push(bc);
            cache.masks.push(mask);
            h = b;
        }
        let logits = self.layers.last().expect("output layer").forward(&h)?;
        cache.inputs.push(h);
        Ok((logits, cache))
    }

    /// Returns gradients in [`Parameterized::params`] order.
    pub fn backward(&self, cache: &MlpCache, dlogits: &Tensor) -> Vec<Tensor> {
        let mut g = self.zeros_like();
        let last = self.layers.len() - 1;
        let mut dh = self.layers[last].backward(&cache.inputs[last], dlogits, &mut g.layers[last]);
        for i in (0..self.norms.len()).rev() {
            for (d, m) in dh.data_mut().iter_mut().zip(&cache.masks[i]) {
                *d *= m;
            }
            let dz = self.norms[i].backward(&cache.norms[i], &dh, &mut g.norms[i]);
            dh = self.layers[i].backward(&cache.inputs[i], &dz, &mut g.layers[i]);
        }
        g.into_grads()
    }

    /// Inference-mode logits: running statistics, no dropout.
    pub fn predict_logits(&self, x: &Tensor) -> Result<Tensor> {
        self.check(x)?;
        let mut h = x.clone();
        for i in 0..self.norms.len() {
            let z = self.layers[i].forward(&h)?;
            h = self.norms[i].forward_eval(&z)?.map(|v| v.max(0.0));
        }
        self.layers.last().expect("output layer").forward(&h)
    }

    /// All tensors, trainable and running statistics, by name.
    pub fn named_tensors(&self) -> Vec<(String, Tensor)> {
        let mut out = Vec::new();
        for (i, l) in self.layers.iter().enumerate() {
            out.push((format!("fc{i}.weight"), l.w.clone()));
            out.push((format!("fc{i}.bias"), l.b.clone()));
        }
        for (i, n) in self.norms.iter().enumerate() {
            out.push((format!("bn{i}.gamma"), n.gamma.clone()));
            out.push((format!("bn{i}.beta"), n.beta.clone()));
            out.push((format!("bn{i}.running_mean"), n.running_mean.clone()));
            out.push((format!("bn{i}.running_var"), n.running_var.clone()));
        }
        out
    }

    /// Overwrites every tensor from `named`; names and shapes must match.
    pub fn load_named(&mut self, named: &[(String, Tensor)]) -> Result<()> {
        let expected = self.named_tensors();
        if named.len() < expected.len() {
            return Err(Error::format("checkpoint", format!("{} tensors, MLP needs {}", named.len(), expected.len())));
        }
        let find = |name: &str, shape: &[usize]| -> Result<Tensor> {
            let t = named
                .iter()
                .find(|(n, _)| n == name)
                .map(|(_, t)| t.clone())
                .ok_or_else(|| Error::format("checkpoint", format!("missing tensor {name}")))?;
            if t.shape() != shape {
                return Err(Error::format(
                    "checkpoint",
                    format!("tensor {name} is {:?}, expected {shape:?}", t.shape()),
                ));
            }
            Ok(t)
        };
        for (i, l) in self.layers.iter_mut().enumerate() {
            l.w = find(&format!("fc{i}.weight"), l.w.shape())?;
            l.b = find(&format!("fc{i}.bias"), l.b.shape())?;
        }
        for (i, n) in self.norms.iter_mut().enumerate() {
            n.gamma = find(&format!("bn{i}.gamma"), n.gamma.shape())?;
            n.beta = find(&format!("bn{i}.beta"), n.beta.shape())?;
            n.running_mean = find(&format!("bn{i}.running_mean"), n.running_mean.shape())?;
            n.running_var = find(&format!("bn{i}.running_var"), n.running_var.shape())?;
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        save_checkpoint(path, &self.named_tensors())
    }

    /// Loads into a model of the given widths.
    pub fn load(path: &Path, widths: &[usize], dropout: f64) -> Result<Self> {
        let mut m = Self::new(widths, dropout, &mut Rng::new(0))?;
        m.load_named(&load_checkpoint(path)?)?;
        Ok(m)
    }
}

impl Parameterized for MlpClassifier {
    fn params(&self) -> Vec<&Tensor> {
        let mut p = Vec::new();
        for (i, l) in self.layers.iter().enumerate() {
            p.extend(l.params());
            if let Some(n) = self.norms.get(i) {
                p.extend(n.params());
            }
        }
        p
    }

    fn params_mut(&mut self) -> Vec<&mut Tensor> {
        let mut p = Vec::new();
        let mut norms = self.norms.iter_mut();
        for l in self.layers.iter_mut() {
            p.extend(l.params_mut());
            if let Some(n) = norms.next() {
                p.extend(n.params_mut());
            }
        }
        p
    }
}
