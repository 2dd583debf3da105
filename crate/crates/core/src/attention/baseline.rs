//! Conv + transformer-encoder EEG baseline (forward only).

use crate::eeg::EegTrial;
use crate::error::{Error, Result};
use crate::numkit::{conv1d, Rng, Tensor};
use crate::NUM_CLASSES;

use super::layers::{LayerNorm, Linear};
use super::mha::AttentionParams;
use super::Parameterized;

#[derive(Clone, Debug, PartialEq)]
pub struct EegTransformerConfig {
    pub in_channels: usize,
    pub hidden: usize,
    pub kernel: usize,
    pub layers: usize,
    pub heads: usize,
    pub ffn: usize,
    /// Add fixed sinusoidal positional encodings to the conv tokens.
    pub positional: bool,
}

impl Default for EegTransformerConfig {
    fn default() -> Self {
        Self {
            in_channels: 30,
            hidden: 60,
            kernel: 11,
            layers: 6,
            heads: 4,
            ffn: 240,
            positional: true,
        }
    }
}

/// Post-norm encoder layer: `x ← LN(x + MHA(x))`, `x ← LN(x + FFN(x))`.
#[derive(Clone, Debug, PartialEq)]
pub struct EncoderLayer {
    pub attn: AttentionParams,
    pub norm1: LayerNorm,
    pub ff1: Linear,
    pub ff2: Linear,
    pub norm2: LayerNorm,
}

impl EncoderLayer {
    pub fn new(d: usize, heads: usize, ffn: usize, rng: &mut Rng) -> Result<Self> {
        Ok(Self {
            attn: AttentionParams::new(d, heads, rng)?,
            norm1: LayerNorm::new(d),
            ff1: Linear::new(d, ffn, rng),
            ff2: Linear::new(ffn, d, rng),
            norm2: LayerNorm::new(d),
        })
    }

    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        let (a, _) = self.attn.forward(x, None)?;
        let x = self.norm1.forward(&x.add(&a)?)?;
        let h = self.ff1.forward(&x)?.map(|v| v.max(0.0));
        let f = self.ff2.forward(&h)?;
        self.norm2.forward(&x.add(&f)?)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EegTransformer {
    pub config: EegTransformerConfig,
    pub conv1_w: Tensor,
    pub conv1_b: Tensor,
    pub conv2_w: Tensor,
    pub conv2_b: Tensor,
    pub layers: Vec<EncoderLayer>,
    pub head1: Linear,
    pub head2: Linear,
}

/// Sinusoidal encoding `[t, d]`.
fn sinusoidal(t: usize, d: usize) -> Tensor {
    let mut pe = Tensor::zeros(&[t, d]);
    for pos in 0..t {
        for i in 0..d {
            let rate = 1.0 / 10000f64.powf((2 * (i / 2)) as f64 / d as f64);
            let a = pos as f64 * rate;
            pe.set(&[pos, i], if i % 2 == 0 { a.sin() } else { a.cos() });
        }
    }
    pe
}

fn conv_relu(x: &Tensor, w: &Tensor, b: &Tensor, pad: usize) -> Result<Tensor> {
    let mut y = conv1d(x, w, pad)?;
    let t = y.shape()[1];
    for (o, bias) in b.data().iter().enumerate() {
        for v in &mut y.data_mut()[o * t..(o + 1) * t] {
            *v = (*v + bias).max(0.0);
        }
    }
    Ok(y)
}

impl EegTransformer {
    pub fn new(config: EegTransformerConfig, rng: &mut Rng) -> Result<Self> {
        if config.kernel % 2 == 0 {
            return Err(Error::invalid("baseline conv kernel must be odd"));
        }
        let (c, h, k) = (config.in_channels, config.hidden, config.kernel);
        let b1 = 1.0 / ((c * k) as f64).sqrt();
        let b2 = 1.0 / ((h * k) as f64).sqrt();
        let layers = (0..config.layers)
            .map(|_| EncoderLayer::new(h, config.heads, config.ffn, rng))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            conv1_w: Tensor::uniform(&[h, c, k], b1, rng),
            conv1_b: Tensor::uniform(&[h], b1, rng),
            conv2_w: Tensor::uniform(&[h, h, k], b2, rng),
            conv2_b: Tensor::uniform(&[h], b2, rng),
            layers,
            head1: Linear::new(h, h, rng),
            head2: Linear::new(h, NUM_CLASSES, rng),
            config,
        })
    }

    /// Conv front-end output as tokens `[T, hidden]`; sequence length is preserved.
    pub fn conv_tokens(&self, trial: &EegTrial) -> Result<Tensor> {
        let x = trial.data();
        if x.shape()[0] != self.config.in_channels {
            return Err(Error::shape(format!(
                "baseline expects {} channels, trial has {}",
                self.config.in_channels,
                x.shape()[0]
            )));
        }
        let pad = self.config.kernel / 2;
        let h = conv_relu(x, &self.conv1_w, &self.conv1_b, pad)?;
        let h = conv_relu(&h, &self.conv2_w, &self.conv2_b, pad)?;
        let mut tokens = h.transpose();
        if self.config.positional {
            let (t, d) = tokens.dims2();
            tokens = tokens.add(&sinusoidal(t, d))?;
        }
        Ok(tokens)
    }

    /// Encoder stack, mean pool and classifier head applied to tokens `[T, hidden]`.
    pub fn encode_tokens(&self, tokens: &Tensor) -> Result<Tensor> {
        let mut x = tokens.clone();
        for layer in &self.layers {
            x = layer.forward(&x)?;
        }
        let (t, d) = x.dims2();
        let mut pooled = vec![0.0; d];
        for r in 0..t {
            for (p, v) in pooled.iter_mut().zip(x.row(r)) {
                *p += v / t as f64;
            }
        }
        let h: Vec<f64> = self.head1.forward_vec(&pooled).into_iter().map(|v| v.max(0.0)).collect();
        Ok(Tensor::from_vec(self.head2.forward_vec(&h)))
    }

    /// Logits `[5]`.
    pub fn forward(&self, trial: &EegTrial) -> Result<Tensor> {
        let logits = self.encode_tokens(&self.conv_tokens(trial)?)?;
        if !logits.all_finite() {
            return Err(Error::NonFinite("baseline logits".into()));
        }
        Ok(logits)
    }
}

impl Parameterized for EegTransformer {
    fn params(&self) -> Vec<&Tensor> {
        let mut p = vec![&self.conv1_w, &self.conv1_b, &self.conv2_w, &self.conv2_b];
        for l in &self.layers {
            p.extend(l.attn.params());
            p.extend(l.norm1.params());
            p.extend(l.ff1.params());
            p.extend(l.ff2.params());
            p.extend(l.norm2.params());
        }
        p.extend(self.head1.params());
        p.extend(self.head2.params());
        p
    }

    fn params_mut(&mut self) -> Vec<&mut Tensor> {
        let mut p = vec![&mut self.conv1_w, &mut self.conv1_b, &mut self.conv2_w, &mut self.conv2_b];
        for l in &mut self.layers {
            p.extend(l.attn.params_mut());
            p.extend(l.norm1.params_mut());
            p.extend(l.ff1.params_mut());
            p.extend(l.ff2.params_mut());
            p.extend(l.norm2.params_mut());
        }
        p.extend(self.head1.params_mut());
        p.extend(self.head2.params_mut());
        p
    }
}
