use crate::error::{Error, Result};
use crate::numkit::{sigmoid, Tensor};

/// Learnable blend weight `α = σ(w)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SkipGate {
    pub w: f64,
}

impl SkipGate {
    /// Init used for the audio/vision paths: keeps ≈88% of the preserved path.
    pub const PRETRAINED_INIT: f64 = -2.0;
    /// Init used for the tri-stream conv path: ≈73% conv.
    pub const CONV_INIT: f64 = 1.0;

    pub fn new(w: f64) -> Self {
        Self { w }
    }

    pub fn alpha(&self) -> f64 {
        sigmoid(self.w)
    }
}

/// `(1−α)·pre + α·att`.
pub fn skip_gate_fuse(pre: &Tensor, att: &Tensor, gate: SkipGate) -> Result<Tensor> {
    if pre.shape() != att.shape() {
        return Err(Error::shape(format!(
            "skip gate paths differ: {:?} vs {:?}",
            pre.shape(),
            att.shape()
        )));
    }
    let a = gate.alpha();
    let data = pre.data().iter().zip(att.data()).map(|(p, q)| (1.0 - a) * p + a * q).collect();
    Tensor::new(pre.shape().to_vec(), data)
}

/// Returns `(d_pre, d_att, d_w)`.
pub fn skip_gate_backward(pre: &Tensor, att: &Tensor, gate: SkipGate, dy: &Tensor) -> (Tensor, Tensor, f64) {
    let a = gate.alpha();
    let dw = a * (1.0 - a) * att.sub(pre).expect("equal shapes").dot(dy);
    (dy.scale(1.0 - a), dy.scale(a), dw)
}
