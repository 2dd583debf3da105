//! Attention mechanisms at toy scale, each with a forward pass and, where
//! trainable, a hand-written backward pass.
//!
//! * [`scaled_dot_attention`] and [`AttentionParams`] (multi-head
//!   self-attention over a token matrix).
//! * [`SeBlock`]: squeeze-and-excitation channel reweighting.
//! * [`SkipGate`]: learnable convex blend of a preserved and an attended path.
//! * [`EegTransformer`]: conv front-end + transformer encoder EEG baseline.
//! * [`TriStreamModel`]: spatial / temporal / asymmetry attention streams
//!   fused with softmax weights and skip-gated against the conv path.
//! * [`DualAttention`] and [`SpaceTimeAttention`]: factorized attention over
//!   a 2-D token grid (time × frequency, time × patch).
//!
//! [`grad_check`] verifies every backward pass against central finite
//! differences; [`attention_cost`] and [`param_count`] do the bookkeeping.

mod baseline;
mod capacity;
mod cost;
mod dual;
mod gate;
mod grid;
pub mod gradcheck;
mod layers;
mod mha;
mod se;
mod space_time;
mod tri_stream;

pub use baseline::{EegTransformer, EegTransformerConfig, EncoderLayer};
pub use capacity::{param_count, ModelDescriptor};
pub use cost::{attention_cost, CostReport};
pub use dual::{DualAttention, DualAttentionConfig, DualBlock};
pub use gate::{skip_gate_backward, skip_gate_fuse, SkipGate};
pub use gradcheck::{grad_check, gradcheck_suite, registered_ops, GradCheckResult};
pub use layers::{relu, LayerNorm, Linear};
pub use mha::{
    reweight_columns, scaled_dot_attention, scaled_dot_attention_backward, AttentionCache,
    AttentionParams,
};
pub use se::SeBlock;
pub use space_time::{SpaceTimeAttention, SpaceTimeConfig};
pub use tri_stream::{AsymmetrySource, TriStreamCache, TriStreamConfig, TriStreamModel};

use crate::numkit::Tensor;

/// Uniform access to a model's trainable tensors. Gradients are returned
/// in the same order as [`Parameterized::params`].
pub trait Parameterized {
    fn params(&self) -> Vec<&Tensor>;
    fn params_mut(&mut self) -> Vec<&mut Tensor>;

    fn num_params(&self) -> usize {
        self.params().iter().map(|t| t.len()).sum()
    }

    fn flat_params(&self) -> Vec<f64> {
        self.params().iter().flat_map(|t| t.data().iter().copied()).collect()
    }

    fn set_flat_params(&mut self, flat: &[f64]) {
        let mut off = 0;
        for p in self.params_mut() {
            let n = p.len();
            p.data_mut().copy_from_slice(&flat[off..off + n]);
            off += n;
        }
        assert_eq!(off, flat.len(), "flat parameter length mismatch");
    }

    /// Copy with every trainable tensor zeroed; handy as a gradient buffer.
    fn zeros_like(&self) -> Self
    where
        Self: Clone,
    {
        let mut z = self.clone();
        for p in z.params_mut() {
            p.fill(0.0);
        }
        z
    }

    fn into_grads(self) -> Vec<Tensor>
    where
        Self: Sized,
    {
        self.params().into_iter().cloned().collect()
    }
}

/// Concatenates tensors into one flat vector.
pub fn flatten(tensors: &[&Tensor]) -> Vec<f64> {
    tensors.iter().flat_map(|t| t.data().iter().copied()).collect()
}
