//! Minimal deterministic numeric kernel: dense tensors, a real DFT, 1-D
//! convolution, activations and a seeded counter-based generator.
//!
//! Everything here is a pure function over immutable inputs.

mod conv;
pub(crate) mod dft;
pub mod linalg;
mod ops;
mod rng;
mod tensor;

pub use conv::{conv1d, conv1d_backward};
pub use dft::{dft_real, idft_real, Spectrum};
pub use ops::{log_softmax_slice, sigmoid, softmax, softmax_backward_slice, softmax_slice};
pub use rng::Rng;
pub use tensor::Tensor;
