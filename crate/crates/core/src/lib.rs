//! Emotion-recognition feature pipelines and a small-data training stack.
//!
//! The crate is organised around three kinds of component:
//!
//! * Hand-crafted features: [`eeg`] (Welch band power, differential entropy,
//!   alpha asymmetry; 306 dims), [`audio`] (MFCC, delta-MFCC, chroma, mel;
//!   220 dims) and [`vision`] (static plus frame-delta embeddings).
//! * Attention mechanisms at toy scale in [`attention`]: scaled dot-product
//!   and multi-head attention, squeeze-and-excitation, skip gates, the
//!   conv + transformer EEG baseline, the tri-stream EEG model, time/frequency
//!   dual attention and factorized space-time attention. Everything that is
//!   trainable has a hand-written backward pass checked by finite differences.
//! * Training and evaluation in [`train`] (MLP with batch norm and dropout,
//!   label-smoothed cross entropy, AdamW, cosine schedule, metrics) and the
//!   file-level pipeline in [`pipeline`] (manifests, splits, synthetic data,
//!   feature files, run reports).
//!
//! All arithmetic is `f64`; files store `f32` little-endian.

pub mod attention;
pub mod audio;
pub mod eeg;
pub mod error;
pub mod numkit;
pub mod pipeline;
pub mod train;
pub mod vision;

pub use error::{Error, Result};
pub use numkit::{Rng, Tensor};

/// Number of emotion classes (neutral, anger, happiness, sadness, calmness).
pub const NUM_CLASSES: usize = 5;
