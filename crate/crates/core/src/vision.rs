//! Vision features: mean static frame embedding concatenated with the mean
//! frame-to-frame delta, over 25 sampled frames.
//!
//! Embeddings come from an [`EmbeddingProvider`]; the default one averages
//! RGB to grayscale, area-downsamples to 16×16 and applies a fixed seeded
//! Gaussian projection.

use crate::error::{Error, Result};
use crate::numkit::{linalg, Rng, Tensor};

pub const VISION_FRAMES: usize = 25;
pub const DEFAULT_EMBED_DIM: usize = 2048;
const GRID: usize = 16;

#[derive(Clone, Debug, PartialEq)]
pub struct FrameSequence {
    embeddings: Tensor,
    pub label: usize,
}

impl FrameSequence {
    pub fn new(embeddings: Tensor, label: usize) -> Result<Self> {
        if embeddings.rank() != 2 || embeddings.shape()[0] != VISION_FRAMES {
            return Err(Error::shape(format!(
                "frame sequence must be [{VISION_FRAMES}, D], got {:?}",
                embeddings.shape()
            )));
        }
        if !embeddings.all_finite() {
            return Err(Error::NonFinite("frame embeddings".into()));
        }
        if label >= crate::NUM_CLASSES {
            return Err(Error::invalid(format!("label {label} out of range 0..5")));
        }
        Ok(Self { embeddings, label })
    }

    pub fn embeddings(&self) -> &Tensor {
        &self.embeddings
    }

    pub fn dim(&self) -> usize {
        self.embeddings.shape()[1]
    }
}

/// `[mean f_t ; mean d_t]`, length `2D`.
#[derive(Clone, Debug, PartialEq)]
pub struct VisionFeatureVector {
    pub values: Tensor,
}

impl VisionFeatureVector {
    pub fn static_half(&self) -> &[f64] {
        &self.values.data()[..self.values.len() / 2]
    }

    pub fn delta_half(&self) -> &[f64] {
        &self.values.data()[self.values.len() / 2..]
    }
}

/// `d_t = f_{t+1} − f_t` for a `[T, D]` sequence, `T ≥ 2`.
pub fn frame_deltas(frames: &Tensor) -> Result<Tensor> {
    if frames.rank() != 2 || frames.shape()[0] < 2 {
        return Err(Error::shape(format!(
            "frame deltas need at least 2 frames of [T, D], got {:?}",
            frames.shape()
        )));
    }
    let (t, d) = frames.dims2();
    let mut out = Tensor::zeros(&[t - 1, d]);
    for i in 0..t - 1 {
        let (a, b) = (frames.row(i), frames.row(i + 1));
        for ((o, x), y) in out.row_mut(i).iter_mut().zip(a).zip(b) {
            *o = y - x;
        }
    }
    Ok(out)
}

fn mean_rows(t: &Tensor) -> Vec<f64> {
    let (rows, cols) = t.dims2();
    let mut out = vec![0.0; cols];
    for r in 0..rows {
        for (o, v) in out.iter_mut().zip(t.row(r)) {
            *o += v;
        }
    }
    out.iter_mut().for_each(|v| *v /= rows as f64);
    out
}

pub fn extract_vision_features(seq: &FrameSequence) -> Result<VisionFeatureVector> {
    let deltas = frame_deltas(seq.embeddings())?;
    let mut values = mean_rows(seq.embeddings());
    values.extend(mean_rows(&deltas));
    Ok(VisionFeatureVector {
        values: Tensor::from_vec(values),
    })
}

/// Maps raw RGB frames to embeddings.
pub trait EmbeddingProvider {
    fn dim(&self) -> usize;

    /// One `height × width × 3` byte frame to a `dim`-vector.
    fn embed(&self, frame: &[u8], height: usize, width: usize) -> Result<Vec<f64>>;
}

/// Grayscale → 16×16 area downsample → seeded Gaussian projection
/// (`256 × D`, entries `N(0, 1/256)`). Pixels are scaled to `[0, 1]`.
#[derive(Clone, Debug)]
pub struct RandomProjectionEmbedder {
    projection: Tensor,
}

impl RandomProjectionEmbedder {
    pub fn new(dim: usize, seed: u64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("embedding dimension must be positive"));
        }
        let mut rng = Rng::new(seed);
        let n = (GRID * GRID) as f64;
        Ok(Self {
            projection: Tensor::randn(&[GRID * GRID, dim], 1.0 / n.sqrt(), &mut rng),
        })
    }

    pub fn project(&self, pooled: &[f64]) -> Vec<f64> {
        let d = self.dim();
        let mut out = vec![0.0; d];
        linalg::gemm_nn(pooled, self.projection.data(), 1, GRID * GRID, d, &mut out);
        out
    }
}

/// Weight of source cell `s` in target cell `i` when `n` source cells are
/// averaged down to `GRID`.
fn area_weights(n: usize) -> Vec<Vec<(usize, f64)>> {
    let scale = n as f64 / GRID as f64;
    (0..GRID)
        .map(|i| {
            let (lo, hi) = (i as f64 * scale, (i + 1) as f64 * scale);
            let first = lo.floor() as usize;
            let last = (hi.ceil() as usize).min(n);
            (first..last)
                .filter_map(|s| {
                    let overlap = (hi.min(s as f64 + 1.0) - lo.max(s as f64)).max(0.0);
                    (overlap > 0.0).then_some((s, overlap / scale))
                })
                .collect()
        })
        .collect()
}

/// 16×16 area-averaged grayscale image in `[0, 1]`.
pub fn downsample_gray(frame: &[u8], height: usize, width: usize) -> Result<Vec<f64>> {
    if height < GRID || width < GRID {
        return Err(Error::shape(format!(
            "frames must be at least {GRID}×{GRID}, got {height}×{width}"
        )));
    }
    if frame.len() != height * width * 3 {
        return Err(Error::shape(format!(
            "frame has {} bytes, expected {height}×{width}×3",
            frame.len()
        )));
    }
    let rows = area_weights(height);
    let cols = area_weights(width);
    let gray: Vec<f64> = frame
        .chunks_exact(3)
        .map(|px| (px[0] as f64 + px[1] as f64 + px[2] as f64) / (3.0 * 255.0))
        .collect();
    let mut out = vec![0.0; GRID * GRID];
    for (i, rw) in rows.iter().enumerate() {
        for (j, cw) in cols.iter().enumerate() {
            let mut acc = 0.0;
            for &(y, wy) in rw {
                for &(x, wx) in cw {
                    acc += wy * wx * gray[y * width + x];
                }
            }
            out[i * GRID + j] = acc;
        }
    }
    Ok(out)
}

impl EmbeddingProvider for RandomProjectionEmbedder {
    fn dim(&self) -> usize {
        self.projection.shape()[1]
    }

    fn embed(&self, frame: &[u8], height: usize, width: usize) -> Result<Vec<f64>> {
        Ok(self.project(&downsample_gray(frame, height, width)?))
    }
}

/// Embeds 25 raw `H×W×3` frames (concatenated) with `provider`.
pub fn embed_frames(
    provider: &dyn EmbeddingProvider,
    frames: &[u8],
    height: usize,
    width: usize,
    label: usize,
) -> Result<FrameSequence> {
    let frame_bytes = height * width * 3;
    if frame_bytes == 0 || frames.len() != VISION_FRAMES * frame_bytes {
        return Err(Error::shape(format!(
            "expected {VISION_FRAMES} frames of {height}×{width}×3 bytes, got {} bytes",
            frames.len()
        )));
    }
    let mut data = Vec::with_capacity(VISION_FRAMES * provider.dim());
    for f in frames.chunks_exact(frame_bytes) {
        data.extend(provider.embed(f, height, width)?);
    }
    FrameSequence::new(Tensor::new(vec![VISION_FRAMES, provider.dim()], data)?, label)
}

/// [`embed_frames`] with the default [`RandomProjectionEmbedder`].
pub fn embed_frames_default(
    frames: &[u8],
    height: usize,
    width: usize,
    dim: usize,
    seed: u64,
    label: usize,
) -> Result<FrameSequence> {
    embed_frames(&RandomProjectionEmbedder::new(dim, seed)?, frames, height, width, label)
}
