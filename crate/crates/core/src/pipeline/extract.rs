use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::audio::{extract_audio_features, AUDIO_FEATURE_DIM};
use crate::eeg::{extract_eeg_features, EEG_FEATURE_DIM};
use crate::error::{Error, Result};
use crate::numkit::Tensor;
use crate::vision::{embed_frames, extract_vision_features, FrameSequence, RandomProjectionEmbedder};

use super::feature_file::FeatureFile;
use super::manifest::{Dtype, Manifest, Modality, TrialRef};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExtractOptions {
    /// Embedding width for raw (`u8`) vision frames.
    pub vision_embed_dim: usize,
    pub vision_embed_seed: u64,
    /// Debug aid: overwrite feature 0 of row `i` with `i`.
    pub tag_rows: bool,
}

impl Default for ExtractOptions {
    fn default() -> Self {
        Self {
            vision_embed_dim: 64,
            vision_embed_seed: 0,
            tag_rows: false,
        }
    }
}

/// Summary printed by the `extract` command.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtractSummary {
    pub modality: Modality,
    pub count: usize,
    pub dim: usize,
}

fn vision_dim(manifest: &Manifest, refs: &[TrialRef], opts: &ExtractOptions) -> Result<usize> {
    let mut dim = None;
    for &r in refs {
        let e = manifest.entry(r);
        let d = match e.dtype {
            Dtype::F32le => e.shape[1],
            Dtype::U8 => opts.vision_embed_dim,
        };
        if *dim.get_or_insert(d) != d {
            return Err(Error::Trial {
                subject: manifest.subjects[r.subject].id.clone(),
                trial: r.trial,
                message: format!("embedding width {d} differs from earlier trials ({})", dim.unwrap_or(0)),
            });
        }
    }
    dim.ok_or_else(|| Error::invalid("no vision trials"))
}

fn extract_one(manifest: &Manifest, r: TrialRef, embedder: Option<&RandomProjectionEmbedder>) -> Result<Vec<f64>> {
    let e = manifest.entry(r);
    let wrap = |err: Error| match err {
        Error::Trial { .. } | Error::Io { .. } => err,
        other => Error::Trial {
            subject: manifest.subjects[r.subject].id.clone(),
            trial: r.trial,
            message: other.to_string(),
        },
    };
    let values = match e.modality {
        Modality::Eeg => extract_eeg_features(&manifest.read_eeg(r)?).map_err(wrap)?.values,
        Modality::Audio => extract_audio_features(&manifest.read_audio(r)?).map_err(wrap)?.values,
        Modality::Vision => {
            let seq = match e.dtype {
                Dtype::F32le => FrameSequence::new(manifest.read_tensor(r)?, e.label).map_err(wrap)?,
                Dtype::U8 => {
                    let bytes = manifest.read_bytes(r)?;
                    let embedder = embedder.expect("embedder for raw frames");
                    embed_frames(embedder, &bytes, e.shape[1], e.shape[2], e.label).map_err(wrap)?
                }
            };
            extract_vision_features(&seq).map_err(wrap)?.values
        }
    };
    Ok(values.into_data())
}

/// Features for every `modality` trial in manifest order (trials are
/// processed in parallel, rows are collected in order).
pub fn extract_features(manifest: &Manifest, modality: Modality, opts: &ExtractOptions) -> Result<FeatureFile> {
    let refs = manifest.select(modality);
    if refs.is_empty() {
        return Err(Error::invalid(format!("manifest has no {modality} trials")));
    }
    let dim = match modality {
        Modality::Eeg => EEG_FEATURE_DIM,
        Modality::Audio => AUDIO_FEATURE_DIM,
        Modality::Vision => 2 * vision_dim(manifest, &refs, opts)?,
    };
    let embedder = if modality == Modality::Vision && refs.iter().any(|&r| manifest.entry(r).dtype == Dtype::U8) {
        Some(RandomProjectionEmbedder::new(opts.vision_embed_dim, opts.vision_embed_seed)?)
    } else {
        None
    };
    let rows = refs
        .par_iter()
        .map(|&r| extract_one(manifest, r, embedder.as_ref()))
        .collect::<Result<Vec<_>>>()?;
    let mut data = Vec::with_capacity(refs.len() * dim);
    for (i, mut row) in rows.into_iter().enumerate() {
        debug_assert_eq!(row.len(), dim);
        if opts.tag_rows {
            row[0] = i as f64;
        }
        data.extend(row);
    }
    let labels = refs.iter().map(|&r| manifest.entry(r).label).collect();
    FeatureFile::new(labels, Tensor::new(vec![refs.len(), dim], data)?)
}
