use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::audio::{AudioClip, CLIP_SAMPLES};
use crate::eeg::{EegTrial, EEG_CHANNELS, EEG_SAMPLES};
use crate::error::{Error, Result};
use crate::numkit::Tensor;
use crate::vision::VISION_FRAMES;
use crate::NUM_CLASSES;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Modality {
    Eeg,
    Audio,
    Vision,
}

impl Modality {
    pub const ALL: [Modality; 3] = [Modality::Eeg, Modality::Audio, Modality::Vision];

    pub fn name(self) -> &'static str {
        match self {
            Modality::Eeg => "eeg",
            Modality::Audio => "audio",
            Modality::Vision => "vision",
        }
    }
}

impl fmt::Display for Modality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Modality {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Modality::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown modality `{s}` (expected eeg, audio or vision)")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dtype {
    F32le,
    U8,
}

impl Dtype {
    pub fn size(self) -> usize {
        match self {
            Dtype::F32le => 4,
            Dtype::U8 => 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrialEntry {
    pub modality: Modality,
    pub label: usize,
    /// Relative to the manifest's directory.
    pub path: PathBuf,
    pub shape: Vec<usize>,
    pub dtype: Dtype,
}

impl TrialEntry {
    pub fn byte_len(&self) -> usize {
        self.shape.iter().product::<usize>() * self.dtype.size()
    }

    /// Checks the modality shape contract.
    pub fn validate(&self) -> std::result::Result<(), String> {
        if self.label >= NUM_CLASSES {
            return Err(format!("label {} out of range 0..{}", self.label, NUM_CLASSES - 1));
        }
        if self.path.as_os_str().is_empty() || self.path.is_absolute() {
            return Err(format!("path `{}` must be a non-empty relative path", self.path.display()));
        }
        let s = self.shape.as_slice();
        let ok = match (self.modality, self.dtype) {
            (Modality::Eeg, Dtype::F32le) => s == [EEG_CHANNELS, EEG_SAMPLES],
            (Modality::Audio, Dtype::F32le) => s == [CLIP_SAMPLES],
            (Modality::Vision, Dtype::F32le) => s.len() == 2 && s[0] == VISION_FRAMES && s[1] > 0,
            (Modality::Vision, Dtype::U8) => {
                s.len() == 4 && s[0] == VISION_FRAMES && s[1] > 0 && s[2] > 0 && s[3] == 3
            }
            _ => false,
        };
        if ok {
            Ok(())
        } else {
            let expected = match (self.modality, self.dtype) {
                (Modality::Eeg, _) => format!("[{EEG_CHANNELS}, {EEG_SAMPLES}] f32le"),
                (Modality::Audio, _) => format!("[{CLIP_SAMPLES}] f32le"),
                (Modality::Vision, _) => format!("[{VISION_FRAMES}, D] f32le or [{VISION_FRAMES}, H, W, 3] u8"),
            };
            Err(format!(
                "{} trial has shape {:?} ({:?}), expected {expected}",
                self.modality, self.shape, self.dtype
            ))
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubjectEntry {
    pub id: String,
    pub trials: Vec<TrialEntry>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub subjects: Vec<SubjectEntry>,
    /// Free-form provenance (e.g. synthetic generator parameters), echoed into reports.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<serde_json::Value>,
    #[serde(skip)]
    pub root: PathBuf,
}

/// One trial's location in a manifest.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TrialRef {
    pub subject: usize,
    pub trial: usize,
}

impl Manifest {
    pub fn from_json(text: &str, root: impl Into<PathBuf>) -> Result<Self> {
        let mut m: Manifest = serde_json::from_str(text)?;
        m.root = root.into();
        m.validate()?;
        Ok(m)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = std::collections::HashSet::new();
        for s in &self.subjects {
            if s.id.is_empty() {
                return Err(Error::invalid("subject id must be non-empty"));
            }
            if !seen.insert(s.id.as_str()) {
                return Err(Error::invalid(format!("duplicate subject id `{}`", s.id)));
            }
            for (i, t) in s.trials.iter().enumerate() {
                t.validate().map_err(|message| Error::Trial {
                    subject: s.id.clone(),
                    trial: i,
                    message,
                })?;
            }
        }
        Ok(())
    }

    /// Trials of `modality` in manifest order.
    pub fn select(&self, modality: Modality) -> Vec<TrialRef> {
        let mut out = Vec::new();
        for (si, s) in self.subjects.iter().enumerate() {
            for (ti, t) in s.trials.iter().enumerate() {
                if t.modality == modality {
                    out.push(TrialRef { subject: si, trial: ti });
                }
            }
        }
        out
    }

    pub fn entry(&self, r: TrialRef) -> &TrialEntry {
        &self.subjects[r.subject].trials[r.trial]
    }

    fn trial_error(&self, r: TrialRef, message: impl Into<String>) -> Error {
        Error::Trial {
            subject: self.subjects[r.subject].id.clone(),
            trial: r.trial,
            message: message.into(),
        }
    }

    /// Raw bytes of one trial, length-checked against its shape.
    pub fn read_bytes(&self, r: TrialRef) -> Result<Vec<u8>> {
        let e = self.entry(r);
        let path = self.root.join(&e.path);
        let bytes = std::fs::read(&path).map_err(|err| Error::io(&path, err))?;
        if bytes.len() != e.byte_len() {
            return Err(self.trial_error(
                r,
                format!("{} has {} bytes, shape {:?} needs {}", e.path.display(), bytes.len(), e.shape, e.byte_len()),
            ));
        }
        Ok(bytes)
    }

    /// `f32le` trial data widened to `f64`; rejects non-finite samples.
    pub fn read_tensor(&self, r: TrialRef) -> Result<Tensor> {
        let e = self.entry(r);
        if e.dtype != Dtype::F32le {
            return Err(self.trial_error(r, "expected f32le data"));
        }
        let data: Vec<f64> = self
            .read_bytes(r)?
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")) as f64)
            .collect();
        if data.iter().any(|v| !v.is_finite()) {
            return Err(self.trial_error(r, "non-finite sample"));
        }
        Tensor::new(e.shape.clone(), data)
    }

    pub fn read_eeg(&self, r: TrialRef) -> Result<EegTrial> {
        let e = self.entry(r);
        EegTrial::new(self.read_tensor(r)?, e.label).map_err(|err| self.trial_error(r, err.to_string()))
    }

    pub fn read_audio(&self, r: TrialRef) -> Result<AudioClip> {
        let e = self.entry(r);
        AudioClip::new(self.read_tensor(r)?.into_data(), e.label).map_err(|err| self.trial_error(r, err.to_string()))
    }
}

/// Reads and validates a manifest; data paths resolve against its directory.
pub fn load_manifest(path: impl AsRef<Path>) -> Result<Manifest> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let root = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Manifest::from_json(&text, root)
}

pub fn save_manifest(manifest: &Manifest, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, manifest.to_json()).map_err(|e| Error::io(path, e))
}

/// Little-endian `f32` encoding of `data`.
pub fn encode_f32le(data: &[f64]) -> Vec<u8> {
    data.iter().flat_map(|&v| (v as f32).to_le_bytes()).collect()
}
