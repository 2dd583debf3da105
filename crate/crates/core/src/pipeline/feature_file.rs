//! Feature matrix file.
//!
//! ```text
//! "EAVF" | version u32 | n u32 | dim u32 | labels i32×n | data f32×(n·dim)
//! ```
//! Little-endian throughout; length is exactly `16 + 4n + 4·n·dim` bytes.

use std::path::Path;

use crate::error::{Error, Result};
use crate::numkit::Tensor;
use crate::NUM_CLASSES;

pub const FEATURE_MAGIC: &[u8; 4] = b"EAVF";
pub const FEATURE_VERSION: u32 = 1;
const HEADER: usize = 16;

#[derive(Clone, Debug, PartialEq)]
pub struct FeatureFile {
    pub labels: Vec<usize>,
    /// `[n, dim]`
    pub data: Tensor,
}

impl FeatureFile {
    pub fn new(labels: Vec<usize>, data: Tensor) -> Result<Self> {
        if data.rank() != 2 || data.shape()[0] != labels.len() {
            return Err(Error::shape(format!(
                "feature data {:?} does not match {} labels",
                data.shape(),
                labels.len()
            )));
        }
        if let Some(&l) = labels.iter().find(|&&l| l >= NUM_CLASSES) {
            return Err(Error::invalid(format!("label {l} out of range")));
        }
        Ok(Self { labels, data })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.data.shape()[1]
    }

    pub fn encoded_len(n: usize, dim: usize) -> usize {
        HEADER + 4 * n + 4 * n * dim
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(Self::encoded_len(self.len(), self.dim()));
        out.extend_from_slice(FEATURE_MAGIC);
        for v in [FEATURE_VERSION, self.len() as u32, self.dim() as u32] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        for &l in &self.labels {
            out.extend_from_slice(&(l as i32).to_le_bytes());
        }
        for &v in self.data.data() {
            out.extend_from_slice(&(v as f32).to_le_bytes());
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let bad = |msg: String| Error::format("feature file", msg);
        if bytes.len() < HEADER {
            return Err(bad(format!("{} bytes is shorter than the header", bytes.len())));
        }
        if &bytes[..4] != FEATURE_MAGIC {
            return Err(bad("bad magic".into()));
        }
        let word = |i: usize| u32::from_le_bytes(bytes[4 * i..4 * i + 4].try_into().expect("4 bytes"));
        let (version, n, dim) = (word(1), word(2) as usize, word(3) as usize);
        if version != FEATURE_VERSION {
            return Err(bad(format!("unsupported version {version}")));
        }
        if n == 0 || dim == 0 {
            return Err(bad(format!("empty matrix (n = {n}, dim = {dim})")));
        }
        let expected = n
            .checked_mul(dim)
            .and_then(|nd| nd.checked_add(n))
            .and_then(|c| c.checked_mul(4))
            .and_then(|b| b.checked_add(HEADER));
        if expected != Some(bytes.len()) {
            return Err(bad(format!("{} bytes for n = {n}, dim = {dim}", bytes.len())));
        }
        let floats = |s: &[u8]| -> Vec<[u8; 4]> { s.chunks_exact(4).map(|c| c.try_into().expect("4 bytes")).collect() };
        let body = &bytes[HEADER..];
        let labels = floats(&body[..4 * n])
            .into_iter()
            .enumerate()
            .map(|(i, b)| {
                let l = i32::from_le_bytes(b);
                usize::try_from(l)
                    .ok()
                    .filter(|&l| l < NUM_CLASSES)
                    .ok_or_else(|| bad(format!("row {i} has label {l}")))
            })
            .collect::<Result<Vec<_>>>()?;
        let data: Vec<f64> = floats(&body[4 * n..]).into_iter().map(|b| f32::from_le_bytes(b) as f64).collect();
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(bad(format!("non-finite value in row {}", i / dim.max(1))));
        }
        Self::new(labels, Tensor::new(vec![n, dim], data)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.encode()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::decode(&bytes)
    }
}
