use crate::error::{Error, Result};

/// Default 30-electrode 10-20 montage, in data row order.
pub const DEFAULT_CHANNELS: [&str; 30] = [
    "Fp1", "Fp2", "F7", "F3", "Fz", "F4", "F8", "FC5", "FC1", "FC2", "FC6", "T7", "C3", "Cz",
    "C4", "T8", "TP9", "CP5", "CP1", "CP2", "CP6", "TP10", "P7", "P3", "Pz", "P4", "P8", "O1",
    "Oz", "O2",
];

/// Homologous (left, right) electrode pairs, F3-F4 second.
pub const DEFAULT_PAIRS: [(&str, &str); 6] = [
    ("Fp1", "Fp2"),
    ("F3", "F4"),
    ("F7", "F8"),
    ("C3", "C4"),
    ("P3", "P4"),
    ("O1", "O2"),
];

/// Index of the F3-F4 pair in [`DEFAULT_PAIRS`].
pub const FRONTAL_PAIR: usize = 1;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HemispherePair {
    pub name: String,
    pub left: usize,
    pub right: usize,
    /// Receives the extra attention weight in the tri-stream model.
    pub frontal: bool,
}

/// Channel names plus the six hemisphere pairs resolved to row indices.
#[derive(Clone, Debug, PartialEq)]
pub struct Montage {
    pub channels: Vec<String>,
    pub pairs: Vec<HemispherePair>,
}

impl Default for Montage {
    fn default() -> Self {
        Self::new(&DEFAULT_CHANNELS, &DEFAULT_PAIRS).expect("default montage is consistent")
    }
}

impl Montage {
    pub fn new(channels: &[&str], pairs: &[(&str, &str)]) -> Result<Self> {
        if pairs.len() != 6 {
            return Err(Error::invalid(format!(
                "montage needs exactly 6 hemisphere pairs, got {}",
                pairs.len()
            )));
        }
        let find = |name: &str| {
            channels
                .iter()
                .position(|c| c.eq_ignore_ascii_case(name))
                .ok_or_else(|| Error::invalid(format!("electrode {name} not in montage")))
        };
        let pairs = pairs
            .iter()
            .map(|(l, r)| {
                Ok(HemispherePair {
                    name: format!("{l}-{r}"),
                    left: find(l)?,
                    right: find(r)?,
                    frontal: l.eq_ignore_ascii_case("F3") && r.eq_ignore_ascii_case("F4"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            channels: channels.iter().map(|s| s.to_string()).collect(),
            pairs,
        })
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.channels.iter().position(|c| c.eq_ignore_ascii_case(name))
    }
}
