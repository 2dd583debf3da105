use crate::error::{Error, Result};

/// Named EEG frequency band, `[f_low, f_high]` in Hz.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BandDef {
    pub name: &'static str,
    pub f_low: f64,
    pub f_high: f64,
}

/// δ, θ, α, β, γ.
pub const BANDS: [BandDef; 5] = [
    BandDef { name: "delta", f_low: 0.5, f_high: 4.0 },
    BandDef { name: "theta", f_low: 4.0, f_high: 8.0 },
    BandDef { name: "alpha", f_low: 8.0, f_high: 13.0 },
    BandDef { name: "beta", f_low: 13.0, f_high: 30.0 },
    BandDef { name: "gamma", f_low: 30.0, f_high: 45.0 },
];

pub const ALPHA: usize = 2;

impl BandDef {
    pub fn validate(&self, fs: f64) -> Result<()> {
        if !(self.f_low > 0.0 && self.f_low < self.f_high && self.f_high <= fs / 2.0) {
            return Err(Error::invalid(format!(
                "band {} [{}, {}] Hz outside (0, {}] Hz",
                self.name,
                self.f_low,
                self.f_high,
                fs / 2.0
            )));
        }
        Ok(())
    }
}
