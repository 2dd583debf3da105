use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::audio::{CLIP_SAMPLES, SAMPLE_RATE};
use crate::eeg::{BANDS, EEG_CHANNELS, EEG_SAMPLES, EEG_SAMPLING_RATE};
use crate::error::{Error, Result};
use crate::numkit::{dft_real, idft_real, Rng, Tensor};
use crate::vision::VISION_FRAMES;
use crate::NUM_CLASSES;

use super::manifest::{encode_f32le, save_manifest, Dtype, Manifest, Modality, SubjectEntry, TrialEntry};

pub const MANIFEST_NAME: &str = "manifest.json";

/// EEG: unit-variance pink noise plus a bank of sinusoids in every band;
/// class `k` multiplies the amplitude of band `k`'s tones by `boost`.
/// Each subject has fixed per-channel gains.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EegSynth {
    pub boost: f64,
    pub tone_amplitude: f64,
    pub tones_per_band: usize,
    pub gain_range: (f64, f64),
}

impl Default for EegSynth {
    fn default() -> Self {
        Self {
            boost: 2.0,
            tone_amplitude: 0.10,
            tones_per_band: 3,
            gain_range: (0.5, 1.5),
        }
    }
}

/// Audio: harmonic tone complex whose fundamental depends on the class,
/// plus white noise; per-subject loudness.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AudioSynth {
    pub fundamentals: [f64; NUM_CLASSES],
    pub jitter: f64,
    pub harmonics: usize,
    pub amplitude: f64,
    pub noise_std: f64,
    pub gain_range: (f64, f64),
}

impl Default for AudioSynth {
    fn default() -> Self {
        Self {
            fundamentals: [120.0, 150.0, 185.0, 230.0, 280.0],
            jitter: 0.03,
            harmonics: 6,
            amplitude: 0.3,
            noise_std: 0.05,
            gain_range: (0.5, 1.5),
        }
    }
}

/// Vision: frame embeddings drifting along a per-subject direction at a
/// class-dependent rate `drift · (k + 1)` per frame.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VisionSynth {
    pub dim: usize,
    pub drift: f64,
    pub trial_offset_std: f64,
    pub frame_noise_std: f64,
}

impl Default for VisionSynth {
    fn default() -> Self {
        Self {
            dim: 32,
            drift: 0.02,
            trial_offset_std: 0.5,
            frame_noise_std: 0.05,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub modality: Modality,
    pub subjects: usize,
    pub trials_per_subject: usize,
    pub seed: u64,
    pub eeg: EegSynth,
    pub audio: AudioSynth,
    pub vision: VisionSynth,
}

/// One generated trial.
#[derive(Clone, Debug)]
pub struct SynthTrial {
    pub label: usize,
    pub data: Tensor,
}

impl SynthSpec {
    pub fn new(modality: Modality, subjects: usize, trials_per_subject: usize, seed: u64) -> Self {
        Self {
            modality,
            subjects,
            trials_per_subject,
            seed,
            eeg: EegSynth::default(),
            audio: AudioSynth::default(),
            vision: VisionSynth::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.subjects == 0 || self.trials_per_subject == 0 {
            return Err(Error::invalid("subject and trial counts must be at least 1"));
        }
        let (lo, hi) = self.eeg.gain_range;
        if !(lo > 0.0 && lo <= hi) || self.eeg.boost <= 0.0 || self.eeg.tones_per_band == 0 {
            return Err(Error::invalid("invalid eeg generator parameters"));
        }
        if self.vision.dim == 0 || self.audio.harmonics == 0 {
            return Err(Error::invalid("invalid generator parameters"));
        }
        Ok(())
    }

    /// Label of trial `t`: classes cycle so every subject is balanced.
    pub fn label(t: usize) -> usize {
        t % NUM_CLASSES
    }

    pub fn shape(&self) -> Vec<usize> {
        match self.modality {
            Modality::Eeg => vec![EEG_CHANNELS, EEG_SAMPLES],
            Modality::Audio => vec![CLIP_SAMPLES],
            Modality::Vision => vec![VISION_FRAMES, self.vision.dim],
        }
    }

    fn subject_rng(&self, s: usize) -> Rng {
        Rng::stream(self.seed, (s as u64) << 32)
    }

    fn trial_rng(&self, s: usize, t: usize) -> Rng {
        Rng::stream(self.seed, ((s as u64) << 32) | (t as u64 + 1))
    }

    /// All trials of subject `s`, in order. Each trial has its own stream,
    /// so the result does not depend on thread scheduling.
    pub fn generate_subject(&self, s: usize) -> Result<Vec<SynthTrial>> {
        self.validate()?;
        let mut srng = self.subject_rng(s);
        let subject = SubjectParams::draw(self, &mut srng);
        (0..self.trials_per_subject)
            .into_par_iter()
            .map(|t| {
                let label = Self::label(t);
                let mut rng = self.trial_rng(s, t);
                let data = match self.modality {
                    Modality::Eeg => eeg_trial(&self.eeg, &subject, label, &mut rng)?,
                    Modality::Audio => audio_trial(&self.audio, &subject, label, &mut rng)?,
                    Modality::Vision => vision_trial(&self.vision, &subject, label, &mut rng)?,
                };
                Ok(SynthTrial { label, data })
            })
            .collect()
    }
}

struct SubjectParams {
    gains: Vec<f64>,
    base: Vec<f64>,
    direction: Vec<f64>,
}

impl SubjectParams {
    fn draw(spec: &SynthSpec, rng: &mut Rng) -> Self {
        match spec.modality {
            Modality::Eeg => {
                let (lo, hi) = spec.eeg.gain_range;
                Self {
                    gains: (0..EEG_CHANNELS).map(|_| rng.uniform_range(lo, hi)).collect(),
                    base: Vec::new(),
                    direction: Vec::new(),
                }
            }
            Modality::Audio => {
                let (lo, hi) = spec.audio.gain_range;
                Self {
                    gains: vec![rng.uniform_range(lo, hi)],
                    base: Vec::new(),
                    direction: Vec::new(),
                }
            }
            Modality::Vision => {
                let d = spec.vision.dim;
                let base = (0..d).map(|_| rng.normal()).collect();
                let mut direction: Vec<f64> = (0..d).map(|_| rng.normal()).collect();
                let norm = direction.iter().map(|v| v * v).sum::<f64>().sqrt();
                direction.iter_mut().for_each(|v| *v /= norm);
                Self {
                    gains: Vec::new(),
                    base,
                    direction,
                }
            }
        }
    }
}

/// Unit-variance noise with a `1/f` power spectrum and no DC component.
pub fn pink_noise(n: usize, rng: &mut Rng) -> Result<Vec<f64>> {
    let white: Vec<f64> = (0..n).map(|_| rng.normal()).collect();
    let mut spec = dft_real(&white, 1.0)?;
    spec.bins[0] = Default::default();
    for (k, b) in spec.bins.iter_mut().enumerate().skip(1) {
        *b /= (k as f64).sqrt();
    }
    let mut x = idft_real(&spec);
    let mean = x.iter().sum::<f64>() / n as f64;
    let std = (x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
    x.iter_mut().for_each(|v| *v = (*v - mean) / std);
    Ok(x)
}

fn eeg_trial(p: &EegSynth, subject: &SubjectParams, label: usize, rng: &mut Rng) -> Result<Tensor> {
    // one frequency per tone, shared by all channels of the trial
    let tones: Vec<(f64, f64)> = BANDS
        .iter()
        .enumerate()
        .flat_map(|(b, band)| {
            let amp = p.tone_amplitude * if b == label { p.boost } else { 1.0 };
            (0..p.tones_per_band)
                .map(|_| (rng.uniform_range(band.f_low, band.f_high), amp))
                .collect::<Vec<_>>()
        })
        .collect();
    let mut data = Vec::with_capacity(EEG_CHANNELS * EEG_SAMPLES);
    for &gain in &subject.gains {
        let mut x = pink_noise(EEG_SAMPLES, rng)?;
        for &(f, amp) in &tones {
            let phase = rng.uniform_range(0.0, 2.0 * PI);
            let w = 2.0 * PI * f / EEG_SAMPLING_RATE;
            for (t, v) in x.iter_mut().enumerate() {
                *v += amp * (w * t as f64 + phase).sin();
            }
        }
        data.extend(x.into_iter().map(|v| v * gain));
    }
    Tensor::new(vec![EEG_CHANNELS, EEG_SAMPLES], data)
}

fn audio_trial(p: &AudioSynth, subject: &SubjectParams, label: usize, rng: &mut Rng) -> Result<Tensor> {
    let f0 = p.fundamentals[label] * rng.uniform_range(1.0 - p.jitter, 1.0 + p.jitter);
    let phases: Vec<f64> = (0..p.harmonics).map(|_| rng.uniform_range(0.0, 2.0 * PI)).collect();
    let gain = subject.gains[0];
    let data = (0..CLIP_SAMPLES)
        .map(|t| {
            let time = t as f64 / SAMPLE_RATE;
            let tone: f64 = phases
                .iter()
                .enumerate()
                .map(|(h, ph)| (2.0 * PI * f0 * (h + 1) as f64 * time + ph).sin() / (h + 1) as f64)
                .sum();
            gain * (p.amplitude * tone + p.noise_std * rng.normal())
        })
        .collect();
    Tensor::new(vec![CLIP_SAMPLES], data)
}

fn vision_trial(p: &VisionSynth, subject: &SubjectParams, label: usize, rng: &mut Rng) -> Result<Tensor> {
    let d = p.dim;
    let rate = p.drift * (label + 1) as f64;
    let offset: Vec<f64> = (0..d).map(|_| p.trial_offset_std * rng.normal()).collect();
    let mut data = Vec::with_capacity(VISION_FRAMES * d);
    for t in 0..VISION_FRAMES {
        for j in 0..d {
            let drift = rate * t as f64 * subject.direction[j];
            data.push(subject.base[j] + offset[j] + drift + p.frame_noise_std * rng.normal());
        }
    }
    Tensor::new(vec![VISION_FRAMES, d], data)
}

fn trial_path(modality: Modality, s: usize, t: usize) -> PathBuf {
    PathBuf::from(modality.name()).join(format!("s{s:02}")).join(format!("t{t:04}.f32"))
}

/// Generates the dataset under `out_dir`, writes `manifest.json` there and
/// returns the manifest. Identical specs produce byte-identical files.
pub fn synth_dataset(spec: &SynthSpec, out_dir: impl AsRef<Path>) -> Result<Manifest> {
    spec.validate()?;
    let out_dir = out_dir.as_ref();
    let mut subjects = Vec::with_capacity(spec.subjects);
    for s in 0..spec.subjects {
        let dir = out_dir.join(spec.modality.name()).join(format!("s{s:02}"));
        std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        let trials = spec.generate_subject(s)?;
        let entries = trials
            .par_iter()
            .enumerate()
            .map(|(t, trial)| {
                let rel = trial_path(spec.modality, s, t);
                let path = out_dir.join(&rel);
                std::fs::write(&path, encode_f32le(trial.data.data())).map_err(|e| Error::io(&path, e))?;
                Ok(TrialEntry {
                    modality: spec.modality,
                    label: trial.label,
                    path: rel,
                    shape: spec.shape(),
                    dtype: Dtype::F32le,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        subjects.push(SubjectEntry {
            id: format!("s{s:02}"),
            trials: entries,
        });
    }
    let manifest = Manifest {
        subjects,
        generator: Some(serde_json::to_value(spec)?),
        root: out_dir.to_path_buf(),
    };
    manifest.validate()?;
    save_manifest(&manifest, out_dir.join(MANIFEST_NAME))?;
    Ok(manifest)
}
