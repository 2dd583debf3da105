//! File-level pipeline: manifests, per-subject splits, synthetic datasets,
//! feature files, train/eval reports and the attention-lab drivers.

mod attnlab;
mod extract;
mod feature_file;
mod manifest;
mod report;
mod split;
mod synth;

pub use attnlab::{cost_summary, gradcheck_report, CostSummary, GradcheckReport, GRADCHECK_TOLERANCE};
pub use extract::{extract_features, ExtractOptions, ExtractSummary};
pub use feature_file::{FeatureFile, FEATURE_MAGIC, FEATURE_VERSION};
pub use manifest::{
    encode_f32le, load_manifest, save_manifest, Dtype, Manifest, Modality, SubjectEntry, TrialEntry, TrialRef,
};
pub use report::{align, mean_std, train_eval, RunReport, SubjectResult, MIN_TRAIN_TRIALS, REPORT_LAYOUT, REPORT_VERSION};
pub use split::{split_trials, stratified_quotas, SplitSpec};
pub use synth::{pink_noise, synth_dataset, AudioSynth, EegSynth, SynthSpec, SynthTrial, VisionSynth, MANIFEST_NAME};
