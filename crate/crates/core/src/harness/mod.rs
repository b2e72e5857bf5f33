//! Experiment orchestration: reproducible sweeps, the bias-variance
//! recurrence analysis, per-label misclassification shares, the case
//! comparison, and the end-to-end pipeline driver. Results are emitted as
//! tidy CSV plus a JSON manifest; no plots are rendered.

pub mod config;
pub mod manifest;
pub mod pipeline;
pub mod reports;

pub use config::PipelineConfig;
pub use manifest::{sha256_file, sha256_hex, Manifest, StageRecord};
pub use pipeline::{pipeline_run, PipelineOutcome};
pub use reports::{
    bias_variance_run, case_comparison, misclass_share, recurrence_histogram, run_classifier,
    Algorithm, CaseCell, CaseComparisonReport, ClassifierParams, MisclassShareTable,
    RecurrenceHistogram,
};
