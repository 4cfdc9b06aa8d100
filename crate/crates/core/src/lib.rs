//! Calibration error measurement and post-hoc recalibration for taggers with
//! sparse tagsets.
//!
//! Raw per-tag confidence scores are thresholded into a
//! [`CalibrationDataset`]; recalibrators ([`Method`]) are fitted either on
//! all tags pooled together or per tag-frequency group ([`build_tfg`]); and
//! calibration is measured with the pooled ([`smce`]) and per-group
//! ([`gmce`]) binned errors.

pub mod binning;
pub mod data;
pub mod error;
pub mod grouping;
pub mod ingest;
pub mod metrics;
pub mod pipeline;
pub mod recalibrate;
pub mod report;
pub mod synth;

pub use binning::{adaptive_bins, fixed_width_bins, locate_bin, BinPartition};
pub use data::{CalibrationDataset, ScoreRecord, ScoredLabel, TagCountTable};
pub use error::{Error, Result};
pub use grouping::{build_tfg, group_statistics, GroupPartition, GroupStatistics};
pub use ingest::{load_dataset, load_gold, load_scores, load_tag_counts, GoldMap, RawScoreRow};
pub use metrics::{gmce, per_class_mce, relative_delta, smce};
pub use pipeline::{
    evaluate_split, run_experiment, run_experiment_on, ExperimentConfig, ExperimentOutput,
    ExperimentSettings,
};
pub use recalibrate::{
    fit_calibrator, fit_grouped, fit_histogram, fit_isotonic, fit_scaling_binning, fit_shared,
    Calibrator, Method, RecalibratorModel, Scope,
};
pub use report::{render_report, EvaluationReport, ReportFormat};
pub use synth::{generate, Distortion, SynthConfig, SynthData};
