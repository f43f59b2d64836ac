//! Repeated-seed experiment protocol: train, calibrate on validation,
//! evaluate on test, aggregate, and render reports.

mod config;
mod report;
mod run;
pub mod svg;

pub use config::{tuned_entries, tuned_train_config, DatasetSource, ExperimentConfig, ExperimentEntry};
pub use report::{
    aggregate, median, render_charts, runs_csv, summary_csv, ChartSet, EntryReport, ExperimentReport, RunOutcome,
    RunRecord, Summary,
};
pub use run::{derive_seed, load_manifest, run_experiment, Manifest, WORKERS_ENV};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("invalid experiment config: {0}")]
    InvalidConfig(String),
    #[error("manifest in {0} belongs to a different experiment; use a fresh output directory")]
    ManifestMismatch(std::path::PathBuf),
    #[error("corrupt manifest: {0}")]
    CorruptManifest(String),
    #[error("report is missing data: {0}")]
    MissingField(String),
    #[error(transparent)]
    Dataset(#[from] crate::sigsim::SigsimError),
    #[error(transparent)]
    Detect(#[from] crate::detect::DetectError),
    #[error(transparent)]
    Cost(#[from] crate::costmodel::CostError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

pub(crate) fn io_err(context: impl Into<String>) -> impl FnOnce(std::io::Error) -> BenchError {
    let context = context.into();
    move |source| BenchError::Io { context, source }
}
