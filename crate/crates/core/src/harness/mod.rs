//! Batch pipeline: job intake from a watched directory, scene and profile
//! generation, simulation, evaluation and a content-addressed run store.

mod config;
mod experiments;
mod job;
mod store;

use std::path::Path;

use thiserror::Error;

pub use config::{ExperimentSettings, HarnessConfig, OscillationSettings, SimSettings, STORE_ENV};
pub use experiments::{
    execute_case, find_t_initiate, predicted_test_start, run_experiment_1, run_experiment_2, variant_lateral, CaseRun,
    CaseSpec, ExperimentOutput, CANONICAL_VARIANTS,
};
pub use job::{execute_job, Job, JobExperiment, JobManifest, JobOutput, JobStatus, VariationJob};
pub use store::{report, run_pending, watch_and_run, BatchSummary, JobRecord, RunStore, StoreReport, WatchOptions};

use crate::dsl::DslError;
use crate::evaluation::EvaluationError;
use crate::protocol::ValidityError;
use crate::sim::{SimError, TriggerError};
use crate::variation::VariationError;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config: {0}")]
    Config(String),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error(transparent)]
    Dsl(#[from] DslError),
    #[error(transparent)]
    Variation(#[from] VariationError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Trigger(#[from] TriggerError),
    #[error(transparent)]
    Validity(#[from] ValidityError),
    #[error(transparent)]
    Evaluation(#[from] EvaluationError),
    #[error("the approach never reaches the test start")]
    NoTestStart,
    #[error("no constant-speed trigger time for variant `{variant}` at {speed_kmh} km/h")]
    MissingReference { variant: String, speed_kmh: f64 },
    #[error("T_initiate {t_initiate} s is below the {minimum:.3} s needed to reach {target_kmh} km/h")]
    InfeasibleTInitiate { t_initiate: f64, minimum: f64, target_kmh: f64 },
    #[error("job: {0}")]
    Job(String),
    #[error("job status cannot go from {from} to {to}")]
    StatusRegression { from: JobStatus, to: JobStatus },
    #[error("replay of job {id} differs in {file}")]
    ReplayMismatch { id: String, file: String },
}

impl HarnessError {
    pub(crate) fn io(path: &Path, e: std::io::Error) -> Self {
        HarnessError::Io { path: path.display().to_string(), message: e.to_string() }
    }
}
