//! Experiment configuration, persistence, bundled experiments and
//! reproducible runs.

mod config;
mod io;
mod manifest;
mod run;

pub use config::{
    DiffusionConfig, DiffusionMethod, ExperimentConfig, FlowConfig, GeometryConfig, GluedConfig, InitSpec, PinchConfig,
    TransportConfig, WarpedConfig,
};
pub use io::{
    fmt_f64, read_diffusion, read_glued, read_measure, read_profile, read_trajectory, write_diffusion, write_glued,
    write_json, write_measure, write_plan, write_profile, write_trajectory,
};
pub use manifest::{sha256_file, FileEntry, RunManifest, StageRecord, StageStatus};
pub use run::{
    bundled, diffuse, diffusion_clock, initial_density, oracle_suite, radial_sweep, registry_list, run_experiment,
    run_many, ExperimentInfo,
};

use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),
    #[error("unknown experiment {0:?}")]
    UnknownExperiment(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {reason}")]
    Format { path: PathBuf, reason: String },
    #[error(transparent)]
    Numerical(#[from] crate::Error),
    #[error("property check failed: {0}")]
    Check(String),
}

impl HarnessError {
    /// Process exit code: 2 for configuration and input errors, 3 for
    /// numerical failures, 4 for violated properties.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Numerical(e) if e.is_input_error() => 2,
            HarnessError::Numerical(e) if e.is_property_violation() => 4,
            HarnessError::Numerical(_) => 3,
            HarnessError::Check(_) => 4,
            _ => 2,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        HarnessError::Io { path: path.into(), source }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, reason: impl ToString) -> Self {
        HarnessError::Format { path: path.into(), reason: reason.to_string() }
    }
}

macro_rules! numerical_from {
    ($($t:ty),*) => {
        $(impl From<$t> for HarnessError {
            fn from(e: $t) -> Self {
                HarnessError::Numerical(e.into())
            }
        })*
    };
}

numerical_from!(
    crate::geometry::GeometryError,
    crate::flow::FlowError,
    crate::heat::HeatError,
    crate::transport::TransportError,
    crate::pinch_analysis::PinchError
);
