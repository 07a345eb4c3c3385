//! Experiment orchestration for the survival arena: phase presets, config
//! resolution, runs and sweeps with on-disk artifacts, and report tables.

pub mod audit;
pub mod fixture;
pub mod policies;
pub mod preset;
pub mod report;
pub mod resolve;
pub mod run;

use std::path::PathBuf;

use arena_core::log::LogError;
use arena_core::metrics::MetricsError;
use arena_core::{ConfigError, EngineError};
use arena_gateway::GatewayError;
use thiserror::Error;

pub use audit::{audit, AuditError, AuditReport};
pub use policies::PolicySpec;
pub use preset::{Experiment, PhasePreset, PresetName, SweepSpec};
pub use report::{analyze, AnalysisError, Report};
pub use resolve::{echo_config, parse_assignment, resolve, Overrides};
pub use run::{blob_hash, run_experiment, sweep, ExperimentRecord, RunSettings, SweepOutcome};

/// Process exit codes of the `arena` binary.
pub mod exit {
    pub const CONFIG: u8 = 2;
    pub const RUNTIME: u8 = 3;
    pub const ANALYSIS: u8 = 4;
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("overriding preset values ({}) requires --ack-overrides", .0.join(", "))]
    UnacknowledgedOverrides(Vec<String>),
    #[error("unknown sweep parameter `{0}`")]
    UnknownSweepParameter(String),
    #[error("unknown experiment `{id}` in preset {preset}")]
    UnknownExperiment { preset: String, id: String },
    #[error("LLM policies need --endpoint and --model")]
    NoEndpoint,
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("{}: {source}", path.display())]
    Log {
        path: PathBuf,
        #[source]
        source: LogError,
    },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Audit(#[from] AuditError),
    #[error("{0}")]
    Runtime(String),
}

impl HarnessError {
    pub fn exit_code(&self) -> u8 {
        match self {
            HarnessError::Config(_)
            | HarnessError::UnacknowledgedOverrides(_)
            | HarnessError::UnknownSweepParameter(_)
            | HarnessError::UnknownExperiment { .. }
            | HarnessError::NoEndpoint => exit::CONFIG,
            HarnessError::Gateway(
                GatewayError::MissingCredential { .. } | GatewayError::Config(_),
            ) => exit::CONFIG,
            HarnessError::Log { .. } | HarnessError::Analysis(_) => exit::ANALYSIS,
            HarnessError::Gateway(_)
            | HarnessError::Engine(_)
            | HarnessError::Metrics(_)
            | HarnessError::Io { .. }
            | HarnessError::Audit(_)
            | HarnessError::Runtime(_) => exit::RUNTIME,
        }
    }
}
