//! Scenario orchestration: configuration, closed-loop runs paired with
//! open-loop runs, metrics, sweeps, controller comparisons and CSV logs.

pub mod batch;
pub mod config;
pub mod csv;
pub mod metrics;
pub mod scenario;
pub mod study;

pub use config::{CommandProfile, ControllerKind, EstimatorChoice, LqgSettings, PlantSettings, ScenarioConfig, Weights};
pub use csv::{LogRow, RunLog};
pub use metrics::{reduction_rate, AllocStats, ChannelStats, LoadStats, MetricsReport, Reduction, ViolationCounts};
pub use scenario::{run_scenario, simulate, PlantTrace, ScenarioRun, SimOutput};
pub use study::{compare_controllers, count_inversions, sweep, ComparisonEntry, ComparisonRow, Condition, SweepPoint};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("controller error: {0}")]
    Controller(String),
    #[error("simulation diverged at t = {t} s")]
    Divergence { t: f64, partial: Box<RunLog> },
    #[error("malformed CSV: {0}")]
    Csv(String),
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

impl HarnessError {
    /// Process exit code: 1 configuration, 2 runtime divergence, 3 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) | HarnessError::Csv(_) | HarnessError::Json(_) => 1,
            HarnessError::Controller(_) | HarnessError::Divergence { .. } => 2,
            HarnessError::Io(_) => 3,
        }
    }

    /// Rows logged before a divergence.
    pub fn partial_log(&self) -> Option<&RunLog> {
        match self {
            HarnessError::Divergence { partial, .. } => Some(partial),
            _ => None,
        }
    }
}
