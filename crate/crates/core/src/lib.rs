//! Virtual-battery flexibility models for aggregations of thermostatically
//! controlled loads, with network-aware calibration.
//!
//! The crate computes the sufficient and necessary battery models of a fleet,
//! evaluates how well a mixed model can be tracked under line-flow limits, and
//! searches the mixing coefficient `μ` for the largest model that remains
//! trackable. A rolling-horizon dispatch harness compares models by the wind
//! energy they let the system absorb.

pub mod battery;
pub mod cli;
pub mod dispatch;
pub mod fleet;
pub mod grid;
pub mod linalg;
pub mod lp;
pub mod oracle;
pub mod report;
pub mod search;

use thiserror::Error;

pub use battery::{BatteryError, BatteryParams, Branch};
pub use dispatch::{DispatchError, DispatchReport, DispatchScenario};
pub use fleet::{Fleet, FleetError, TclParams};
pub use grid::{GridError, NetworkModel};
pub use oracle::{OracleError, OracleInstance, OracleResult};
pub use search::{EsbmResult, SearchError, SearchMode};

/// Failures while reading input documents.
#[derive(Debug, Error)]
pub enum InputError {
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("malformed CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Fleet(#[from] FleetError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Battery(#[from] BatteryError),
    #[error(transparent)]
    Dispatch(#[from] DispatchError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Invalid(String),
}
