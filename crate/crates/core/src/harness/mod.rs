//! Scenario files, reference solutions, deterministic execution and trace
//! output behind the `cclab` command line tool.

use std::path::PathBuf;

use thiserror::Error;

use crate::consensus::ConsensusError;
use crate::convex_sets::SetError;
use crate::network::NetworkError;
use crate::subgradient_opt::OptError;

mod engine;
mod output;
mod reference;
mod scenario;

pub use engine::{
    check_scenario, execute, thread_pool, CheckEntry, CheckReport, CheckStatus, Outcome,
    OPT_GAP_TOL, OPT_TAIL_TOL,
};
pub use output::{run_summary, write_outputs, RunSummary};
pub use reference::{analytic, grid_refine, solve_reference, ReferenceMethod, ReferenceSolution};
pub use scenario::{
    load_scenario, InitialPoints, Issue, Scenario, ScenarioKind, ValidationErrors, Witness,
};

/// Environment variable capping the worker pool; `0` or unset means one
/// thread per core.
pub const THREADS_ENV: &str = "CCLAB_THREADS";

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("scenario parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Validation(#[from] ValidationErrors),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Set(#[from] SetError),
    #[error(transparent)]
    Consensus(#[from] ConsensusError),
    #[error(transparent)]
    Opt(#[from] OptError),
    #[error("no reference solution: {0}")]
    NoReference(String),
    #[error("invalid {THREADS_ENV}: {0}")]
    Threads(String),
}

impl HarnessError {
    /// Malformed input as opposed to a failed computation.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            HarnessError::Io { .. }
                | HarnessError::Parse(_)
                | HarnessError::Validation(_)
                | HarnessError::Threads(_)
        )
    }
}
