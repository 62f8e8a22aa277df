//! Projected consensus and distributed projected subgradient methods over
//! time-varying networks, with runtime certificates for their convergence
//! bounds.
//!
//! - [`convex_sets`]: exact projections, feasibility objective, interior-point error bound.
//! - [`network`]: weight schedules, transition matrices, ergodicity bound.
//! - [`consensus`]: projected consensus iteration and its diagnostics.
//! - [`subgradient_opt`]: objective oracles and the projected subgradient iteration.
//! - [`harness`]: scenario files, reference solutions, trace output.

pub mod consensus;
pub mod convex_sets;
pub mod harness;
pub mod network;
pub mod subgradient_opt;
pub mod vector;

pub use consensus::{run_consensus, ConsensusOptions, ConsensusTrace};
pub use convex_sets::{ConvexSet, SetError};
pub use network::{WeightMatrix, WeightSchedule};
pub use subgradient_opt::{run_subgradient, ConvexFunction, StepsizeSchedule};
pub use vector::Vector;
