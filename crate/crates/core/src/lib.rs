//! Event-triggered leader-follower tracking for multi-agent systems with
//! general linear dynamics.
//!
//! * [`matkit`]: dense matrix kernel (exponentials, eigen, LU, Riccati).
//! * [`graph`]: follower topology, pinning, Laplacian and the diagonal
//!   stability certificate.
//! * [`design`]: gain and trigger-parameter synthesis for directed and
//!   undirected follower graphs, with tracking and inter-event bounds.
//! * [`engine`]: exact event-driven closed-loop simulation, including the
//!   broadcast-based reconstruction of each agent's combinational state.

pub mod design;
pub mod engine;
pub mod graph;
pub mod matkit;

use thiserror::Error;

pub use matkit::{Mat, MatError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Mat(#[from] MatError),
    #[error("invalid topology: {0}")]
    Topology(String),
    #[error("graph assumption violated: {0}")]
    GraphInfeasible(String),
    #[error("synthesis infeasible: {0}")]
    Infeasible(String),
    #[error("parameter validation failed: {0}")]
    Validation(String),
    #[error("variant mismatch: {0}")]
    VariantMismatch(String),
    #[error("protocol violation: {0}")]
    Protocol(String),
    #[error("Zeno suspicion: {0}")]
    Zeno(String),
    #[error("invalid input: {0}")]
    Input(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
