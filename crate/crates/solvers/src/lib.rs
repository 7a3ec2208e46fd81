//! Cell-centered finite-volume solvers on one-dimensional network grids:
//! vessel flow with solute transport and adaptive refinement
//! ([`network`]), and root water uptake with random growth ([`roots`]).

// `!(x > 0.0)` is used on purpose so that NaN parameters are rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod fv;
pub mod linalg;
pub mod network;
pub mod roots;
pub mod scenario;

use netgrid::io::IoError;
use netgrid::GridError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Io(#[from] IoError),
    #[error("linear system of size {size} is singular (check boundary conditions)")]
    Singular { size: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("network solvers need a one-dimensional grid, got dimension {0}")]
    NotANetwork(usize),
    #[error(transparent)]
    Scenario(#[from] scenario::ScenarioError),
}

pub type Result<T, E = SolverError> = std::result::Result<T, E>;
