//! Dense real-matrix kernel: exponentials, exponential integrals, symmetric
//! eigensolving, LU solves and the algebraic Riccati solver.

mod care;
mod eig;
mod expm;
mod lu;
mod mat;

use thiserror::Error;

pub use care::{care_residual, solve_care, solve_care_with, CareOptions};
pub use eig::{lambda_max, lambda_min, sym_eig, SymEig, SYMMETRY_TOL};
pub use expm::{mat_exp, step_pair, StepPair, PADE13_THETA};
pub use lu::{det, inverse, solve_linear, Lu, SINGULAR_PIVOT_RATIO};
pub use mat::{axpy, dot, norm2, sub_vec, Mat};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MatError {
    #[error("dimension error: {0}")]
    Dimension(String),
    #[error("non-finite entry at ({row}, {col})")]
    NotFinite { row: usize, col: usize },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("matrix is numerically singular (pivot {pivot:e}, norm {scale:e})")]
    Singular { pivot: f64, scale: f64 },
    #[error("synthesis infeasible: {0}")]
    Infeasible(String),
}
