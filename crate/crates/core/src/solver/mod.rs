//! Dirichlet solver for `det[D²u − A(·,u,Du)] = B(·,u,Du)` on 2D grids, the
//! constant-RHS approximating cascade and the Pogorelov refinement study.

mod cascade;
mod discrete;
mod newton;
mod pogorelov;
mod problem;

pub use cascade::{approximating_problem, cascade, rescale, CascadeConfig, CascadeReport, CascadeState, Density, RescaledState};
pub use discrete::{clamped_det, DET_FLOOR};
pub use newton::{poisson_guess, residual, solve};
pub use pogorelov::{density_at, pogorelov_check, shape_derivative_experiment, PogorelovRow, PogorelovTable, ShapeRow};
pub use problem::{DirichletProblem, Rhs, SolveOptions, SolveReport};

use crate::genfun::GenFunError;
use crate::geometry::GeometryError;
use nalgebra::Matrix2;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error("Newton stalled after {iterations} iterations with residual {residual:e}")]
    NewtonDiverged { iterations: usize, residual: f64 },
    #[error("ellipticity lost: min eigenvalue {min_eigen:e} at {at:?}")]
    EllipticityLost { min_eigen: f64, at: [f64; 2] },
    #[error("right-hand side {value} is not positive at {at:?}")]
    NonpositiveRhs { value: f64, at: [f64; 2] },
    #[error("coefficients unavailable at {at:?}: {source}")]
    Coefficients { at: [f64; 2], source: GenFunError },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("sparse solve failed: {0}")]
    Linear(String),
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    #[error("stage {k} domain spans only {cells} cells")]
    StageTooDeep { k: usize, cells: usize },
}

/// Spectral norm of a symmetric 2×2 matrix.
pub fn sym_norm(m: &Matrix2<f64>) -> f64 {
    let (a, b, c) = (m[(0, 0)], 0.5 * (m[(0, 1)] + m[(1, 0)]), m[(1, 1)]);
    let mean = 0.5 * (a + c);
    let r = (0.25 * (a - c) * (a - c) + b * b).sqrt();
    (mean + r).abs().max((mean - r).abs())
}
