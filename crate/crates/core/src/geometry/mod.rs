//! Sections of g-convex grid functions, the `x̃` chart, minimum enclosing
//! ellipsoids and the normalization of a section to the unit ball.

mod convexity;
mod ellipsoid;
mod estimates;
mod grid;
mod normalize;
mod section;
mod tilde;

pub use convexity::{check_g_convexity, GConvexityReport};
pub use ellipsoid::{convex_hull, convexity_defect, good_shape, min_ellipsoid, sandwich, Ellipsoid, SandwichReport, ELLIPSOID_TOL};
pub use estimates::{verify_section_estimates, EstimateRow, SectionEstimates};
pub use grid::{GridFunction, GridSpec};
pub use normalize::{normalize, Normalized};
pub use section::{polygon_area, section, section_with_support, CoordinateTag, Section};
pub use tilde::{from_tilde, to_tilde, TildeMap};

use crate::genfun::GenFunError;
use crate::gfdsl::EvalError;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("grid has {got} values, expected {expected}")]
    GridShape { expected: usize, got: usize },
    #[error("non-finite grid value at {at:?}")]
    NonFiniteValue { at: [f64; 2] },
    #[error("interpolation point {at:?} lies outside the grid")]
    InterpolationOutOfRange { at: [f64; 2] },
    #[error("section of height {h} reaches the grid boundary")]
    SectionTouchesBoundary { h: f64 },
    #[error("support at the base point could not be found: {0}")]
    SupportSolveFailed(#[from] GenFunError),
    #[error("x̃ inverse did not converge for target {target:?}")]
    InverseNoConvergence { target: Vec<f64> },
    #[error("degenerate input: {what}")]
    DegenerateInput { what: String },
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("operation supports dimension 2 only, got {n}")]
    UnsupportedDimension { n: usize },
    #[error("base point {x0:?} is not inside its own section")]
    BaseOutsideSection { x0: [f64; 2] },
}
