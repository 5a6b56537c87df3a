//! Hölder exponent fits, the sharp exponent formula, Dini moduli and the
//! ball-growth condition on measures.

mod dini;
mod exponent;
mod measure;

pub use dini::{dini, dini_integral, log_radii, DiniModulus, PairMode, EXHAUSTIVE_BUDGET};
pub use exponent::{default_radii, fit_exponent, log_log_fit, ExponentFit, R2_TRUSTED};
pub use measure::{measure_condition_check, BallMeasure, Lebesgue, MeasureCheck, PointMass, RadialPower, WeightedPoints};

use crate::geometry::GeometryError;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RegularityError {
    #[error("exponent p = {p} is not admissible for n = {n}: need p > {bound}")]
    InadmissibleExponent { n: usize, p: f64, bound: f64 },
    #[error("dimension {n} is not supported (need n >= 2)")]
    Dimension { n: usize },
    #[error("need at least 4 radii, got {got}")]
    TooFewRadii { got: usize },
    #[error("radii must be positive and strictly decreasing")]
    RadiiOrder,
    #[error("ball of radius {r} around {x0:?} leaves the grid")]
    RadiusOutsideGrid { r: f64, x0: [f64; 2] },
    #[error("support defect is not positive at radius {r}")]
    DegenerateDefect { r: f64 },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// `α = β(n+1)/(2n² + β(n−1))` with `β = 1 − (n+1)/(2p)`, for
/// `p > (n+1)/2`. `p = ∞` gives `1/(2n−1)`.
pub fn sharp_alpha(n: usize, p: f64) -> Result<f64, RegularityError> {
    if n < 2 {
        return Err(RegularityError::Dimension { n });
    }
    let nf = n as f64;
    let bound = 0.5 * (nf + 1.0);
    if p.is_nan() || p <= bound {
        return Err(RegularityError::InadmissibleExponent { n, p, bound });
    }
    let beta = if p.is_infinite() { 1.0 } else { 1.0 - (nf + 1.0) / (2.0 * p) };
    Ok(beta * (nf + 1.0) / (2.0 * nf * nf + beta * (nf - 1.0)))
}
