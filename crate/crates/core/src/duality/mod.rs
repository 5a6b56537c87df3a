//! The g*-transform: the z-solve of `g = u`, grid envelopes in both
//! directions and the normal-form diagnostic of a generating function.

mod envelope;
mod normal_form;

pub use envelope::{double_transform, double_transform_check, dual_grid, g_star_transform, DualFunction, RoundTrip};
pub use normal_form::{gen_exp_normal_form, NormalForm, TAYLOR_STEP};

use crate::genfun::{GenFun, GenFunError};
use crate::geometry::GeometryError;
use crate::gfdsl::EvalError;
use thiserror::Error;

/// Residual target of [`z_inverse`], relative to `max(1, |u|)`.
pub const Z_INVERSE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DualityError {
    #[error("value {u} is outside g(x, y, I) = [{lo}, {hi}] at x={x:?}, y={y:?}")]
    OutOfRange { u: f64, lo: f64, hi: f64, x: Vec<f64>, y: Vec<f64> },
    #[error("z-solve did not converge at x={x:?}, y={y:?} (residual {residual:e})")]
    NoConvergence { x: Vec<f64>, y: Vec<f64>, residual: f64 },
    #[error("no admissible x for {} dual node(s), first at {:?}", .nodes.len(), .nodes.first())]
    EmptyAdmissibleSet { nodes: Vec<[f64; 2]> },
    #[error("E is degenerate at the base point: |det E| = {det:e}")]
    DegenerateE { det: f64 },
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    GenFun(#[from] GenFunError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// The unique `z ∈ I` with `g(x, y, z) = u`, using that `g` is strictly
/// decreasing in `z`: safeguarded Newton inside a shrinking bracket.
pub fn z_inverse(gf: &GenFun, x: &[f64], y: &[f64], u: f64) -> Result<f64, DualityError> {
    let iv = gf.domain().z_interval;
    let (mut a, mut b) = (iv.lo, iv.hi);
    let (ga, gb) = (gf.g(x, y, a)?, gf.g(x, y, b)?);
    if !(u <= ga && u >= gb) {
        return Err(DualityError::OutOfRange { u, lo: gb, hi: ga, x: x.to_vec(), y: y.to_vec() });
    }
    let tol = Z_INVERSE_TOL * u.abs().max(1.0);
    let mut z = match gf.gz_constant() {
        // Affine in z: exact up to rounding, polished below.
        Some(c) => (0.0f64 + (u - gf.g(x, y, 0.0)?) / c).clamp(a, b),
        None => 0.5 * (a + b),
    };
    let mut residual = f64::INFINITY;
    for _ in 0..200 {
        let jet = gf.newton_jet(x, y, z)?;
        residual = jet.g - u;
        if residual.abs() <= tol {
            return Ok(z);
        }
        // g decreasing: g > u means the root lies above z.
        if residual > 0.0 {
            a = z;
        } else {
            b = z;
        }
        let step = z - residual / jet.gz;
        z = if step > a && step < b && jet.gz < 0.0 { step } else { 0.5 * (a + b) };
        if b - a <= f64::EPSILON * z.abs().max(1.0) {
            break;
        }
    }
    let last = gf.g(x, y, z)? - u;
    if last.abs() <= tol {
        return Ok(z);
    }
    Err(DualityError::NoConvergence { x: x.to_vec(), y: y.to_vec(), residual: residual.abs().min(last.abs()) })
}
