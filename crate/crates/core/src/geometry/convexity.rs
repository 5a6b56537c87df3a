use super::{GeometryError, GridFunction};
use crate::genfun::{GenFun, PhasePoint};

/// Result of [`check_g_convexity`].
#[derive(Debug, Clone, PartialEq)]
pub struct GConvexityReport {
    /// `min_x [u(x) − g(x, y_k, z_k)]` over all nodes and all tested supports
    /// (nonnegative up to discretization error for g-convex `u`).
    pub min_gap: f64,
    /// Node where the worst support was taken.
    pub worst_touch: [f64; 2],
    pub supports_tested: usize,
    /// Touch points whose `(y, z)` solve failed.
    pub failed: usize,
}

impl GConvexityReport {
    pub fn holds(&self, tol: f64) -> bool {
        self.min_gap >= -tol && self.failed == 0
    }
}

/// Discrete g-convexity certificate: at every `stride`-th interior node build
/// the support through the central-difference gradient and measure how far
/// `u` dips below it anywhere on the grid.
pub fn check_g_convexity(u: &GridFunction, gf: &GenFun, stride: usize) -> Result<GConvexityReport, GeometryError> {
    let s = u.spec;
    let stride = stride.max(1);
    let mut rep = GConvexityReport { min_gap: f64::INFINITY, worst_touch: [0.0; 2], supports_tested: 0, failed: 0 };
    for j in (1..s.ny - 1).step_by(stride) {
        for i in (1..s.nx - 1).step_by(stride) {
            let x = s.point(i, j);
            let q = PhasePoint::new(x.to_vec(), u.at(i, j), u.gradient(i, j).to_vec());
            let Ok((y, z)) = gf.solve_yz(&q, None) else {
                rep.failed += 1;
                continue;
            };
            rep.supports_tested += 1;
            for k in 0..s.len() {
                let gap = u.values[k] - gf.g(&s.point_k(k), &y, z)?;
                if gap < rep.min_gap {
                    rep.min_gap = gap;
                    rep.worst_touch = x;
                }
            }
        }
    }
    Ok(rep)
}
