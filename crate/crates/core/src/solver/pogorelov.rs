use super::cascade::support_at;
use super::{solve, sym_norm, DirichletProblem, Rhs, SolveOptions, SolverError};
use crate::genfun::{GenFun, PhasePoint};
use crate::geometry::{convex_hull, good_shape, min_ellipsoid, section, section_with_support, GeometryError, GridFunction, GridSpec};

/// Growth of `sup|D²u|` per refinement above which a row is flagged.
pub const GROWTH_LIMIT: f64 = 0.25;
/// Largest `τ` the interior estimate is asserted for.
pub const TAU_FLAGGED_MAX: f64 = 0.75;

#[derive(Debug, Clone, PartialEq)]
pub struct PogorelovRow {
    pub n: usize,
    pub spacing: f64,
    /// Height of the solution's own section, `z* − (z₀ − h)`.
    pub height: f64,
    pub tau: f64,
    /// `sup_{S_{τh}} |D²u|` over grid nodes.
    pub sup_hessian: f64,
    /// Relative change against the previous grid.
    pub growth: Option<f64>,
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PogorelovTable {
    pub rows: Vec<PogorelovRow>,
    pub f0: f64,
    pub section_radius: f64,
    pub max_residual: f64,
}

impl PogorelovTable {
    pub const HEADER: &'static str = "n,spacing,height,tau,sup_hessian,growth,flagged";

    pub fn flagged(&self) -> bool {
        self.rows.iter().any(|r| r.flagged)
    }

    pub fn csv_rows(&self) -> Vec<String> {
        self.rows
            .iter()
            .map(|r| {
                format!(
                    "{},{:.16e},{:.16e},{:.16e},{:.16e},{},{}",
                    r.n,
                    r.spacing,
                    r.height,
                    r.tau,
                    r.sup_hessian,
                    r.growth.map_or(String::new(), |g| format!("{g:.16e}")),
                    r.flagged
                )
            })
            .collect()
    }
}

/// Distance from `x₀` to the boundary of `{base < g(·, y₀, z₀ − h)}` along
/// 32 rays, by bisection; the largest one.
fn section_radius(gf: &GenFun, base: &dyn Fn([f64; 2]) -> f64, x0: [f64; 2], y0: &[f64], z_h: f64) -> Result<f64, SolverError> {
    let ub = &gf.domain().u_box;
    let reach = ub.iter().map(|i| i.width()).fold(0.0, f64::max);
    let inside = |p: [f64; 2]| -> Result<bool, SolverError> {
        Ok(base(p) < gf.g(&p, y0, z_h).map_err(GeometryError::from)?)
    };
    let mut radius: f64 = 0.0;
    for r in 0..32 {
        let th = std::f64::consts::TAU * r as f64 / 32.0;
        let d = [th.cos(), th.sin()];
        let at = |t: f64| [x0[0] + t * d[0], x0[1] + t * d[1]];
        let (mut lo, mut hi) = (0.0, reach);
        if inside(at(hi))? {
            return Err(SolverError::InvalidProblem("section reaches the edge of the domain box".into()));
        }
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if inside(at(mid))? {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        radius = radius.max(hi);
    }
    Ok(radius)
}

/// `Z` with `g(x, y, Z) = u`, by Newton in `z`.
fn z_level(gf: &GenFun, x: [f64; 2], y: &[f64], u: f64, mut z: f64) -> Result<f64, SolverError> {
    for _ in 0..60 {
        let jet = gf.jet(&x, y, z).map_err(GeometryError::from)?;
        let step = (jet.g - u) / jet.gz;
        z -= step;
        if step.abs() <= 1e-14 * (1.0 + z.abs()) {
            return Ok(z);
        }
    }
    Err(GeometryError::InverseNoConvergence { target: x.to_vec() }.into())
}

/// Density `det(D²u − A)/|det E|` of a smooth function at `x`, with the
/// Hessian by central differences.
pub fn density_at(gf: &GenFun, u: &dyn Fn([f64; 2]) -> f64, x: [f64; 2]) -> Result<f64, SolverError> {
    let (e1, e2) = (1e-6, 1e-4);
    let at = |dx: f64, dy: f64| u([x[0] + dx, x[1] + dy]);
    let p = [(at(e1, 0.0) - at(-e1, 0.0)) / (2.0 * e1), (at(0.0, e1) - at(0.0, -e1)) / (2.0 * e1)];
    let c = at(0.0, 0.0);
    let uxx = (at(e2, 0.0) - 2.0 * c + at(-e2, 0.0)) / (e2 * e2);
    let uyy = (at(0.0, e2) - 2.0 * c + at(0.0, -e2)) / (e2 * e2);
    let uxy = (at(e2, e2) - at(e2, -e2) - at(-e2, e2) + at(-e2, -e2)) / (4.0 * e2 * e2);
    let fo = gf
        .first_order(&PhasePoint::new(x.to_vec(), c, p.to_vec()), None)
        .map_err(|source| SolverError::Coefficients { at: x, source })?;
    let w = nalgebra::Matrix2::new(uxx - fo.a[(0, 0)], uxy - fo.a[(0, 1)], uxy - fo.a[(1, 0)], uyy - fo.a[(1, 1)]);
    Ok(w.determinant() / fo.b_factor.abs())
}

/// Solves `det[D²u − A] = f₀ |det E|` on the section `S_h` of `base` at
/// `x₀` with `u = base` outside, on each grid size in `grids`; `f₀`
/// defaults to the density of `base` at `x₀`. Densities far from that of
/// `base` put an O(1) slope jump across the staircase boundary, where the
/// 9-point stencil has no convex solution. The solution
/// takes the boundary values `g(·, y₀, z₀ − h)`; its own touching support in
/// the `y₀` family is `g(·, y₀, z*)` at `x̄`, so it is a section of height
/// `h* = z* − z₀ + h`. Tabulates `sup_{S_{τh*}} |D²u|` with
/// `S_{τh*} = {u < g(·, y₀, z* − τh*)}`.
#[allow(clippy::too_many_arguments)]
pub fn pogorelov_check(
    gf: &GenFun,
    base: &dyn Fn([f64; 2]) -> f64,
    x0: [f64; 2],
    h: f64,
    f0: Option<f64>,
    taus: &[f64],
    grids: &[usize],
    opts: &SolveOptions,
) -> Result<PogorelovTable, SolverError> {
    let f0 = match f0 {
        Some(v) => v,
        None => density_at(gf, base, x0)?,
    };
    let eps = 1e-6;
    let u0 = base(x0);
    let du = [
        (base([x0[0] + eps, x0[1]]) - base([x0[0] - eps, x0[1]])) / (2.0 * eps),
        (base([x0[0], x0[1] + eps]) - base([x0[0], x0[1] - eps])) / (2.0 * eps),
    ];
    let (y0, z0) = gf
        .solve_yz(&PhasePoint::new(x0.to_vec(), u0, du.to_vec()), None)
        .map_err(|e| SolverError::Geometry(GeometryError::SupportSolveFailed(e)))?;
    let radius = section_radius(gf, base, x0, &y0, z0 - h)?;
    let half = 1.25 * radius;
    let mut rows = Vec::new();
    let mut prev: Vec<Option<f64>> = vec![None; taus.len()];
    let mut max_residual: f64 = 0.0;
    for &n in grids {
        let spacing = 2.0 * half / (n - 1) as f64;
        let spec = GridSpec::new([x0[0] - half, x0[1] - half], spacing, n, n);
        let ub = GridFunction::from_fn(spec, base)?;
        let outer = section_with_support(&ub, gf, x0, &y0, z0, h)?;
        let problem = DirichletProblem::masked(gf, &ub, outer.component, Rhs::Constant(f0)).with_initial(ub.values.clone());
        let rep = solve(&problem, opts)?;
        max_residual = max_residual.max(rep.residual_inf);
        let (mut zs, mut xbar) = (f64::NEG_INFINITY, x0);
        for (k, _) in problem.unknown.iter().enumerate().filter(|(_, &m)| m) {
            let p = spec.point_k(k);
            let z = z_level(gf, p, &y0, rep.u.values[k], z0)?;
            if z > zs {
                zs = z;
                xbar = p;
            }
        }
        let height = zs - z0 + h;
        for (t, &tau) in taus.iter().enumerate() {
            let inner = section_with_support(&rep.u, gf, xbar, &y0, zs, tau * height)?;
            let mut sup: f64 = 0.0;
            for (k, _) in inner.component.iter().enumerate().filter(|(_, &m)| m) {
                let (i, j) = spec.ij(k);
                sup = sup.max(sym_norm(&rep.u.hessian(i, j)));
            }
            let growth = prev[t].map(|p: f64| sup / p - 1.0);
            let flagged = tau <= TAU_FLAGGED_MAX && growth.is_some_and(|g| g > GROWTH_LIMIT);
            rows.push(PogorelovRow { n, spacing, height, tau, sup_hessian: sup, growth, flagged });
            prev[t] = Some(sup);
        }
    }
    Ok(PogorelovTable { rows, f0, section_radius: radius, max_residual })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShapeRow {
    pub x0: [f64; 2],
    pub h: f64,
    pub hessian_norm: f64,
    pub good_shape: f64,
    /// `sup_{S_h} |x − x₀| / √h`.
    pub radius_ratio: f64,
}

impl ShapeRow {
    pub const HEADER: &'static str = "x0_1,x0_2,h,hessian_norm,good_shape,radius_ratio";

    pub fn csv(&self) -> String {
        format!("{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}", self.x0[0], self.x0[1], self.h, self.hessian_norm, self.good_shape, self.radius_ratio)
    }
}

/// Pairs `(|D²u(x₀)|, good shape of S_h)` over base points and heights.
pub fn shape_derivative_experiment(
    u: &GridFunction,
    gf: &GenFun,
    x0s: &[[f64; 2]],
    h_list: &[f64],
) -> Result<Vec<ShapeRow>, SolverError> {
    let mut rows = Vec::with_capacity(x0s.len() * h_list.len());
    for &x0 in x0s {
        // Validates that the support exists before sweeping heights.
        support_at(u, gf, x0)?;
        let hessian_norm = sym_norm(&u.hessian_at(x0)?);
        for &h in h_list {
            let s = section(u, gf, x0, h)?;
            let hull: Vec<Vec<f64>> = convex_hull(&s.boundary).iter().map(|p| p.to_vec()).collect();
            let e = min_ellipsoid(&hull)?;
            let reach = s.boundary.iter().map(|p| (p[0] - x0[0]).hypot(p[1] - x0[1])).fold(0.0, f64::max);
            rows.push(ShapeRow { x0, h, hessian_norm, good_shape: good_shape(&e), radius_ratio: reach / h.sqrt() });
        }
    }
    Ok(rows)
}
