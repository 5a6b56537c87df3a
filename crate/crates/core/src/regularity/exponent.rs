use super::RegularityError;
use crate::genfun::{GenFun, PhasePoint};
use crate::geometry::{GeometryError, GridFunction, GridSpec};

/// Coefficient of determination above which `α̂` is trusted.
pub const R2_TRUSTED: f64 = 0.99;

const CIRCLE_SAMPLES: usize = 128;

/// Power-law fit of the support defect `u − g(·, y₀, z₀)` around `x₀`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExponentFit {
    pub x0: [f64; 2],
    /// Strictly decreasing.
    pub radii: Vec<f64>,
    /// `sup_{B_r} |u − support|`.
    pub sup_values: Vec<f64>,
    /// `inf_{|x−x₀|=r} (u − support)`.
    pub inf_values: Vec<f64>,
    /// Slope of `log sup` against `log r`.
    pub slope: f64,
    /// `α̂ = slope − 1`.
    pub alpha: f64,
    pub r_squared: f64,
    /// Lower exponent `γ̂` from the inf on spheres; `None` when the defect
    /// vanishes on some sphere.
    pub gamma: Option<f64>,
}

impl ExponentFit {
    pub const HEADER: &'static str = "r,sup,inf";

    pub fn trusted(&self) -> bool {
        self.r_squared >= R2_TRUSTED
    }

    pub fn csv_rows(&self) -> Vec<String> {
        (0..self.radii.len())
            .map(|i| format!("{:.16e},{:.16e},{:.16e}", self.radii[i], self.sup_values[i], self.inf_values[i]))
            .collect()
    }
}

/// Least-squares line through `(log x, log y)`: `(slope, R²)`.
pub fn log_log_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in lx.iter().zip(&ly) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    let slope = sxy / sxx;
    let r2 = if syy > 0.0 { (sxy * sxy) / (sxx * syy) } else { 1.0 };
    (slope, r2)
}

/// Eight radii log-spaced over 1.5 decades below `r_max`, decreasing, with
/// the smallest at least four grid cells.
pub fn default_radii(spec: &GridSpec, r_max: f64) -> Vec<f64> {
    let r_min = (r_max / 10f64.powf(1.5)).max(4.0 * spec.spacing);
    let count = 8;
    (0..count).map(|i| r_max * (r_min / r_max).powf(i as f64 / (count - 1) as f64)).collect()
}

/// Value and gradient of `u` at `x₀`: central differences when `x₀` is an
/// interior node (symmetric, so radial kinks give a zero gradient), cubic
/// interpolation otherwise.
fn first_jet(u: &GridFunction, x0: [f64; 2]) -> Result<(f64, [f64; 2]), GeometryError> {
    let s = &u.spec;
    let (i, j) = s.nearest(x0);
    let p = s.point(i, j);
    let close = (p[0] - x0[0]).abs().max((p[1] - x0[1]).abs()) <= 1e-9 * s.spacing;
    if close && !s.on_edge(i, j) {
        Ok((u.at(i, j), u.gradient(i, j)))
    } else {
        u.interpolate_with_gradient(x0)
    }
}

/// Fits `sup_{B_r}(u − g(·, y₀, z₀)) ~ r^{1+α}` and the lower exponent from
/// the inf over spheres, where `g(·, y₀, z₀)` is the support of `u` at `x₀`.
pub fn fit_exponent(u: &GridFunction, gf: &GenFun, x0: [f64; 2], radii: &[f64]) -> Result<ExponentFit, RegularityError> {
    if radii.len() < 4 {
        return Err(RegularityError::TooFewRadii { got: radii.len() });
    }
    if radii.iter().any(|r| !(*r > 0.0)) || radii.windows(2).any(|w| w[1] >= w[0]) {
        return Err(RegularityError::RadiiOrder);
    }
    let spec = u.spec;
    let r_max = radii[0];
    let lo = spec.origin;
    let hi = spec.max_corner();
    if x0[0] - r_max < lo[0] || x0[1] - r_max < lo[1] || x0[0] + r_max > hi[0] || x0[1] + r_max > hi[1] {
        return Err(RegularityError::RadiusOutsideGrid { r: r_max, x0 });
    }
    let (u0, du) = first_jet(u, x0)?;
    let (y0, z0) = gf
        .solve_yz(&PhasePoint::new(x0.to_vec(), u0, du.to_vec()), None)
        .map_err(GeometryError::SupportSolveFailed)?;
    let defect = |p: [f64; 2], v: f64| -> Result<f64, RegularityError> {
        Ok(v - gf.g(&p, &y0, z0).map_err(GeometryError::from)?)
    };

    // Nodes within the largest ball, with distance and defect.
    let w = (r_max / spec.spacing).ceil() as isize + 1;
    let (ci, cj) = spec.nearest(x0);
    let mut nodes = Vec::new();
    for dj in -w..=w {
        for di in -w..=w {
            let (i, j) = (ci as isize + di, cj as isize + dj);
            if i < 0 || j < 0 || i >= spec.nx as isize || j >= spec.ny as isize {
                continue;
            }
            let p = spec.point(i as usize, j as usize);
            let d = (p[0] - x0[0]).hypot(p[1] - x0[1]);
            if d <= r_max {
                nodes.push((d, defect(p, u.at(i as usize, j as usize))?.abs()));
            }
        }
    }

    let mut sup_values = Vec::with_capacity(radii.len());
    let mut inf_values = Vec::with_capacity(radii.len());
    for &r in radii {
        let mut sup = nodes.iter().filter(|(d, _)| *d <= r).map(|(_, v)| *v).fold(0.0, f64::max);
        let mut inf = f64::INFINITY;
        for s in 0..CIRCLE_SAMPLES {
            let th = std::f64::consts::TAU * s as f64 / CIRCLE_SAMPLES as f64;
            let p = [x0[0] + r * th.cos(), x0[1] + r * th.sin()];
            let v = defect(p, u.interpolate(p)?)?;
            sup = sup.max(v.abs());
            inf = inf.min(v);
        }
        if !(sup > 0.0) {
            return Err(RegularityError::DegenerateDefect { r });
        }
        sup_values.push(sup);
        inf_values.push(inf);
    }
    let (slope, r_squared) = log_log_fit(radii, &sup_values);
    let gamma = if inf_values.iter().all(|v| *v > 0.0) { Some(log_log_fit(radii, &inf_values).0 - 1.0) } else { None };
    Ok(ExponentFit { x0, radii: radii.to_vec(), sup_values, inf_values, slope, alpha: slope - 1.0, r_squared, gamma })
}
