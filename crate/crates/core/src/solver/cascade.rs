use super::{solve, sym_norm, DirichletProblem, Rhs, SolveOptions, SolverError};
use crate::genfun::{GenFun, PhasePoint};
use crate::geometry::{section_with_support, GeometryError, GridFunction, GridSpec, Section};
use nalgebra::Matrix2;

/// Density of the base problem as a function of `x`.
pub type Density<'a> = dyn Fn([f64; 2]) -> f64 + Sync + 'a;

/// Smallest admissible stage domain, in base-grid cells across.
pub const MIN_STAGE_CELLS: usize = 8;
/// Deepest stage index accepted.
pub const MAX_STAGE: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CascadeConfig {
    pub x0: [f64; 2],
    /// Height of `U₀`; stage `k` uses `h₀/4^k`.
    pub h0: f64,
    /// Sub-section parameter of `V_k^τ`.
    pub tau0: f64,
    /// Number of stages, `k = 0..stages`.
    pub stages: usize,
    /// Nodes per side of a per-stage grid centred at `x₀` and fitted to
    /// `U_k`, with boundary data interpolated from the base grid. `None`
    /// solves every stage on the base grid.
    pub stage_nodes: Option<usize>,
    pub opts: SolveOptions,
}

impl Default for CascadeConfig {
    fn default() -> Self {
        CascadeConfig { x0: [0.0, 0.0], h0: 0.08, tau0: 0.25, stages: 6, stage_nodes: Some(129), opts: SolveOptions::default() }
    }
}

/// One approximating problem: constant density `f_k = inf_{U_k} f` on the
/// section `U_k` with the base solution as boundary data.
#[derive(Debug, Clone)]
pub struct CascadeState {
    pub k: usize,
    /// Section height `h₀/4^k`.
    pub h: f64,
    pub y0: Vec<f64>,
    pub z0: f64,
    /// Nodes of `U_k`.
    pub mask: Vec<bool>,
    pub f_k: f64,
    /// Oscillation of `f` over `U_k`.
    pub omega: f64,
    /// `u_k` on the stage grid, equal to the base solution off `U_k`.
    pub u: GridFunction,
    pub hessian_x0: Matrix2<f64>,
    /// Nodes of `V_k^{τ₀} = {u_k < g(·, y₀, z₀ − (1 − τ₀)h_k)}`, absent when
    /// `x₀` falls outside it.
    pub v_mask: Option<Vec<bool>>,
    pub residual: f64,
    pub newton_iters: usize,
}

impl CascadeState {
    pub fn hessian_norm(&self) -> f64 {
        sym_norm(&self.hessian_x0)
    }

    pub fn x0_in_v(&self) -> bool {
        self.v_mask.is_some()
    }

    /// `V_k^{τ₀} ⊂ U_k`.
    pub fn v_in_u(&self) -> bool {
        self.v_mask.as_ref().is_some_and(|v| subset(v, &self.mask))
    }
}

#[derive(Debug, Clone)]
pub struct CascadeReport {
    pub states: Vec<CascadeState>,
    /// `sup_{V₀^{τ₀}} |D²u₀|`.
    pub sup_v0: f64,
    /// `|D²u_k − D²u_{k+1}|(x₀)`.
    pub diffs: Vec<f64>,
    /// `diffs[k] / ω_k` where `ω_k > 0`.
    pub c: Vec<f64>,
    pub c_fit: f64,
    /// Every ratio within ±25% of the fitted constant.
    pub c_stable: bool,
    /// `Σ_{i<k} ω_i`.
    pub dini_partial: Vec<f64>,
    /// `sup_{V₀}|D²u₀| + 1 + C Σ_{i<k} ω_i`.
    pub bound: Vec<f64>,
    pub bounded: bool,
    /// Per stage `k < K−1`: `x₀ ∈ V_k`, `V_k ⊂ U_k` and `U_{k+1} ⊂ V_k`
    /// (the last tested on the nodes of `U_{k+1}` through `u_k`).
    pub containment: Vec<bool>,
}

impl CascadeReport {
    pub const HEADER: &'static str = "k,h,f_k,omega,hess_norm,diff,c,dini_partial,bound,contained,residual,newton_iters";

    pub fn rows(&self) -> Vec<String> {
        self.states
            .iter()
            .enumerate()
            .map(|(k, s)| {
                let opt = |v: Option<&f64>| v.map_or(String::new(), |x| format!("{x:.16e}"));
                format!(
                    "{},{:.16e},{:.16e},{:.16e},{:.16e},{},{},{:.16e},{:.16e},{},{:.16e},{}",
                    s.k,
                    s.h,
                    s.f_k,
                    s.omega,
                    s.hessian_norm(),
                    opt(self.diffs.get(k)),
                    opt(self.c.get(k).filter(|c| c.is_finite())),
                    self.dini_partial[k],
                    self.bound[k],
                    self.containment.get(k).map_or(String::new(), |b| b.to_string()),
                    s.residual,
                    s.newton_iters
                )
            })
            .collect()
    }
}

fn subset(a: &[bool], b: &[bool]) -> bool {
    a.iter().zip(b).all(|(&x, &y)| !x || y)
}

/// Support `(y₀, z₀)` of a grid function at `x₀`.
pub fn support_at(u: &GridFunction, gf: &GenFun, x0: [f64; 2]) -> Result<(Vec<f64>, f64), SolverError> {
    let (u0, du) = u.interpolate_with_gradient(x0)?;
    gf.solve_yz(&PhasePoint::new(x0.to_vec(), u0, du.to_vec()), None)
        .map_err(|e| SolverError::Geometry(GeometryError::SupportSolveFailed(e)))
}

fn span_cells(spec: &GridSpec, mask: &[bool]) -> usize {
    let (mut lo, mut hi) = ([usize::MAX; 2], [0usize; 2]);
    for (k, _) in mask.iter().enumerate().filter(|(_, &m)| m) {
        let (i, j) = spec.ij(k);
        lo = [lo[0].min(i), lo[1].min(j)];
        hi = [hi[0].max(i), hi[1].max(j)];
    }
    if lo[0] == usize::MAX {
        0
    } else {
        (hi[0] - lo[0]).min(hi[1] - lo[1])
    }
}

/// Stage `k` of the cascade for the base solution `u` of density `f`.
pub fn approximating_problem(
    u: &GridFunction,
    gf: &GenFun,
    f: &Density<'_>,
    cfg: &CascadeConfig,
    k: usize,
) -> Result<CascadeState, SolverError> {
    let (y0, z0) = support_at(u, gf, cfg.x0)?;
    stage(u, gf, f, cfg, k, &y0, z0)
}

fn stage(
    u: &GridFunction,
    gf: &GenFun,
    f: &Density<'_>,
    cfg: &CascadeConfig,
    k: usize,
    y0: &[f64],
    z0: f64,
) -> Result<CascadeState, SolverError> {
    if k > MAX_STAGE {
        return Err(SolverError::StageTooDeep { k, cells: 0 });
    }
    let h = cfg.h0 / 4f64.powi(k as i32);
    let coarse = section_with_support(u, gf, cfg.x0, y0, z0, h)?;
    let cells = span_cells(&u.spec, &coarse.component);
    if cells < MIN_STAGE_CELLS {
        return Err(SolverError::StageTooDeep { k, cells });
    }
    let (data, sec) = match cfg.stage_nodes {
        None => (u.clone(), coarse),
        Some(n) => {
            let data = stage_grid(u, cfg.x0, &coarse.boundary, n)?;
            let sec = section_with_support(&data, gf, cfg.x0, y0, z0, h)?;
            (data, sec)
        }
    };
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for (idx, _) in sec.component.iter().enumerate().filter(|(_, &m)| m) {
        let v = f(data.spec.point_k(idx));
        lo = lo.min(v);
        hi = hi.max(v);
    }
    let u = &data;
    let problem = DirichletProblem::masked(gf, u, sec.component.clone(), Rhs::Constant(lo)).with_initial(u.values.clone());
    let rep = solve(&problem, &cfg.opts)?;
    let hessian_x0 = rep.u.hessian_at(cfg.x0)?;
    let v_mask = match section_with_support(&rep.u, gf, cfg.x0, y0, z0, (1.0 - cfg.tau0) * h) {
        Ok(Section { component, .. }) => Some(component),
        Err(GeometryError::BaseOutsideSection { .. }) => None,
        Err(e) => return Err(e.into()),
    };
    Ok(CascadeState {
        k,
        h,
        y0: y0.to_vec(),
        z0,
        mask: sec.component,
        f_k: lo,
        omega: hi - lo,
        u: rep.u,
        hessian_x0,
        v_mask,
        residual: rep.residual_inf,
        newton_iters: rep.newton_iters,
    })
}

/// Runs stages `0..cfg.stages` sequentially and evaluates the boundedness
/// and increment estimates at `x₀`.
pub fn cascade(u: &GridFunction, gf: &GenFun, f: &Density<'_>, cfg: &CascadeConfig) -> Result<CascadeReport, SolverError> {
    let (y0, z0) = support_at(u, gf, cfg.x0)?;
    let mut states = Vec::with_capacity(cfg.stages);
    for k in 0..cfg.stages {
        states.push(stage(u, gf, f, cfg, k, &y0, z0)?);
    }
    let n = states.len();
    let s0 = &states[0];
    let spec = s0.u.spec;
    let mut sup_v0: f64 = 0.0;
    if let Some(v) = &s0.v_mask {
        for (idx, _) in v.iter().enumerate().filter(|(_, &m)| m) {
            let (i, j) = spec.ij(idx);
            sup_v0 = sup_v0.max(sym_norm(&s0.u.hessian(i, j)));
        }
    }
    let diffs: Vec<f64> = (0..n.saturating_sub(1)).map(|k| sym_norm(&(states[k].hessian_x0 - states[k + 1].hessian_x0))).collect();
    let c: Vec<f64> =
        diffs.iter().enumerate().map(|(k, d)| if states[k].omega > 1e-14 { d / states[k].omega } else { f64::NAN }).collect();
    let finite: Vec<f64> = c.iter().copied().filter(|v| v.is_finite()).collect();
    let c_fit = if finite.is_empty() { 0.0 } else { finite.iter().sum::<f64>() / finite.len() as f64 };
    let c_stable = finite.iter().all(|v| (v - c_fit).abs() <= 0.25 * c_fit);
    let mut dini_partial = Vec::with_capacity(n);
    let mut acc = 0.0;
    for s in &states {
        dini_partial.push(acc);
        acc += s.omega;
    }
    let bound: Vec<f64> = dini_partial.iter().map(|d| sup_v0 + 1.0 + c_fit * d).collect();
    let bounded = states.iter().zip(&bound).all(|(s, b)| s.hessian_norm() <= b + 1e-9);
    let containment = (0..n.saturating_sub(1))
        .map(|k| {
            let s = &states[k];
            s.v_in_u() && next_inside(s, &states[k + 1], gf, cfg.tau0)
        })
        .collect();
    Ok(CascadeReport { states, sup_v0, diffs, c, c_fit, c_stable, dini_partial, bound, bounded, containment })
}

/// Odd-sized grid centred at `x₀` covering `U_k` with a margin, filled by
/// interpolating the base solution.
fn stage_grid(u: &GridFunction, x0: [f64; 2], boundary: &[[f64; 2]], n: usize) -> Result<GridFunction, SolverError> {
    let n = n | 1;
    let reach = boundary.iter().map(|p| (p[0] - x0[0]).abs().max((p[1] - x0[1]).abs())).fold(0.0, f64::max);
    let lo = u.spec.origin;
    let hi = u.spec.max_corner();
    let room = (x0[0] - lo[0]).min(x0[1] - lo[1]).min(hi[0] - x0[0]).min(hi[1] - x0[1]) - 2.0 * u.spec.spacing;
    let half = (1.15 * reach + 2.0 * u.spec.spacing).min(room);
    let spacing = 2.0 * half / (n - 1) as f64;
    let spec = GridSpec::new([x0[0] - half, x0[1] - half], spacing, n, n);
    let values = (0..spec.len()).map(|k| u.interpolate(spec.point_k(k))).collect::<Result<Vec<_>, _>>()?;
    Ok(GridFunction::new(spec, values)?)
}

/// Every node of `U_{k+1}` satisfies `u_k < g(·, y₀, z₀ − (1 − τ₀)h_k)`.
fn next_inside(s: &CascadeState, next: &CascadeState, gf: &GenFun, tau0: f64) -> bool {
    let z = s.z0 - (1.0 - tau0) * s.h;
    next.mask.iter().enumerate().filter(|(_, &m)| m).all(|(idx, _)| {
        let p = next.u.spec.point_k(idx);
        match (s.u.interpolate(p), gf.g(&p, &s.y0, z)) {
            (Ok(a), Ok(b)) => a < b,
            _ => false,
        }
    })
}

/// A stage blown up to unit scale: `ū(x̄) = 4^k u_k(x̄/2^k)`.
#[derive(Debug, Clone)]
pub struct RescaledState {
    pub k: usize,
    pub u: GridFunction,
    pub mask: Vec<bool>,
    /// `max |D²ū − D²u_k|` over interior nodes of the stage mask.
    pub hessian_defect: f64,
}

impl RescaledState {
    fn scale(&self) -> f64 {
        2f64.powi(self.k as i32)
    }

    /// `Ā(x̄, ū, p̄) = A(2^{-k}x̄, 4^{-k}ū, 2^{-k}p̄)`.
    pub fn a_bar(&self, gf: &GenFun, x: [f64; 2], u: f64, p: [f64; 2]) -> Result<Matrix2<f64>, SolverError> {
        let s = self.scale();
        let q = PhasePoint::new(vec![x[0] / s, x[1] / s], u / (s * s), vec![p[0] / s, p[1] / s]);
        let fo = gf.first_order(&q, None).map_err(|source| SolverError::Coefficients { at: x, source })?;
        Ok(Matrix2::new(fo.a[(0, 0)], fo.a[(0, 1)], fo.a[(1, 0)], fo.a[(1, 1)]))
    }
}

/// Rescales a stage. Scaling by powers of two is exact in floating point,
/// so the Hessian defect is zero up to the stencil's own rounding.
pub fn rescale(state: &CascadeState) -> RescaledState {
    let s = 2f64.powi(state.k as i32);
    let spec = state.u.spec;
    let bar_spec = GridSpec::new([spec.origin[0] * s, spec.origin[1] * s], spec.spacing * s, spec.nx, spec.ny);
    let values: Vec<f64> = state.u.values.iter().map(|v| v * s * s).collect();
    let u = GridFunction { spec: bar_spec, values };
    let mut defect: f64 = 0.0;
    for (idx, _) in state.mask.iter().enumerate().filter(|(_, &m)| m) {
        let (i, j) = spec.ij(idx);
        if spec.on_edge(i, j) {
            continue;
        }
        defect = defect.max((u.hessian(i, j) - state.u.hessian(i, j)).abs().max());
    }
    RescaledState { k: state.k, u, mask: state.mask.clone(), hessian_defect: defect }
}
