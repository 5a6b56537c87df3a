//! Generating functions and the Monge–Ampère-type coefficients they induce.

mod builtins;
mod coefficients;
mod conditions;
mod file;
mod jet;
mod tensor;
mod tilde;

pub use builtins::{builtin, log_reflector, monge_ampere, quadratic_cost, BUILTIN_NAMES};
pub use coefficients::{dpa_from_jet, FirstOrder, MateCoefficients, DPPA_STEP};
pub use conditions::{
    check_a1star, check_a3, check_a3_pairs, sample_phase_points, verify_orthogonal_vanishing, A1StarReport, A3Report,
    A3Verdict, Chart, VanishingReport, A3_TOL,
};
pub use file::{GenFunFile, GenFunFileError};
pub use jet::Jet;
pub use tensor::{Tensor3, Tensor4};
pub use tilde::{chart_geometry, pull_back, ChartGeometry};

use crate::gfdsl::{self, DomainBox, EvalError, Expr, Program, Var};
use nalgebra::{DMatrix, DVector};
use std::collections::BTreeMap;
use std::sync::Mutex;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GenFunError {
    #[error(transparent)]
    Parse(#[from] gfdsl::ParseError),
    #[error(transparent)]
    Domain(#[from] gfdsl::DomainError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("expression uses index {index} but the declared dimension is {n}")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("condition A2 fails: {what} at x={x:?}, y={y:?}, z={z}")]
    A2Violation { what: String, x: Vec<f64>, y: Vec<f64>, z: f64 },
    #[error("(y, z) solve did not converge in {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("(y, z) iterate left the domain: y={y:?}, z={z}")]
    LeftDomain { y: Vec<f64>, z: f64 },
    #[error("E is singular: |det E| = {det:e}")]
    SingularE { det: f64 },
    #[error("point has dimension {got}, expected {want}")]
    DimensionMismatch { got: usize, want: usize },
}

/// A phase point `(x, u, p)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhasePoint {
    pub x: Vec<f64>,
    pub u: f64,
    pub p: Vec<f64>,
}

impl PhasePoint {
    pub fn new(x: Vec<f64>, u: f64, p: Vec<f64>) -> PhasePoint {
        PhasePoint { x, u, p }
    }
}

/// Which coefficient pieces are structurally independent of `(y, z)`,
/// detected on the symbolic derivative trees.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Structure {
    /// `g_xx` does not depend on `y` or `z`, so `A(x,u,p) = g_xx(x)`.
    pub a_free_of_yz: bool,
    /// `E` does not depend on `y` or `z`, so `det E` is a function of `x` only.
    pub e_free_of_yz: bool,
}

/// Residual tolerance of the A1 Newton solve.
pub const YZ_TOL: f64 = 1e-10;
const YZ_MAX_ITER: usize = 50;

/// A generating function on its declared box, with cached derivative trees
/// and compiled evaluators.
pub struct GenFun {
    name: String,
    g: Expr,
    domain: DomainBox,
    n: usize,
    cache: Mutex<BTreeMap<Vec<Var>, Expr>>,
    g_prog: Program,
    newton_prog: Program,
    jet_prog: Program,
    gxx_prog: Program,
    structure: Structure,
    gz_const: Option<f64>,
}

impl std::fmt::Debug for GenFun {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GenFun").field("name", &self.name).field("g", &self.g.to_string()).finish()
    }
}

thread_local! {
    static SCRATCH: std::cell::RefCell<Vec<f64>> = const { std::cell::RefCell::new(Vec::new()) };
}

impl GenFun {
    /// Build from a parsed expression, validating A2 on a lattice of `Γ`.
    pub fn new(name: &str, g: Expr, domain: DomainBox) -> Result<GenFun, GenFunError> {
        let n = domain.n();
        let (ex, ey) = g.index_extent();
        if ex > n || ey > n {
            return Err(GenFunError::IndexOutOfRange { index: ex.max(ey) - 1, n });
        }
        let cache = Mutex::new(BTreeMap::new());
        let get = |idx: &[Var]| derivative_cached(&cache, &g, idx);
        let newton: Vec<Expr> = jet::newton_indices(n).iter().map(|i| get(i)).collect();
        let full: Vec<Expr> = jet::jet_indices(n).iter().map(|i| get(i)).collect();
        let gxx: Vec<Expr> =
            (0..n).flat_map(|i| (0..n).map(move |j| vec![Var::X(i), Var::X(j)])).map(|i| get(&i)).collect();
        let free = |e: &Expr| !e.depends_on_any_y() && !e.depends_on(Var::Z);
        let a_free_of_yz = gxx.iter().all(free);
        let e_parts: Vec<Expr> = newton[1 + n..].to_vec(); // g_y, g_z, g_xy, g_xz
        let e_free_of_yz = e_parts.iter().all(free);
        let gz_const = get(&[Var::Z]).as_const();
        let gf = GenFun {
            name: name.to_string(),
            g_prog: Program::new(std::slice::from_ref(&g), n),
            newton_prog: Program::new(&newton, n),
            jet_prog: Program::new(&full, n),
            gxx_prog: Program::new(&gxx, n),
            g,
            domain,
            n,
            cache,
            structure: Structure { a_free_of_yz, e_free_of_yz },
            gz_const,
        };
        gf.check_a2()?;
        Ok(gf)
    }

    /// Parse `src` and build.
    pub fn from_source(name: &str, src: &str, domain: DomainBox) -> Result<GenFun, GenFunError> {
        let g = gfdsl::parse(src, domain.n())?;
        GenFun::new(name, g, domain)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn expr(&self) -> &Expr {
        &self.g
    }

    pub fn domain(&self) -> &DomainBox {
        &self.domain
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn structure(&self) -> Structure {
        self.structure
    }

    /// `Some(c)` when `g_z ≡ c` symbolically (g affine in z).
    pub fn gz_constant(&self) -> Option<f64> {
        self.gz_const
    }

    /// Exact symbolic partial derivative (cached).
    pub fn derivative(&self, idx: &[Var]) -> Result<Expr, gfdsl::DerivError> {
        if idx.len() > gfdsl::MAX_ORDER {
            return Err(gfdsl::DerivError::OrderTooHigh(idx.len()));
        }
        Ok(derivative_cached(&self.cache, &self.g, idx))
    }

    fn flat(&self, x: &[f64], y: &[f64], z: f64) -> Vec<f64> {
        let mut v = Vec::with_capacity(2 * self.n + 1);
        v.extend_from_slice(x);
        v.extend_from_slice(y);
        v.push(z);
        v
    }

    fn run(&self, prog: &Program, x: &[f64], y: &[f64], z: f64, out: &mut [f64]) -> Result<(), EvalError> {
        let vars = self.flat(x, y, z);
        SCRATCH.with(|s| prog.eval_into(&vars, &mut s.borrow_mut(), out))
    }

    /// `g(x, y, z)`.
    pub fn g(&self, x: &[f64], y: &[f64], z: f64) -> Result<f64, EvalError> {
        let mut out = [0.0];
        self.run(&self.g_prog, x, y, z, &mut out)?;
        Ok(out[0])
    }

    /// `g` on the flat layout `[x.., y.., z]`; used in tight envelope loops.
    pub fn g_flat(&self, vars: &[f64], scratch: &mut Vec<f64>) -> Result<f64, EvalError> {
        let mut out = [0.0];
        self.g_prog.eval_into(vars, scratch, &mut out)?;
        Ok(out[0])
    }

    /// First-order block (g, g_x, g_y, g_z, g_xy, g_xz).
    pub fn newton_jet(&self, x: &[f64], y: &[f64], z: f64) -> Result<Jet, EvalError> {
        let mut out = vec![0.0; self.newton_prog.n_outputs()];
        self.run(&self.newton_prog, x, y, z, &mut out)?;
        Ok(Jet::from_flat(self.n, &out))
    }

    /// Full jet including g_xx, g_xxy, g_xxz.
    pub fn jet(&self, x: &[f64], y: &[f64], z: f64) -> Result<Jet, EvalError> {
        let mut out = vec![0.0; self.jet_prog.n_outputs()];
        self.run(&self.jet_prog, x, y, z, &mut out)?;
        Ok(Jet::from_flat(self.n, &out))
    }

    /// `g_xx(x, y, z)` as a matrix.
    pub fn gxx(&self, x: &[f64], y: &[f64], z: f64) -> Result<DMatrix<f64>, EvalError> {
        let n = self.n;
        let mut out = vec![0.0; n * n];
        self.run(&self.gxx_prog, x, y, z, &mut out)?;
        Ok(DMatrix::from_row_slice(n, n, &out))
    }

    fn check_a2(&self) -> Result<(), GenFunError> {
        let n = self.n;
        let d = &self.domain;
        let m = ((4000f64).powf(1.0 / (2 * n) as f64).floor() as usize).max(2);
        let lattice = |iv: &gfdsl::Interval, k: usize| iv.lo + (iv.hi - iv.lo) * k as f64 / (m - 1) as f64;
        let zs = [d.z_interval.lo, d.z_interval.center(), d.z_interval.hi];
        let total = m.pow(2 * n as u32);
        let mut x = vec![0.0; n];
        let mut y = vec![0.0; n];
        for code in 0..total {
            let mut c = code;
            for i in 0..n {
                x[i] = lattice(&d.u_box[i], c % m);
                c /= m;
            }
            for j in 0..n {
                y[j] = lattice(&d.v_box[j], c % m);
                c /= m;
            }
            if !d.off_diagonal(&x, &y) {
                continue;
            }
            for &z in &zs {
                let jet = self.newton_jet(&x, &y, z)?;
                if !(jet.gz < 0.0) {
                    return Err(GenFunError::A2Violation {
                        what: format!("g_z = {} is not negative", jet.gz),
                        x: x.clone(),
                        y: y.clone(),
                        z,
                    });
                }
                let det = jet.e_matrix().determinant();
                if !(det.abs() > 1e-10) {
                    return Err(GenFunError::A2Violation {
                        what: format!("det E = {det:e} vanishes"),
                        x: x.clone(),
                        y: y.clone(),
                        z,
                    });
                }
            }
        }
        Ok(())
    }

    fn residual(jet: &Jet, q: &PhasePoint) -> f64 {
        let rp = jet.gx.iter().zip(&q.p).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        (jet.g - q.u).abs() + rp
    }

    /// Solve `g(x,y,z) = u`, `g_x(x,y,z) = p` for `(y, z)` by damped Newton,
    /// keeping iterates inside `V̄ × Ī`.
    pub fn solve_yz(&self, q: &PhasePoint, seed: Option<(&[f64], f64)>) -> Result<(Vec<f64>, f64), GenFunError> {
        let n = self.n;
        if q.x.len() != n || q.p.len() != n {
            return Err(GenFunError::DimensionMismatch { got: q.x.len().min(q.p.len()), want: n });
        }
        let d = &self.domain;
        let (mut y, mut z) = match seed {
            Some((y0, z0)) => (y0.to_vec(), z0),
            None => (d.v_center(), d.z_interval.center()),
        };
        let slack = 1e-12 * (1.0 + d.z_interval.width());
        let inside = |y: &[f64], z: f64| d.in_v(y, slack) && d.z_interval.contains(z, slack) && d.off_diagonal(&q.x, y);
        if !inside(&y, z) {
            return Err(GenFunError::LeftDomain { y, z });
        }
        let mut jet = self.newton_jet(&q.x, &y, z)?;
        let mut res = GenFun::residual(&jet, q);
        let mut polished = false;
        for _ in 0..YZ_MAX_ITER {
            if res <= YZ_TOL {
                if polished {
                    return Ok((y, z));
                }
                polished = true;
            }
            let mut jm = DMatrix::zeros(n + 1, n + 1);
            let mut rhs = DVector::zeros(n + 1);
            for j in 0..n {
                jm[(0, j)] = jet.gy[j];
            }
            jm[(0, n)] = jet.gz;
            rhs[0] = q.u - jet.g;
            for i in 0..n {
                for j in 0..n {
                    jm[(i + 1, j)] = jet.gxy_at(i, j);
                }
                jm[(i + 1, n)] = jet.gxz[i];
                rhs[i + 1] = q.p[i] - jet.gx[i];
            }
            let step = match jm.lu().solve(&rhs) {
                Some(s) => s,
                None => return Err(GenFunError::NoConvergence { iterations: 0, residual: res }),
            };
            let mut t = 1.0;
            let mut accepted = false;
            let mut left = false;
            for _ in 0..40 {
                let yc: Vec<f64> = (0..n).map(|j| y[j] + t * step[j]).collect();
                let zc = z + t * step[n];
                if inside(&yc, zc) {
                    if let Ok(jc) = self.newton_jet(&q.x, &yc, zc) {
                        let rc = GenFun::residual(&jc, q);
                        if rc < res || (polished && rc <= res) {
                            y = yc;
                            z = zc;
                            jet = jc;
                            res = rc;
                            accepted = true;
                            break;
                        }
                    }
                } else {
                    left = true;
                }
                t *= 0.5;
            }
            if !accepted {
                if res <= YZ_TOL {
                    return Ok((y, z));
                }
                if left {
                    let yc: Vec<f64> = (0..n).map(|j| y[j] + step[j]).collect();
                    return Err(GenFunError::LeftDomain { y: yc, z: z + step[n] });
                }
                return Err(GenFunError::NoConvergence { iterations: YZ_MAX_ITER, residual: res });
            }
        }
        if res <= YZ_TOL {
            return Ok((y, z));
        }
        Err(GenFunError::NoConvergence { iterations: YZ_MAX_ITER, residual: res })
    }
}

fn derivative_cached(cache: &Mutex<BTreeMap<Vec<Var>, Expr>>, g: &Expr, idx: &[Var]) -> Expr {
    let mut key = idx.to_vec();
    key.sort();
    if key.is_empty() {
        return g.clone();
    }
    if let Some(e) = cache.lock().expect("derivative cache poisoned").get(&key) {
        return e.clone();
    }
    let parent = derivative_cached(cache, g, &key[..key.len() - 1]);
    let e = gfdsl::d(&parent, *key.last().unwrap());
    cache.lock().expect("derivative cache poisoned").insert(key, e.clone());
    e
}
