use crate::genfun::GenFun;
use crate::geometry::{GridFunction, GridSpec};

/// Density `f` on the right-hand side `B = |det E| f`.
#[derive(Debug, Clone, PartialEq)]
pub enum Rhs {
    Constant(f64),
    /// One value per grid node.
    Grid(Vec<f64>),
}

impl Rhs {
    pub fn at(&self, k: usize) -> f64 {
        match self {
            Rhs::Constant(c) => *c,
            Rhs::Grid(v) => v[k],
        }
    }

    pub fn from_fn(spec: &GridSpec, f: impl Fn([f64; 2]) -> f64) -> Rhs {
        Rhs::Grid((0..spec.len()).map(|k| f(spec.point_k(k))).collect())
    }
}

/// Dirichlet problem on the nodes flagged `unknown`; every other node keeps
/// its value from `boundary`.
#[derive(Debug, Clone)]
pub struct DirichletProblem<'a> {
    pub gf: &'a GenFun,
    pub spec: GridSpec,
    pub unknown: Vec<bool>,
    pub boundary: Vec<f64>,
    pub rhs: Rhs,
    /// Full-grid initial guess; a Poisson guess is used when absent.
    pub initial: Option<Vec<f64>>,
}

impl<'a> DirichletProblem<'a> {
    /// All interior nodes of the rectangle are unknown; `boundary` is
    /// sampled on the edge.
    pub fn rectangle(gf: &'a GenFun, spec: GridSpec, boundary: impl Fn([f64; 2]) -> f64, rhs: Rhs) -> DirichletProblem<'a> {
        let unknown = (0..spec.len())
            .map(|k| {
                let (i, j) = spec.ij(k);
                !spec.on_edge(i, j)
            })
            .collect();
        let boundary = (0..spec.len()).map(|k| boundary(spec.point_k(k))).collect();
        DirichletProblem { gf, spec, unknown, boundary, rhs, initial: None }
    }

    /// Unknowns on an arbitrary mask; `outside` supplies the fixed values.
    pub fn masked(gf: &'a GenFun, outside: &GridFunction, unknown: Vec<bool>, rhs: Rhs) -> DirichletProblem<'a> {
        DirichletProblem { gf, spec: outside.spec, unknown, boundary: outside.values.clone(), rhs, initial: None }
    }

    pub fn with_initial(mut self, u0: Vec<f64>) -> Self {
        self.initial = Some(u0);
        self
    }

    pub fn unknown_count(&self) -> usize {
        self.unknown.iter().filter(|&&b| b).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    /// Absolute residual tolerance, scaled by `max(1, max B)`.
    pub tol: f64,
    pub max_newton: usize,
    /// Allow pseudo-time continuation in `f` when Newton stalls.
    pub continuation: bool,
    pub max_continuation_steps: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { tol: 1e-8, max_newton: 40, continuation: true, max_continuation_steps: 64 }
    }
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub u: GridFunction,
    pub residual_inf: f64,
    pub newton_iters: usize,
    /// Smallest eigenvalue of `w = D²u − A` over the unknowns.
    pub min_eigen: f64,
    pub converged: bool,
    pub continuation_steps: usize,
}
