use super::{DirichletProblem, SolverError};
use crate::genfun::{GenFun, PhasePoint};
use crate::geometry::GridSpec;
use faer::sparse::linalg::solvers::{Lu, SymbolicLu};
use faer::sparse::{Argsort, Pair, SparseColMat, SymbolicSparseColMat};
use faer::Mat;
use nalgebra::Matrix2;
use rayon::prelude::*;

/// Eigenvalue floor of the clamped determinant.
pub const DET_FLOOR: f64 = 1e-10;

/// Stencil order: centre, E, W, N, S, NE, NW, SE, SW.
pub(crate) const STENCIL: [(isize, isize); 9] = [(0, 0), (1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (-1, 1), (1, -1), (-1, -1)];

const NONE: usize = usize::MAX;

/// `det⁺ w = max(λ₁, δ) max(λ₂, δ)` and the matching effective cofactor
/// `C = λ₂⁺ v₁v₁ᵀ + λ₁⁺ v₂v₂ᵀ` (the true cofactor when nothing is
/// clamped). Also returns the smaller eigenvalue.
pub fn clamped_det(w: &Matrix2<f64>) -> (f64, Matrix2<f64>, f64) {
    let (a, b, c) = (w[(0, 0)], 0.5 * (w[(0, 1)] + w[(1, 0)]), w[(1, 1)]);
    let mean = 0.5 * (a + c);
    let r = (0.25 * (a - c) * (a - c) + b * b).sqrt();
    let (l1, l2) = (mean + r, mean - r);
    let (p1, p2) = (l1.max(DET_FLOOR), l2.max(DET_FLOOR));
    let v1 = if r == 0.0 {
        [1.0, 0.0]
    } else {
        let (x, y) = if a >= c { (l1 - c, b) } else { (b, l1 - a) };
        let n = x.hypot(y);
        [x / n, y / n]
    };
    let v2 = [-v1[1], v1[0]];
    let outer = |v: [f64; 2]| Matrix2::new(v[0] * v[0], v[0] * v[1], v[0] * v[1], v[1] * v[1]);
    (p1 * p2, outer(v1) * p2 + outer(v2) * p1, l2)
}

/// Coefficients at one node.
#[derive(Debug, Clone)]
pub(crate) struct NodeCoef {
    pub a: Matrix2<f64>,
    /// `|det E|`.
    pub bfac: f64,
    /// `∂A_ij/∂p_k` stored `[k]`.
    pub dpa: [Matrix2<f64>; 2],
    pub dua: Matrix2<f64>,
    pub dbfac_dp: [f64; 2],
    pub dbfac_du: f64,
    pub seed: Option<(Vec<f64>, f64)>,
}

/// Result of evaluating the discrete operator.
pub(crate) struct Evaluation {
    pub res: Vec<f64>,
    /// Jacobian entries per unknown in stencil order.
    pub entries: Vec<[f64; 9]>,
    pub min_eig: f64,
    pub min_eig_at: usize,
    pub seeds: Vec<Option<(Vec<f64>, f64)>>,
    /// `|det E|` per unknown.
    pub bfac: Vec<f64>,
    /// `tr A` per unknown.
    pub tr_a: Vec<f64>,
}

impl Evaluation {
    pub fn res_inf(&self) -> f64 {
        self.res.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn res_l2(&self) -> f64 {
        self.res.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Grid topology, cached coefficients and the reusable sparse pattern.
pub(crate) struct Discretization<'a> {
    pub gf: &'a GenFun,
    pub spec: GridSpec,
    /// Grid index of each unknown.
    pub nodes: Vec<usize>,
    /// Unknown index of each grid node (`NONE` if fixed).
    pub slot: Vec<usize>,
    /// `(A(x), |det E(x)|)` when both are independent of `(y, z)`.
    fast: Option<Vec<(Matrix2<f64>, f64)>>,
    symbolic: SymbolicSparseColMat<usize>,
    argsort: Argsort<usize>,
    symbolic_lu: SymbolicLu<usize>,
    fd_b: bool,
}

fn coef_err(at: [f64; 2]) -> impl Fn(crate::genfun::GenFunError) -> SolverError {
    move |source| SolverError::Coefficients { at, source }
}

impl<'a> Discretization<'a> {
    pub fn new(p: &DirichletProblem<'a>) -> Result<Discretization<'a>, SolverError> {
        let spec = p.spec;
        if p.unknown.len() != spec.len() || p.boundary.len() != spec.len() {
            return Err(SolverError::InvalidProblem("mask or boundary length differs from the grid".into()));
        }
        if p.gf.n() != 2 {
            return Err(SolverError::InvalidProblem(format!("solver is 2D, generating function has n = {}", p.gf.n())));
        }
        let mut slot = vec![NONE; spec.len()];
        let mut nodes = Vec::new();
        for k in 0..spec.len() {
            if p.unknown[k] {
                let (i, j) = spec.ij(k);
                if spec.on_edge(i, j) {
                    return Err(SolverError::InvalidProblem(format!("unknown node {:?} lies on the grid edge", spec.point(i, j))));
                }
                slot[k] = nodes.len();
                nodes.push(k);
            }
        }
        if nodes.is_empty() {
            return Err(SolverError::InvalidProblem("no unknowns".into()));
        }
        let mut pairs = Vec::with_capacity(9 * nodes.len());
        for (r, &k) in nodes.iter().enumerate() {
            for off in STENCIL {
                let c = slot[neighbour(&spec, k, off)];
                if c != NONE {
                    pairs.push(Pair::new(r, c));
                }
            }
        }
        let n = nodes.len();
        let (symbolic, argsort) =
            SymbolicSparseColMat::try_new_from_indices(n, n, &pairs).map_err(|e| SolverError::Linear(format!("{e:?}")))?;
        let symbolic_lu = SymbolicLu::try_new(symbolic.as_ref()).map_err(|e| SolverError::Linear(format!("{e:?}")))?;
        let st = p.gf.structure();
        let fast = if st.a_free_of_yz && st.e_free_of_yz {
            let d = p.gf.domain();
            let (yc, zc) = (d.v_center(), d.z_interval.center());
            let v: Result<Vec<_>, SolverError> = nodes
                .iter()
                .map(|&k| {
                    let x = spec.point_k(k);
                    let jet = p.gf.jet(&x, &yc, zc).map_err(|e| coef_err(x)(e.into()))?;
                    let a = Matrix2::new(jet.gxx_at(0, 0), jet.gxx_at(0, 1), jet.gxx_at(1, 0), jet.gxx_at(1, 1));
                    Ok((a, jet.e_matrix().determinant().abs()))
                })
                .collect();
            Some(v?)
        } else {
            None
        };
        Ok(Discretization { gf: p.gf, spec, nodes, slot, fast, symbolic, argsort, symbolic_lu, fd_b: !st.e_free_of_yz })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    fn coefficients(&self, r: usize, u: f64, p: [f64; 2], seed: Option<&(Vec<f64>, f64)>) -> Result<NodeCoef, SolverError> {
        let zero = Matrix2::zeros();
        if let Some(fast) = &self.fast {
            let (a, bfac) = fast[r];
            return Ok(NodeCoef { a, bfac, dpa: [zero; 2], dua: zero, dbfac_dp: [0.0; 2], dbfac_du: 0.0, seed: None });
        }
        let x = self.spec.point_k(self.nodes[r]);
        let err = coef_err(x);
        let seed_ref = seed.map(|(y, z)| (y.as_slice(), *z));
        let q = PhasePoint::new(x.to_vec(), u, p.to_vec());
        let fo = self.gf.first_order(&q, seed_ref).map_err(&err)?;
        let m = |t: &nalgebra::DMatrix<f64>| Matrix2::new(t[(0, 0)], t[(0, 1)], t[(1, 0)], t[(1, 1)]);
        let dpa = [0, 1].map(|k| Matrix2::from_fn(|i, j| fo.dpa.get(i, j, k)));
        let bfac = fo.b_factor.abs();
        let (mut dbfac_dp, mut dbfac_du) = ([0.0; 2], 0.0);
        if self.fd_b {
            let s = Some((fo.y.as_slice(), fo.z));
            for k in 0..2 {
                let eps = 1e-6 * (1.0 + p[k].abs());
                let mut qq = q.clone();
                qq.p[k] += eps;
                dbfac_dp[k] = (self.gf.first_order(&qq, s).map_err(&err)?.b_factor.abs() - bfac) / eps;
            }
            let eps = 1e-6 * (1.0 + u.abs());
            let mut qq = q.clone();
            qq.u += eps;
            dbfac_du = (self.gf.first_order(&qq, s).map_err(&err)?.b_factor.abs() - bfac) / eps;
        }
        Ok(NodeCoef { a: m(&fo.a), bfac, dpa, dua: m(&fo.dua), dbfac_dp, dbfac_du, seed: Some((fo.y, fo.z)) })
    }

    /// Residual `det⁺(D²u − A) − |det E| f` and its Jacobian at the state
    /// `u` (full grid), with densities `f` per unknown.
    pub fn evaluate(&self, u: &[f64], f: &[f64], seeds: &[Option<(Vec<f64>, f64)>]) -> Result<Evaluation, SolverError> {
        let h = self.spec.spacing;
        let (h2, inv2h) = (h * h, 0.5 / h);
        let rows: Vec<_> = (0..self.len())
            .into_par_iter()
            .map(|r| {
                let k = self.nodes[r];
                let val = |off: (isize, isize)| u[neighbour(&self.spec, k, off)];
                let s: [f64; 9] = STENCIL.map(val);
                let uxx = (s[1] - 2.0 * s[0] + s[2]) / h2;
                let uyy = (s[3] - 2.0 * s[0] + s[4]) / h2;
                let uxy = (s[5] - s[6] - s[7] + s[8]) / (4.0 * h2);
                let p = [(s[1] - s[2]) * inv2h, (s[3] - s[4]) * inv2h];
                let c = self.coefficients(r, s[0], p, seeds.get(r).and_then(|o| o.as_ref()))?;
                let w = Matrix2::new(uxx, uxy, uxy, uyy) - c.a;
                let (det, cof, lmin) = clamped_det(&w);
                let res = det - c.bfac * f[r];
                // b_k = −C : ∂A/∂p_k − f ∂|det E|/∂p_k.
                let b = [0, 1].map(|kk| -cof.component_mul(&c.dpa[kk]).sum() - f[r] * c.dbfac_dp[kk]);
                let centre = -2.0 * (cof[(0, 0)] + cof[(1, 1)]) / h2 - cof.component_mul(&c.dua).sum() - f[r] * c.dbfac_du;
                let c12 = 0.5 * (cof[(0, 1)] + cof[(1, 0)]);
                let e = [
                    centre,
                    cof[(0, 0)] / h2 + b[0] * inv2h,
                    cof[(0, 0)] / h2 - b[0] * inv2h,
                    cof[(1, 1)] / h2 + b[1] * inv2h,
                    cof[(1, 1)] / h2 - b[1] * inv2h,
                    c12 / (2.0 * h2),
                    -c12 / (2.0 * h2),
                    -c12 / (2.0 * h2),
                    c12 / (2.0 * h2),
                ];
                Ok((res, e, lmin, c.seed, c.bfac, c.a.trace()))
            })
            .collect::<Result<Vec<_>, SolverError>>()?;
        let mut ev = Evaluation {
            res: Vec::with_capacity(rows.len()),
            entries: Vec::with_capacity(rows.len()),
            min_eig: f64::INFINITY,
            min_eig_at: 0,
            seeds: Vec::with_capacity(rows.len()),
            bfac: Vec::with_capacity(rows.len()),
            tr_a: Vec::with_capacity(rows.len()),
        };
        for (r, (res, e, lmin, seed, bfac, tr_a)) in rows.into_iter().enumerate() {
            ev.res.push(res);
            ev.entries.push(e);
            if lmin < ev.min_eig {
                ev.min_eig = lmin;
                ev.min_eig_at = r;
            }
            ev.seeds.push(seed);
            ev.bfac.push(bfac);
            ev.tr_a.push(tr_a);
        }
        Ok(ev)
    }

    /// Solve `J δ = rhs` with `J` assembled from stencil entries.
    pub fn solve_linear(&self, entries: &[[f64; 9]], rhs: &[f64]) -> Result<Vec<f64>, SolverError> {
        let mut vals = Vec::with_capacity(9 * self.len());
        for (r, &k) in self.nodes.iter().enumerate() {
            for (s, off) in STENCIL.iter().enumerate() {
                if self.slot[neighbour(&self.spec, k, *off)] != NONE {
                    vals.push(entries[r][s]);
                }
            }
        }
        let mat = SparseColMat::new_from_argsort(self.symbolic.clone(), &self.argsort, &vals)
            .map_err(|e| SolverError::Linear(format!("{e:?}")))?;
        let lu = Lu::try_new_with_symbolic(self.symbolic_lu.clone(), mat.as_ref())
            .map_err(|e| SolverError::Linear(format!("{e:?}")))?;
        let mut b = Mat::from_fn(rhs.len(), 1, |i, _| rhs[i]);
        use faer::linalg::solvers::Solve;
        lu.solve_in_place(b.as_mut());
        let out: Vec<f64> = (0..rhs.len()).map(|i| b[(i, 0)]).collect();
        if out.iter().any(|v| !v.is_finite()) {
            return Err(SolverError::Linear("non-finite Newton step".into()));
        }
        Ok(out)
    }

    /// Fixed-value neighbours contribute to a stencil through `u`; this
    /// returns the contribution of fixed nodes for a linear stencil.
    pub fn fixed_part(&self, r: usize, weights: &[f64; 9], u: &[f64]) -> f64 {
        let k = self.nodes[r];
        let mut acc = 0.0;
        for (s, off) in STENCIL.iter().enumerate() {
            let nb = neighbour(&self.spec, k, *off);
            if self.slot[nb] == NONE {
                acc += weights[s] * u[nb];
            }
        }
        acc
    }
}

#[inline]
pub(crate) fn neighbour(spec: &GridSpec, k: usize, off: (isize, isize)) -> usize {
    (k as isize + off.1 * spec.nx as isize + off.0) as usize
}
