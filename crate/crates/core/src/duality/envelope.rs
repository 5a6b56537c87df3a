use super::{z_inverse, DualityError};
use crate::genfun::{GenFun, PhasePoint};
use crate::geometry::{GeometryError, GridFunction, GridSpec};
use rayon::prelude::*;

/// `v(y) = max_x g*(x, y, u(x))` on a grid in `y`, with the maximizing
/// source node of every dual node.
#[derive(Debug, Clone, PartialEq)]
pub struct DualFunction {
    pub spec: GridSpec,
    pub values: Vec<f64>,
    /// Index into the source grid of the node attaining the envelope.
    pub argmax: Vec<usize>,
    pub source: GridSpec,
}

impl DualFunction {
    /// The values as a grid function on the `y` grid.
    pub fn to_grid_function(&self) -> Result<GridFunction, GeometryError> {
        GridFunction::new(self.spec, self.values.clone())
    }

    /// Source point `x(y)` attaining the envelope at dual node `k`.
    pub fn back_pointer(&self, k: usize) -> [f64; 2] {
        self.source.point_k(self.argmax[k])
    }
}

/// Evaluates `g(x, y, ·)` pairs, using `g = g(x, y, 0) + c z` when `g_z ≡ c`.
struct Pairing<'a> {
    gf: &'a GenFun,
    affine: Option<f64>,
    zlo: f64,
    zhi: f64,
}

impl<'a> Pairing<'a> {
    fn new(gf: &'a GenFun) -> Pairing<'a> {
        let iv = gf.domain().z_interval;
        Pairing { gf, affine: gf.gz_constant(), zlo: iv.lo, zhi: iv.hi }
    }

    /// `z` with `g(x, y, z) = u`, or `None` when `u ∉ g(x, y, I)`.
    fn z_of(&self, vars: &mut [f64; 5], u: f64, scratch: &mut Vec<f64>) -> Result<Option<f64>, DualityError> {
        match self.affine {
            Some(c) => {
                vars[4] = 0.0;
                let z = (u - self.gf.g_flat(vars, scratch)?) / c;
                Ok((z >= self.zlo && z <= self.zhi).then_some(z))
            }
            None => match z_inverse(self.gf, &vars[0..2], &vars[2..4], u) {
                Ok(z) => Ok(Some(z)),
                Err(DualityError::OutOfRange { .. }) => Ok(None),
                Err(e) => Err(e),
            },
        }
    }

    fn g(&self, vars: &mut [f64; 5], z: f64, scratch: &mut Vec<f64>) -> Result<f64, DualityError> {
        match self.affine {
            Some(c) => {
                vars[4] = 0.0;
                Ok(self.gf.g_flat(vars, scratch)? + c * z)
            }
            None => {
                vars[4] = z;
                Ok(self.gf.g_flat(vars, scratch)?)
            }
        }
    }
}

/// `v(y) = max over grid x of z_inverse(x, y, u(x))` on `y_spec`. Ties keep
/// the first maximizing node.
pub fn g_star_transform(u: &GridFunction, gf: &GenFun, y_spec: GridSpec) -> Result<DualFunction, DualityError> {
    let pairing = Pairing::new(gf);
    let xs = u.spec;
    let per_node: Vec<Result<Option<(f64, usize)>, DualityError>> = (0..y_spec.len())
        .into_par_iter()
        .map_init(Vec::new, |scratch, ky| {
            let y = y_spec.point_k(ky);
            let mut best: Option<(f64, usize)> = None;
            for kx in 0..xs.len() {
                let x = xs.point_k(kx);
                let mut vars = [x[0], x[1], y[0], y[1], 0.0];
                if let Some(z) = pairing.z_of(&mut vars, u.values[kx], scratch)? {
                    if best.map_or(true, |(b, _)| z > b) {
                        best = Some((z, kx));
                    }
                }
            }
            Ok(best)
        })
        .collect();
    let (mut values, mut argmax, mut empty) = (Vec::with_capacity(y_spec.len()), Vec::with_capacity(y_spec.len()), Vec::new());
    for (ky, r) in per_node.into_iter().enumerate() {
        match r? {
            Some((v, k)) => {
                values.push(v);
                argmax.push(k);
            }
            None => empty.push(y_spec.point_k(ky)),
        }
    }
    if !empty.is_empty() {
        return Err(DualityError::EmptyAdmissibleSet { nodes: empty });
    }
    Ok(DualFunction { spec: y_spec, values, argmax, source: xs })
}

/// `û(x) = max over grid y of g(x, y, v(y))` on the source grid of `v`.
pub fn double_transform(gf: &GenFun, v: &DualFunction) -> Result<GridFunction, DualityError> {
    let pairing = Pairing::new(gf);
    let xs = v.source;
    let values: Result<Vec<f64>, DualityError> = (0..xs.len())
        .into_par_iter()
        .map_init(Vec::new, |scratch, kx| {
            let x = xs.point_k(kx);
            let mut best = f64::NEG_INFINITY;
            for ky in 0..v.spec.len() {
                let y = v.spec.point_k(ky);
                let mut vars = [x[0], x[1], y[0], y[1], 0.0];
                best = best.max(pairing.g(&mut vars, v.values[ky], scratch)?);
            }
            Ok(best)
        })
        .collect();
    Ok(GridFunction::new(xs, values?)?)
}

/// Square grid in `y` with as many nodes as `u` has per side, covering the
/// image of `x ↦ Y(x, u, Du)` over interior nodes (central differences).
pub fn dual_grid(u: &GridFunction, gf: &GenFun) -> Result<GridSpec, DualityError> {
    let s = u.spec;
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for j in 1..s.ny - 1 {
        for i in 1..s.nx - 1 {
            let q = PhasePoint::new(s.point(i, j).to_vec(), u.at(i, j), u.gradient(i, j).to_vec());
            let (y, _) = gf.solve_yz(&q, None)?;
            for d in 0..2 {
                lo[d] = lo[d].min(y[d]);
                hi[d] = hi[d].max(y[d]);
            }
        }
    }
    let n = s.nx.max(s.ny);
    let width = (hi[0] - lo[0]).max(hi[1] - lo[1]).max(s.spacing * (n - 1) as f64 * 1e-6);
    let spacing = width / (n - 1) as f64;
    let centre = [0.5 * (lo[0] + hi[0]), 0.5 * (lo[1] + hi[1])];
    Ok(GridSpec::new([centre[0] - 0.5 * width, centre[1] - 0.5 * width], spacing, n, n))
}

/// Result of `u ↦ v ↦ û`.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundTrip {
    pub dual: DualFunction,
    pub u_hat: GridFunction,
    /// `sup |û − u|`.
    pub defect: f64,
    /// `sup (u − û)⁺`: where `u` is not g-convex the envelope drops below it.
    pub envelope_gap: f64,
    /// `sup (û − u)⁺`; zero up to rounding, since envelopes only decrease.
    pub overshoot: f64,
    /// Spacing of the source grid.
    pub spacing: f64,
}

/// Round trip on the grid from [`dual_grid`].
pub fn double_transform_check(u: &GridFunction, gf: &GenFun) -> Result<RoundTrip, DualityError> {
    let y_spec = dual_grid(u, gf)?;
    let dual = g_star_transform(u, gf, y_spec)?;
    let u_hat = double_transform(gf, &dual)?;
    let (mut gap, mut over) = (0.0f64, 0.0f64);
    for (a, b) in u.values.iter().zip(&u_hat.values) {
        gap = gap.max(a - b);
        over = over.max(b - a);
    }
    Ok(RoundTrip { dual, u_hat, defect: gap.max(over), envelope_gap: gap, overshoot: over, spacing: u.spec.spacing })
}
