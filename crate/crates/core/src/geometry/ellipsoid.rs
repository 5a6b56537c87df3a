use super::GeometryError;
use nalgebra::{DMatrix, DVector};

/// Relative tolerance of the minimum-volume iteration.
pub const ELLIPSOID_TOL: f64 = 1e-8;


/// `{c + R diag(r) w : |w| ≤ 1}` with `r` sorted in decreasing order.
#[derive(Debug, Clone, PartialEq)]
pub struct Ellipsoid {
    pub center: Vec<f64>,
    /// Orthonormal columns, one per semi-axis.
    pub rotation: DMatrix<f64>,
    pub semi_axes: Vec<f64>,
}

impl Ellipsoid {
    pub fn n(&self) -> usize {
        self.center.len()
    }

    /// `M` with the ellipsoid equal to `{(x − c)ᵀ M (x − c) ≤ 1}`.
    pub fn shape_matrix(&self) -> DMatrix<f64> {
        let d = DMatrix::from_diagonal(&DVector::from_iterator(self.n(), self.semi_axes.iter().map(|r| 1.0 / (r * r))));
        &self.rotation * d * self.rotation.transpose()
    }

    /// `(x − c)ᵀ M (x − c)`.
    pub fn gauge(&self, x: &[f64]) -> f64 {
        let d = DVector::from_iterator(self.n(), x.iter().zip(&self.center).map(|(a, b)| a - b));
        let w = self.rotation.transpose() * d;
        w.iter().zip(&self.semi_axes).map(|(t, r)| (t / r) * (t / r)).sum()
    }

    /// Map from the unit ball: `w ↦ c + R diag(r) w`.
    pub fn frame(&self) -> DMatrix<f64> {
        &self.rotation * DMatrix::from_diagonal(&DVector::from_vec(self.semi_axes.clone()))
    }

    pub fn axes_product(&self) -> f64 {
        self.semi_axes.iter().product()
    }

    /// Volume `ω_n r₁⋯r_n`.
    pub fn volume(&self) -> f64 {
        let n = self.n() as f64;
        let omega = std::f64::consts::PI.powf(n / 2.0) / gamma_half_plus_one(self.n());
        omega * self.axes_product()
    }
}

/// `Γ(n/2 + 1)` for integer `n`.
fn gamma_half_plus_one(n: usize) -> f64 {
    let mut g = if n % 2 == 0 { 1.0 } else { std::f64::consts::PI.sqrt() / 2.0 };
    let mut k = if n % 2 == 0 { 1.0 } else { 1.5 };
    while k <= n as f64 / 2.0 + 1e-12 {
        g *= k;
        k += 1.0;
    }
    g
}

/// Ratio `r₁/r_n` of extreme semi-axes.
pub fn good_shape(e: &Ellipsoid) -> f64 {
    e.semi_axes[0] / e.semi_axes[e.n() - 1]
}

/// Convex hull of planar points by the monotone chain, counter-clockwise
/// without collinear vertices.
pub fn convex_hull(points: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let mut p: Vec<[f64; 2]> = points.to_vec();
    p.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    p.dedup();
    if p.len() < 3 {
        return p;
    }
    let cross = |o: [f64; 2], a: [f64; 2], b: [f64; 2]| (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
    let mut hull: Vec<[f64; 2]> = Vec::with_capacity(2 * p.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &[f64; 2]>> = if pass == 0 { Box::new(p.iter()) } else { Box::new(p.iter().rev()) };
        for &q in iter {
            while hull.len() >= start + 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], q) <= 0.0 {
                hull.pop();
            }
            hull.push(q);
        }
        hull.pop();
    }
    hull
}

/// Minimum-volume enclosing ellipsoid of a point cloud in any dimension.
///
/// The ellipsoid is written `{x : |A x + b| ≤ 1}` with `A` symmetric
/// positive definite, so minimizing `−log det A` is convex with convex
/// constraints. A log-barrier Newton method drives the duality gap below
/// [`ELLIPSOID_TOL`], a relative bound on the volume. The result is finally
/// shrunk about its centre until the outermost point lies on it. Planar
/// input is reduced to its convex hull first.
pub fn min_ellipsoid(points: &[Vec<f64>]) -> Result<Ellipsoid, GeometryError> {
    let degenerate = |what: String| GeometryError::DegenerateInput { what };
    let n = points.first().map(Vec::len).ok_or_else(|| degenerate("no points".into()))?;
    if n == 0 || points.iter().any(|p| p.len() != n) {
        return Err(degenerate("points of mixed or zero dimension".into()));
    }
    let pts: Vec<Vec<f64>> = if n == 2 {
        let flat: Vec<[f64; 2]> = points.iter().map(|p| [p[0], p[1]]).collect();
        convex_hull(&flat).into_iter().map(|q| q.to_vec()).collect()
    } else {
        points.to_vec()
    };
    let m = pts.len();
    if m < n + 1 {
        return Err(degenerate(format!("{m} extreme points cannot span dimension {n}")));
    }
    let mean: Vec<f64> = (0..n).map(|a| pts.iter().map(|p| p[a]).sum::<f64>() / m as f64).collect();
    let cov = DMatrix::from_fn(n, n, |a, b| pts.iter().map(|p| (p[a] - mean[a]) * (p[b] - mean[b])).sum::<f64>() / m as f64);
    let ev = cov.symmetric_eigen().eigenvalues;
    let (lo, hi) = ev.iter().fold((f64::INFINITY, 0.0f64), |(l, h), &v| (l.min(v), h.max(v)));
    if !(hi > 0.0) || lo <= 1e-14 * hi {
        return Err(degenerate("points lie in a lower-dimensional affine subspace".into()));
    }
    // Centre and scale to the unit box for conditioning.
    let scale = pts.iter().flat_map(|p| p.iter().zip(&mean).map(|(a, b)| (a - b).abs())).fold(0.0f64, f64::max);
    let sh: Vec<DVector<f64>> =
        pts.iter().map(|p| DVector::from_iterator(n, p.iter().zip(&mean).map(|(a, b)| (a - b) / scale))).collect();

    let (a, b) = barrier_mvee(&sh, n).ok_or_else(|| degenerate("barrier iteration failed".into()))?;
    // Ellipsoid {|A x + b| ≤ 1}: centre −A⁻¹b, semi-axes 1/λ(A).
    let ainv = a.clone().try_inverse().ok_or_else(|| degenerate("singular ellipsoid matrix".into()))?;
    let c_sh = -(&ainv * &b);
    let eig = a.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let semi_axes: Vec<f64> = order.iter().map(|&i| scale / eig.eigenvalues[i]).collect();
    let rotation = DMatrix::from_fn(n, n, |r, col| eig.eigenvectors[(r, order[col])]);
    let center = (0..n).map(|i| mean[i] + scale * c_sh[i]).collect();
    let mut e = Ellipsoid { center, rotation, semi_axes };
    let worst = points.iter().map(|p| e.gauge(p)).fold(0.0f64, f64::max);
    let f = worst.sqrt();
    for r in e.semi_axes.iter_mut() {
        *r *= f;
    }
    Ok(e)
}

/// Coordinates: the upper triangle of `A` row by row, then `b`.
fn sym_index(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).collect()
}

/// Minimize `−t log det A − Σ log(1 − |A pᵢ + b|²)` along the central path.
fn barrier_mvee(p: &[DVector<f64>], n: usize) -> Option<(DMatrix<f64>, DVector<f64>)> {
    let sym = sym_index(n);
    let ka = sym.len();
    let k = ka + n;
    let m = p.len() as f64;
    let unpack = |th: &DVector<f64>| {
        let mut a = DMatrix::zeros(n, n);
        for (c, &(i, j)) in sym.iter().enumerate() {
            a[(i, j)] = th[c];
            a[(j, i)] = th[c];
        }
        (a, DVector::from_iterator(n, (0..n).map(|i| th[ka + i])))
    };
    // Φᵢ θ = A pᵢ + b.
    let phi = |q: &DVector<f64>| {
        let mut f = DMatrix::zeros(n, k);
        for (c, &(i, j)) in sym.iter().enumerate() {
            f[(i, c)] += q[j];
            if i != j {
                f[(j, c)] += q[i];
            }
        }
        for i in 0..n {
            f[(i, ka + i)] = 1.0;
        }
        f
    };
    let phis: Vec<DMatrix<f64>> = p.iter().map(phi).collect();
    // Start from a ball of radius 2 around the origin (points are in [−1, 1]ⁿ).
    let r0 = 2.0 * (n as f64).sqrt();
    let mut theta = DVector::zeros(k);
    for (c, &(i, j)) in sym.iter().enumerate() {
        if i == j {
            theta[c] = 1.0 / r0;
        }
    }
    let objective = |th: &DVector<f64>, t: f64| -> Option<f64> {
        let (a, _) = unpack(th);
        let chol = a.cholesky()?;
        let logdet = 2.0 * chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>();
        let mut acc = -t * logdet;
        for f in &phis {
            let w = f * th;
            let s = 1.0 - w.norm_squared();
            if s <= 0.0 {
                return None;
            }
            acc -= s.ln();
        }
        Some(acc)
    };
    let mut t = 1.0;
    loop {
        for _ in 0..100 {
            let (a, _) = unpack(&theta);
            let ainv = a.try_inverse()?;
            let mut grad = DVector::zeros(k);
            let mut hess = DMatrix::zeros(k, k);
            // Barrier on log det: ∂θ_c = tr(A⁻¹ E_c), ∂²θ_cθ_d = tr(A⁻¹E_c A⁻¹E_d).
            let basis: Vec<DMatrix<f64>> = sym
                .iter()
                .map(|&(i, j)| {
                    let mut e = DMatrix::zeros(n, n);
                    e[(i, j)] = 1.0;
                    e[(j, i)] = 1.0;
                    e
                })
                .collect();
            let ae: Vec<DMatrix<f64>> = basis.iter().map(|e| &ainv * e).collect();
            for c in 0..ka {
                grad[c] -= t * ae[c].trace();
                for d in 0..ka {
                    hess[(c, d)] += t * (&ae[c] * &ae[d]).trace();
                }
            }
            for f in &phis {
                let w = f * &theta;
                let s = 1.0 - w.norm_squared();
                let fw = f.transpose() * &w;
                grad += &fw * (2.0 / s);
                hess += f.transpose() * f * (2.0 / s) + &fw * fw.transpose() * (4.0 / (s * s));
            }
            let step = hess.cholesky()?.solve(&(-&grad));
            let decrement = -grad.dot(&step);
            if decrement / 2.0 <= 1e-12 {
                break;
            }
            let f0 = objective(&theta, t)?;
            let mut alpha = 1.0;
            loop {
                let cand = &theta + &step * alpha;
                if let Some(fc) = objective(&cand, t) {
                    if fc <= f0 - 0.25 * alpha * decrement {
                        theta = cand;
                        break;
                    }
                }
                alpha *= 0.5;
                if alpha < 1e-20 {
                    return Some(unpack(&theta));
                }
            }
        }
        if m / t <= ELLIPSOID_TOL {
            return Some(unpack(&theta));
        }
        t *= 20.0;
    }
}

/// Outcome of testing `(1/n)E ⊂ hull ⊂ E`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SandwichReport {
    /// `max_p gauge(p) − 1`; nonpositive when every point is inside `E`.
    pub outer_excess: f64,
    /// Largest signed distance by which the shrunken ellipse crosses a
    /// hull edge; nonpositive when it fits.
    pub inner_excess: f64,
}

impl SandwichReport {
    pub fn holds(&self, tol: f64) -> bool {
        self.outer_excess <= tol && self.inner_excess <= tol
    }
}

/// Check the `1/n` sandwich for a planar point set.
pub fn sandwich(e: &Ellipsoid, points: &[[f64; 2]]) -> Result<SandwichReport, GeometryError> {
    if e.n() != 2 {
        return Err(GeometryError::UnsupportedDimension { n: e.n() });
    }
    let outer_excess = points.iter().map(|p| e.gauge(p) - 1.0).fold(f64::NEG_INFINITY, f64::max);
    let hull = convex_hull(points);
    if hull.len() < 3 {
        return Err(GeometryError::DegenerateInput { what: "hull has empty interior".into() });
    }
    let minv = e.shape_matrix().try_inverse().ok_or(GeometryError::DegenerateInput { what: "singular ellipse".into() })?;
    let mut inner_excess = f64::NEG_INFINITY;
    for k in 0..hull.len() {
        let (a, b) = (hull[k], hull[(k + 1) % hull.len()]);
        let (tx, ty) = (b[0] - a[0], b[1] - a[1]);
        let len = tx.hypot(ty);
        // Outward unit normal of a counter-clockwise edge.
        let nrm = [ty / len, -tx / len];
        let offset = nrm[0] * a[0] + nrm[1] * a[1];
        let quad = nrm[0] * (minv[(0, 0)] * nrm[0] + minv[(0, 1)] * nrm[1]) + nrm[1] * (minv[(1, 0)] * nrm[0] + minv[(1, 1)] * nrm[1]);
        let support = nrm[0] * e.center[0] + nrm[1] * e.center[1] + quad.sqrt() / e.n() as f64;
        inner_excess = inner_excess.max(support - offset);
    }
    Ok(SandwichReport { outer_excess, inner_excess })
}

/// How far a closed polygon is from convex: the largest distance from a
/// vertex to the boundary of the convex hull.
pub fn convexity_defect(poly: &[[f64; 2]]) -> f64 {
    let hull = convex_hull(poly);
    if hull.len() < 3 {
        return 0.0;
    }
    let seg_dist = |p: [f64; 2], a: [f64; 2], b: [f64; 2]| {
        let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
        let l2 = dx * dx + dy * dy;
        let t = if l2 > 0.0 { (((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / l2).clamp(0.0, 1.0) } else { 0.0 };
        (p[0] - a[0] - t * dx).hypot(p[1] - a[1] - t * dy)
    };
    poly.iter()
        .map(|&p| (0..hull.len()).map(|k| seg_dist(p, hull[k], hull[(k + 1) % hull.len()])).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max)
}
