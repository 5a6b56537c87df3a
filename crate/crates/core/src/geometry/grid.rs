use super::GeometryError;
use nalgebra::Matrix2;

/// Uniform 2D grid: node `(i, j)` sits at `origin + (i, j) * spacing` and is
/// stored at index `j * nx + i`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub origin: [f64; 2],
    pub spacing: f64,
    pub nx: usize,
    pub ny: usize,
}

impl GridSpec {
    pub fn new(origin: [f64; 2], spacing: f64, nx: usize, ny: usize) -> GridSpec {
        assert!(nx >= 3 && ny >= 3, "grid needs at least 3 nodes per axis");
        assert!(spacing > 0.0 && spacing.is_finite(), "grid spacing must be positive");
        GridSpec { origin, spacing, nx, ny }
    }

    /// `n × n` nodes covering the square `[lo, hi]²` including its edges.
    pub fn square(lo: f64, hi: f64, n: usize) -> GridSpec {
        GridSpec::new([lo, lo], (hi - lo) / (n - 1) as f64, n, n)
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    #[inline]
    pub fn ij(&self, k: usize) -> (usize, usize) {
        (k % self.nx, k / self.nx)
    }

    #[inline]
    pub fn point(&self, i: usize, j: usize) -> [f64; 2] {
        [self.origin[0] + i as f64 * self.spacing, self.origin[1] + j as f64 * self.spacing]
    }

    pub fn point_k(&self, k: usize) -> [f64; 2] {
        let (i, j) = self.ij(k);
        self.point(i, j)
    }

    pub fn max_corner(&self) -> [f64; 2] {
        self.point(self.nx - 1, self.ny - 1)
    }

    pub fn on_edge(&self, i: usize, j: usize) -> bool {
        i == 0 || j == 0 || i + 1 == self.nx || j + 1 == self.ny
    }

    /// Nearest node to `p` (clamped to the grid).
    pub fn nearest(&self, p: [f64; 2]) -> (usize, usize) {
        let f = |t: f64, o: f64, n: usize| (((t - o) / self.spacing).round().max(0.0) as usize).min(n - 1);
        (f(p[0], self.origin[0], self.nx), f(p[1], self.origin[1], self.ny))
    }

    pub fn contains(&self, p: [f64; 2]) -> bool {
        let m = self.max_corner();
        let eps = 1e-12 * self.spacing;
        p[0] >= self.origin[0] - eps && p[0] <= m[0] + eps && p[1] >= self.origin[1] - eps && p[1] <= m[1] + eps
    }
}

/// Scalar function sampled on a [`GridSpec`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    pub spec: GridSpec,
    pub values: Vec<f64>,
}

/// Cubic Lagrange weights and derivative weights on nodes `0..4` at `t`.
fn lagrange4(t: f64) -> ([f64; 4], [f64; 4]) {
    let nodes = [0.0, 1.0, 2.0, 3.0];
    let mut w = [0.0; 4];
    let mut dw = [0.0; 4];
    for a in 0..4 {
        let mut denom = 1.0;
        for b in 0..4 {
            if b != a {
                denom *= nodes[a] - nodes[b];
            }
        }
        let mut prod = 1.0;
        let mut dsum = 0.0;
        for b in 0..4 {
            if b == a {
                continue;
            }
            let mut term = 1.0;
            for c in 0..4 {
                if c != a && c != b {
                    term *= t - nodes[c];
                }
            }
            dsum += term;
            prod *= t - nodes[b];
        }
        w[a] = prod / denom;
        dw[a] = dsum / denom;
    }
    (w, dw)
}

impl GridFunction {
    pub fn new(spec: GridSpec, values: Vec<f64>) -> Result<GridFunction, GeometryError> {
        if values.len() != spec.len() {
            return Err(GeometryError::GridShape { expected: spec.len(), got: values.len() });
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(GeometryError::NonFiniteValue { at: spec.point_k(k) });
        }
        Ok(GridFunction { spec, values })
    }

    /// Sample `f` at every node.
    pub fn from_fn(spec: GridSpec, f: impl Fn([f64; 2]) -> f64) -> Result<GridFunction, GeometryError> {
        let values = (0..spec.len()).map(|k| f(spec.point_k(k))).collect();
        GridFunction::new(spec, values)
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.spec.index(i, j)]
    }

    /// Central-difference gradient at an interior node.
    pub fn gradient(&self, i: usize, j: usize) -> [f64; 2] {
        let h = self.spec.spacing;
        [(self.at(i + 1, j) - self.at(i - 1, j)) / (2.0 * h), (self.at(i, j + 1) - self.at(i, j - 1)) / (2.0 * h)]
    }

    /// 9-point Hessian at an interior node.
    pub fn hessian(&self, i: usize, j: usize) -> Matrix2<f64> {
        let h2 = self.spec.spacing * self.spec.spacing;
        let c = self.at(i, j);
        let uxx = (self.at(i + 1, j) - 2.0 * c + self.at(i - 1, j)) / h2;
        let uyy = (self.at(i, j + 1) - 2.0 * c + self.at(i, j - 1)) / h2;
        let uxy = (self.at(i + 1, j + 1) - self.at(i + 1, j - 1) - self.at(i - 1, j + 1) + self.at(i - 1, j - 1))
            / (4.0 * h2);
        Matrix2::new(uxx, uxy, uxy, uyy)
    }

    /// Piecewise-cubic Lagrange interpolation (exact for cubics) with its
    /// gradient. The 4×4 stencil is shifted inward near the grid edge.
    pub fn interpolate_with_gradient(&self, p: [f64; 2]) -> Result<(f64, [f64; 2]), GeometryError> {
        let s = &self.spec;
        if !s.contains(p) {
            return Err(GeometryError::InterpolationOutOfRange { at: p });
        }
        let locate = |t: f64, o: f64, n: usize| {
            let r = (t - o) / s.spacing;
            let base = (r.floor() as isize - 1).clamp(0, n as isize - 4) as usize;
            (base, r - base as f64)
        };
        let (bi, ti) = locate(p[0], s.origin[0], s.nx);
        let (bj, tj) = locate(p[1], s.origin[1], s.ny);
        let (wx, dwx) = lagrange4(ti);
        let (wy, dwy) = lagrange4(tj);
        let (mut v, mut gx, mut gy) = (0.0, 0.0, 0.0);
        for b in 0..4 {
            for a in 0..4 {
                let f = self.at(bi + a, bj + b);
                v += wx[a] * wy[b] * f;
                gx += dwx[a] * wy[b] * f;
                gy += wx[a] * dwy[b] * f;
            }
        }
        Ok((v, [gx / s.spacing, gy / s.spacing]))
    }

    /// Bilinear blend of the four node Hessians around `p`; equals the node
    /// Hessian when `p` is a node. Needs a one-node margin to the edge.
    pub fn hessian_at(&self, p: [f64; 2]) -> Result<Matrix2<f64>, GeometryError> {
        let s = &self.spec;
        let ri = (p[0] - s.origin[0]) / s.spacing;
        let rj = (p[1] - s.origin[1]) / s.spacing;
        if !(ri >= 1.0 && rj >= 1.0 && ri <= (s.nx - 2) as f64 && rj <= (s.ny - 2) as f64) {
            return Err(GeometryError::InterpolationOutOfRange { at: p });
        }
        let (i0, j0) = ((ri.floor() as usize).min(s.nx - 3), (rj.floor() as usize).min(s.ny - 3));
        let (ti, tj) = (ri - i0 as f64, rj - j0 as f64);
        Ok(self.hessian(i0, j0) * ((1.0 - ti) * (1.0 - tj))
            + self.hessian(i0 + 1, j0) * (ti * (1.0 - tj))
            + self.hessian(i0, j0 + 1) * ((1.0 - ti) * tj)
            + self.hessian(i0 + 1, j0 + 1) * (ti * tj))
    }

    pub fn interpolate(&self, p: [f64; 2]) -> Result<f64, GeometryError> {
        Ok(self.interpolate_with_gradient(p)?.0)
    }

    pub fn max_abs_diff(&self, other: &GridFunction) -> f64 {
        self.values.iter().zip(&other.values).fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }
}
