use crate::gfdsl::Var;

/// Partial derivatives of `g` at one point `(x, y, z)`, up to the third-order
/// mixed terms the coefficient formulas consume.
///
/// Matrix blocks are row-major: `gxy[i*n + j] = g_{x_i y_j}`,
/// `gxxy[(i*n + j)*n + r] = g_{x_i x_j y_r}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    pub n: usize,
    pub g: f64,
    pub gx: Vec<f64>,
    pub gy: Vec<f64>,
    pub gz: f64,
    pub gxy: Vec<f64>,
    pub gxz: Vec<f64>,
    pub gxx: Vec<f64>,
    pub gxxy: Vec<f64>,
    pub gxxz: Vec<f64>,
}

/// Multi-indices for the first-order block used by the A1 Newton solve.
pub(crate) fn newton_indices(n: usize) -> Vec<Vec<Var>> {
    let mut out = vec![vec![]];
    out.extend((0..n).map(|i| vec![Var::X(i)]));
    out.extend((0..n).map(|j| vec![Var::Y(j)]));
    out.push(vec![Var::Z]);
    for i in 0..n {
        out.extend((0..n).map(|j| vec![Var::X(i), Var::Y(j)]));
    }
    out.extend((0..n).map(|i| vec![Var::X(i), Var::Z]));
    out
}

/// Multi-indices of the full jet: the Newton block followed by the
/// second/third-order x-derivatives.
pub(crate) fn jet_indices(n: usize) -> Vec<Vec<Var>> {
    let mut out = newton_indices(n);
    for i in 0..n {
        out.extend((0..n).map(|j| vec![Var::X(i), Var::X(j)]));
    }
    for i in 0..n {
        for j in 0..n {
            out.extend((0..n).map(|r| vec![Var::X(i), Var::X(j), Var::Y(r)]));
        }
    }
    for i in 0..n {
        out.extend((0..n).map(|j| vec![Var::X(i), Var::X(j), Var::Z]));
    }
    out
}

impl Jet {
    /// Unpack program outputs laid out as in [`jet_indices`] (or the Newton
    /// prefix only, leaving the higher blocks empty).
    pub(crate) fn from_flat(n: usize, v: &[f64]) -> Jet {
        let mut at = 0;
        let mut take = |k: usize| {
            let s = v[at..at + k].to_vec();
            at += k;
            s
        };
        let g = take(1)[0];
        let gx = take(n);
        let gy = take(n);
        let gz = take(1)[0];
        let gxy = take(n * n);
        let gxz = take(n);
        let full = v.len() > 2 + 3 * n + n * n;
        let (gxx, gxxy, gxxz) =
            if full { (take(n * n), take(n * n * n), take(n * n)) } else { (vec![], vec![], vec![]) };
        Jet { n, g, gx, gy, gz, gxy, gxz, gxx, gxxy, gxxz }
    }

    #[inline]
    pub fn gxy_at(&self, i: usize, j: usize) -> f64 {
        self.gxy[i * self.n + j]
    }

    #[inline]
    pub fn gxx_at(&self, i: usize, j: usize) -> f64 {
        self.gxx[i * self.n + j]
    }

    #[inline]
    pub fn gxxy_at(&self, i: usize, j: usize, r: usize) -> f64 {
        self.gxxy[(i * self.n + j) * self.n + r]
    }

    #[inline]
    pub fn gxxz_at(&self, i: usize, j: usize) -> f64 {
        self.gxxz[i * self.n + j]
    }

    /// `E_ij = g_{i,j} - g_{i,z} g_{,j} / g_z`.
    pub fn e_matrix(&self) -> nalgebra::DMatrix<f64> {
        let n = self.n;
        nalgebra::DMatrix::from_fn(n, n, |i, j| self.gxy_at(i, j) - self.gxz[i] * self.gy[j] / self.gz)
    }
}
