use super::{z_inverse, DualityError};
use crate::genfun::GenFun;
use crate::geometry::GeometryError;
use nalgebra::Matrix2;

/// Base finite-difference step of the Taylor coefficients; one Richardson
/// extrapolation with half the step follows.
pub const TAYLOR_STEP: f64 = 2e-3;

/// Taylor coefficients of `g` near `(x₀, y₀, z₀)` after the renormalization
///
/// `ĝ(x̂, ŷ, ẑ) = [g(x₀+x̂, y₀+η, z₀+ζ) − g(x₀+x̂, y₀, z₀)] / c`,
///
/// with `c = −g_z`, `η = c E⁻¹ ŷ` and `ζ(η, ẑ)` solving
/// `g(x₀, y₀+η, z₀+ζ) = g(x₀, y₀, z₀) − c ẑ`. The pure-`x` and pure-`(y, z)`
/// parts of `ĝ` vanish identically and `ĝ = x̂·ŷ − ẑ + O(3)`; the remaining
/// coefficients are what the expansion `x·y − z + a_{i,jk} x_i y_j y_k`
/// accounts for (`a`) and what it leaves over (`b` blocks).
#[derive(Debug, Clone, PartialEq)]
pub struct NormalForm {
    pub c: f64,
    pub e: Matrix2<f64>,
    /// `max |∂²ĝ/∂x̂_i∂ŷ_j − δ_ij|`; zero up to differencing error.
    pub bilinear_defect: f64,
    /// Coefficient of `x̂_i ẑ`.
    pub b1: [f64; 2],
    /// Coefficient of `x̂_i ŷ_j ŷ_k`, symmetric in `(j, k)`.
    pub a: [[[f64; 2]; 2]; 2],
    /// Coefficient of `x̂_i x̂_j ŷ_k`, symmetric in `(i, j)`.
    pub b2: [[[f64; 2]; 2]; 2],
    /// Coefficients of `x̂_i ŷ_j ẑ`.
    pub b3_xyz: [[f64; 2]; 2],
    /// Coefficients of `x̂_i x̂_j ẑ`, symmetric.
    pub b3_xxz: [[f64; 2]; 2],
    /// Coefficients of `x̂_i ẑ²`.
    pub b3_xzz: [f64; 2],
    /// Largest coefficient outside `x·y − z + a_{i,jk} x_i y_j y_k`.
    pub structure_residual: f64,
}

impl NormalForm {
    pub const HEADER: &'static str = "block,i,j,k,value";

    /// One row per reported coefficient.
    pub fn csv_rows(&self) -> Vec<String> {
        let mut out = Vec::new();
        for i in 0..2 {
            out.push(format!("b1,{i},,,{:.16e}", self.b1[i]));
            out.push(format!("b3_xzz,{i},,,{:.16e}", self.b3_xzz[i]));
            for j in 0..2 {
                out.push(format!("b3_xyz,{i},{j},,{:.16e}", self.b3_xyz[i][j]));
                out.push(format!("b3_xxz,{i},{j},,{:.16e}", self.b3_xxz[i][j]));
                for k in 0..2 {
                    out.push(format!("a,{i},{j},{k},{:.16e}", self.a[i][j][k]));
                    out.push(format!("b2,{i},{j},{k},{:.16e}", self.b2[i][j][k]));
                }
            }
        }
        out.push(format!("bilinear_defect,,,,{:.16e}", self.bilinear_defect));
        out.push(format!("structure_residual,,,,{:.16e}", self.structure_residual));
        out
    }
}

/// Normal-form coefficient report of `g` at `(x₀, y₀, z₀)`; a diagnostic
/// computed by differencing the renormalized function.
pub fn gen_exp_normal_form(gf: &GenFun, x0: [f64; 2], y0: [f64; 2], z0: f64) -> Result<NormalForm, DualityError> {
    if gf.n() != 2 {
        return Err(GeometryError::UnsupportedDimension { n: gf.n() }.into());
    }
    let jet = gf.newton_jet(&x0, &y0, z0)?;
    let c = -jet.gz;
    let em = jet.e_matrix();
    let e = Matrix2::new(em[(0, 0)], em[(0, 1)], em[(1, 0)], em[(1, 1)]);
    let det = e.determinant();
    let scale = e.norm().max(1e-300);
    if det.abs() <= 1e-12 * scale * scale {
        return Err(DualityError::DegenerateE { det: det.abs() });
    }
    let e_inv = e.try_inverse().ok_or(DualityError::DegenerateE { det: det.abs() })?;
    let g0 = jet.g;
    // v = (x̂₁, x̂₂, ŷ₁, ŷ₂, ẑ)
    let g_hat = |v: [f64; 5]| -> Result<f64, DualityError> {
        let eta = e_inv * nalgebra::Vector2::new(v[2], v[3]) * c;
        let y = [y0[0] + eta[0], y0[1] + eta[1]];
        let z = z_inverse(gf, &x0, &y, g0 - c * v[4])?;
        let x = [x0[0] + v[0], x0[1] + v[1]];
        Ok((gf.g(&x, &y, z)? - gf.g(&x, &y0, z0)?) / c)
    };
    let shift = |dirs: &[(usize, f64)]| {
        let mut v = [0.0; 5];
        for &(d, t) in dirs {
            v[d] += t;
        }
        v
    };
    let d2 = |a: usize, b: usize, h: f64| -> Result<f64, DualityError> {
        let mut s = 0.0;
        for sa in [-1.0, 1.0] {
            for sb in [-1.0, 1.0] {
                s += sa * sb * g_hat(shift(&[(a, sa * h), (b, sb * h)]))?;
            }
        }
        Ok(s / (4.0 * h * h))
    };
    let d3 = |a: usize, b: usize, cc: usize, h: f64| -> Result<f64, DualityError> {
        let mut s = 0.0;
        for sa in [-1.0, 1.0] {
            for sb in [-1.0, 1.0] {
                for sc in [-1.0, 1.0] {
                    s += sa * sb * sc * g_hat(shift(&[(a, sa * h), (b, sb * h), (cc, sc * h)]))?;
                }
            }
        }
        Ok(s / (8.0 * h * h * h))
    };
    let h = TAYLOR_STEP;
    let rich2 = |a, b| -> Result<f64, DualityError> { Ok((4.0 * d2(a, b, 0.5 * h)? - d2(a, b, h)?) / 3.0) };
    let rich3 = |a, b, cc| -> Result<f64, DualityError> { Ok((4.0 * d3(a, b, cc, 0.5 * h)? - d3(a, b, cc, h)?) / 3.0) };

    let (x, y, z) = (|i: usize| i, |j: usize| 2 + j, 4);
    let mut bilinear_defect: f64 = 0.0;
    let mut b1 = [0.0; 2];
    let mut a = [[[0.0; 2]; 2]; 2];
    let mut b2 = [[[0.0; 2]; 2]; 2];
    let mut b3_xyz = [[0.0; 2]; 2];
    let mut b3_xxz = [[0.0; 2]; 2];
    let mut b3_xzz = [0.0; 2];
    for i in 0..2 {
        b1[i] = rich2(x(i), z)?;
        b3_xzz[i] = 0.5 * rich3(x(i), z, z)?;
        for j in 0..2 {
            let delta = if i == j { 1.0 } else { 0.0 };
            bilinear_defect = bilinear_defect.max((rich2(x(i), y(j))? - delta).abs());
            b3_xyz[i][j] = rich3(x(i), y(j), z)?;
            b3_xxz[i][j] = 0.5 * rich3(x(i), x(j), z)?;
            for k in 0..2 {
                a[i][j][k] = 0.5 * rich3(x(i), y(j), y(k))?;
                b2[i][j][k] = 0.5 * rich3(x(i), x(j), y(k))?;
            }
        }
    }
    let mut residual = bilinear_defect;
    for i in 0..2 {
        residual = residual.max(b1[i].abs()).max(b3_xzz[i].abs());
        for j in 0..2 {
            residual = residual.max(b3_xyz[i][j].abs()).max(b3_xxz[i][j].abs());
            for k in 0..2 {
                residual = residual.max(b2[i][j][k].abs());
            }
        }
    }
    Ok(NormalForm { c, e, bilinear_defect, b1, a, b2, b3_xyz, b3_xxz, b3_xzz, structure_residual: residual })
}
