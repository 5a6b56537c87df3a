use super::jet::Jet;
use super::tensor::{Tensor3, Tensor4};
use super::{GenFun, GenFunError, PhasePoint};
use nalgebra::{DMatrix, DVector};

/// Central-difference step in `p` used for `D_pp A`.
pub const DPPA_STEP: f64 = 1e-4;
const SINGULAR_E: f64 = 1e-10;

/// `D_{p_k} A_ij = (E⁻¹)_{rk} [g_{ij,r} − g_{,r} g_{ij,z} / g_z]`, from a
/// full jet at `(x, Y, Z)`. Returns the tensor indexed `[i][j][k]`.
pub fn dpa_from_jet(jet: &Jet, e_inv: &DMatrix<f64>) -> Tensor3 {
    let n = jet.n;
    let mut t = Tensor3::zeros(n);
    for i in 0..n {
        for j in 0..n {
            let gijz = jet.gxxz_at(i, j);
            for k in 0..n {
                let mut acc = 0.0;
                for r in 0..n {
                    acc += e_inv[(r, k)] * (jet.gxxy_at(i, j, r) - jet.gy[r] * gijz / jet.gz);
                }
                // Adding 0.0 turns a signed zero into +0.
                t.set(i, j, k, acc + 0.0);
            }
        }
    }
    t
}

/// Coefficients needing only first derivatives of `(Y, Z)` in `(u, p)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FirstOrder {
    pub y: Vec<f64>,
    pub z: f64,
    pub e: DMatrix<f64>,
    pub a: DMatrix<f64>,
    /// `det E`; the equation's right-hand side is `B = |det E| · f`.
    pub b_factor: f64,
    /// `D_{p_k} A_ij` as `[i][j][k]`.
    pub dpa: Tensor3,
    /// `D_u A`.
    pub dua: DMatrix<f64>,
}

/// Full coefficient bundle at a phase point, including `D_pp A`.
#[derive(Debug, Clone, PartialEq)]
pub struct MateCoefficients {
    pub y: Vec<f64>,
    pub z: f64,
    pub e: DMatrix<f64>,
    pub a: DMatrix<f64>,
    pub b_factor: f64,
    pub dpa: Tensor3,
    pub dua: DMatrix<f64>,
    /// `D_{p_k p_l} A_ij` as `[i][j][k][l]`, symmetrized in both pairs.
    pub dppa: Tensor4,
}

impl GenFun {
    fn first_order_at(&self, x: &[f64], y: Vec<f64>, z: f64) -> Result<FirstOrder, GenFunError> {
        let n = self.n();
        let jet = self.jet(x, &y, z)?;
        let e = jet.e_matrix();
        let det = e.determinant();
        if !(det.abs() >= SINGULAR_E) {
            return Err(GenFunError::SingularE { det });
        }
        let e_inv = e.clone().try_inverse().ok_or(GenFunError::SingularE { det })?;
        let a = DMatrix::from_fn(n, n, |i, j| jet.gxx_at(i, j));
        let dpa = dpa_from_jet(&jet, &e_inv);
        // Y_u = −E⁻¹ g_{xz} / g_z,  Z_u = (1 − g_y·Y_u) / g_z.
        let rhs = DVector::from_fn(n, |i, _| -jet.gxz[i] / jet.gz);
        let yu = &e_inv * rhs;
        let zu = (1.0 - (0..n).map(|r| jet.gy[r] * yu[r]).sum::<f64>()) / jet.gz;
        let dua = DMatrix::from_fn(n, n, |i, j| {
            (0..n).map(|r| jet.gxxy_at(i, j, r) * yu[r]).sum::<f64>() + jet.gxxz_at(i, j) * zu + 0.0
        });
        Ok(FirstOrder { y, z, e, a, b_factor: det, dpa, dua })
    }

    /// `Y, Z, E, A, det E, D_pA, D_uA` at `q` (no second `p`-derivatives).
    pub fn first_order(&self, q: &PhasePoint, seed: Option<(&[f64], f64)>) -> Result<FirstOrder, GenFunError> {
        let (y, z) = self.solve_yz(q, seed)?;
        self.first_order_at(&q.x, y, z)
    }

    /// Full coefficient bundle; `D_pp A` is a central difference of the
    /// closed-form `D_p A`, re-solving `(Y, Z)` at each shifted `p`.
    pub fn coefficients(&self, q: &PhasePoint, seed: Option<(&[f64], f64)>) -> Result<MateCoefficients, GenFunError> {
        let n = self.n();
        let base = self.first_order(q, seed)?;
        let mut dppa = Tensor4::zeros(n);
        let mut shifted = q.clone();
        for l in 0..n {
            let mut side = |sign: f64| -> Result<Tensor3, GenFunError> {
                shifted.p.copy_from_slice(&q.p);
                shifted.p[l] += sign * DPPA_STEP;
                Ok(self.first_order(&shifted, Some((&base.y, base.z)))?.dpa)
            };
            let plus = side(1.0)?;
            let minus = side(-1.0)?;
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        let v = (plus.get(i, j, k) - minus.get(i, j, k)) / (2.0 * DPPA_STEP);
                        dppa.set(i, j, k, l, v);
                    }
                }
            }
        }
        let mut sym = Tensor4::zeros(n);
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        let v = 0.25
                            * (dppa.get(i, j, k, l) + dppa.get(j, i, k, l) + dppa.get(i, j, l, k) + dppa.get(j, i, l, k));
                        sym.set(i, j, k, l, v + 0.0);
                    }
                }
            }
        }
        let FirstOrder { y, z, e, a, b_factor, dpa, dua } = base;
        Ok(MateCoefficients { y, z, e, a, b_factor, dpa, dua, dppa: sym })
    }
}
