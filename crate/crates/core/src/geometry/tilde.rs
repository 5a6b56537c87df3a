use super::GeometryError;
use crate::genfun::{chart_geometry, ChartGeometry, GenFun};
use nalgebra::{DMatrix, DVector};

/// The chart `x ↦ x̃ = g_y/g_z(x, y₀, z_h)` anchored at a support.
#[derive(Debug, Clone)]
pub struct TildeMap<'a> {
    pub gf: &'a GenFun,
    pub y0: Vec<f64>,
    pub z_h: f64,
}

const INVERSE_TOL: f64 = 1e-13;

impl<'a> TildeMap<'a> {
    pub fn new(gf: &'a GenFun, y0: &[f64], z_h: f64) -> TildeMap<'a> {
        TildeMap { gf, y0: y0.to_vec(), z_h }
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>, GeometryError> {
        let jet = self.gf.newton_jet(x, &self.y0, self.z_h)?;
        Ok(jet.gy.iter().map(|v| v / jet.gz).collect())
    }

    /// `∂x̃/∂x = Eᵀ / g_z` at `x`.
    pub fn jacobian(&self, x: &[f64]) -> Result<DMatrix<f64>, GeometryError> {
        let jet = self.gf.newton_jet(x, &self.y0, self.z_h)?;
        Ok(jet.e_matrix().transpose() / jet.gz)
    }

    /// Full local geometry including second derivatives of the inverse.
    pub fn geometry(&self, x: &[f64]) -> Result<ChartGeometry, GeometryError> {
        let jet = self.gf.jet(x, &self.y0, self.z_h)?;
        chart_geometry(&jet).ok_or(GeometryError::InverseNoConvergence { target: jet.gy.clone() })
    }

    /// Solve `forward(x) = xt` by damped Newton starting from `seed`
    /// (default: the centre of U).
    pub fn inverse(&self, xt: &[f64], seed: Option<&[f64]>) -> Result<Vec<f64>, GeometryError> {
        let d = self.gf.domain();
        let mut x = seed.map(|s| s.to_vec()).unwrap_or_else(|| d.u_center());
        let fail = || GeometryError::InverseNoConvergence { target: xt.to_vec() };
        let scale = 1.0 + xt.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let resid = |x: &[f64]| -> Result<(Vec<f64>, f64), GeometryError> {
            let f = self.forward(x)?;
            let r: Vec<f64> = f.iter().zip(xt).map(|(a, b)| a - b).collect();
            let m = r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            Ok((r, m))
        };
        let (mut r, mut res) = resid(&x).map_err(|_| fail())?;
        for _ in 0..60 {
            if res <= INVERSE_TOL * scale {
                return Ok(x);
            }
            let jm = self.jacobian(&x)?;
            let step = jm.lu().solve(&(-DVector::from_vec(r.clone()))).ok_or_else(fail)?;
            let mut t = 1.0;
            let mut ok = false;
            for _ in 0..30 {
                let xc: Vec<f64> = x.iter().zip(step.iter()).map(|(a, s)| a + t * s).collect();
                if d.off_diagonal(&xc, &self.y0) {
                    if let Ok((rc, mc)) = resid(&xc) {
                        if mc < res {
                            x = xc;
                            r = rc;
                            res = mc;
                            ok = true;
                            break;
                        }
                    }
                }
                t *= 0.5;
            }
            if !ok {
                break;
            }
        }
        if res <= INVERSE_TOL * scale * 10.0 {
            Ok(x)
        } else {
            Err(fail())
        }
    }
}

/// Map points to `x̃` coordinates relative to `(y₀, z_h)`.
pub fn to_tilde(points: &[Vec<f64>], gf: &GenFun, y0: &[f64], z_h: f64) -> Result<Vec<Vec<f64>>, GeometryError> {
    let m = TildeMap::new(gf, y0, z_h);
    points.iter().map(|p| m.forward(p)).collect()
}

/// Inverse of [`to_tilde`]; each solve is seeded with the previous result.
pub fn from_tilde(points: &[Vec<f64>], gf: &GenFun, y0: &[f64], z_h: f64) -> Result<Vec<Vec<f64>>, GeometryError> {
    let m = TildeMap::new(gf, y0, z_h);
    let mut seed: Option<Vec<f64>> = None;
    let mut out = Vec::with_capacity(points.len());
    for p in points {
        let x = match m.inverse(p, seed.as_deref()) {
            Ok(x) => x,
            Err(_) if seed.is_some() => m.inverse(p, None)?,
            Err(e) => return Err(e),
        };
        seed = Some(x.clone());
        out.push(x);
    }
    Ok(out)
}
