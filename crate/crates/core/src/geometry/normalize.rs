use super::{min_ellipsoid, Ellipsoid, GeometryError, GridFunction, GridSpec, Section, TildeMap};
use crate::genfun::{GenFun, PhasePoint};
use nalgebra::{Matrix2, Vector2};

/// A section mapped onto the unit ball.
///
/// With `x̃ = c + L x̄` (`L = R diag(r)` the minimum ellipse of the section in
/// `x̃` coordinates) the normalized function is
/// `v(x̄) = [u(x) − g(x, y₀, z_h)] / h`, which vanishes on the boundary of
/// `U = L⁻¹(S̃_h − c)` and satisfies `B_{1/n} ⊂ U ⊂ B₁`.
#[derive(Debug, Clone)]
pub struct Normalized<'a> {
    gf: &'a GenFun,
    pub h: f64,
    pub y0: Vec<f64>,
    pub z_h: f64,
    pub ellipse: Ellipsoid,
    pub center: Vector2<f64>,
    pub frame: Matrix2<f64>,
    pub frame_inv: Matrix2<f64>,
    /// `v` on `[−1, 1]²`; entries with `valid = false` could not be mapped
    /// back into the grid of `u` and hold zero.
    pub v: GridFunction,
    pub valid: Vec<bool>,
    /// Raw point `x` behind each node of `v`.
    pub raw: Vec<[f64; 2]>,
    /// `inf_U v`.
    pub inf_v: f64,
    /// `(min, max)` of `|g_z|` over the section boundary.
    pub gz_bounds: (f64, f64),
}

/// Normalize `section` of `u` onto an `n_bar × n_bar` grid of `[−1, 1]²`.
pub fn normalize<'a>(u: &GridFunction, gf: &'a GenFun, section: &Section, n_bar: usize) -> Result<Normalized<'a>, GeometryError> {
    let tilde = section.boundary_tilde(gf)?;
    let ellipse = min_ellipsoid(&tilde.iter().map(|p| p.to_vec()).collect::<Vec<_>>())?;
    let fr = ellipse.frame();
    let frame = Matrix2::new(fr[(0, 0)], fr[(0, 1)], fr[(1, 0)], fr[(1, 1)]);
    let frame_inv = frame.try_inverse().ok_or(GeometryError::DegenerateInput { what: "flat ellipse".into() })?;
    let center = Vector2::new(ellipse.center[0], ellipse.center[1]);
    let z_h = section.z_h();
    let h = section.h;
    let chart = TildeMap::new(gf, &section.y0, z_h);

    let spec = GridSpec::square(-1.0, 1.0, n_bar);
    let mut values = vec![0.0; spec.len()];
    let mut valid = vec![false; spec.len()];
    let mut raw = vec![[f64::NAN; 2]; spec.len()];
    let mut seed: Option<Vec<f64>> = Some(section.x0.to_vec());
    for j in 0..spec.ny {
        for i in 0..spec.nx {
            let k = spec.index(i, j);
            let xb = spec.point(i, j);
            let xt = center + frame * Vector2::new(xb[0], xb[1]);
            let x = match chart.inverse(xt.as_slice(), seed.as_deref()) {
                Ok(x) => x,
                Err(_) => match chart.inverse(xt.as_slice(), Some(&section.x0)) {
                    Ok(x) => x,
                    Err(_) => continue,
                },
            };
            let Ok(uv) = u.interpolate([x[0], x[1]]) else { continue };
            values[k] = (uv - gf.g(&x, &section.y0, z_h)?) / h;
            valid[k] = true;
            raw[k] = [x[0], x[1]];
            seed = Some(x);
        }
        // Restart each row from the row start for robustness.
        let k0 = spec.index(0, j);
        seed = if valid[k0] { Some(raw[k0].to_vec()) } else { Some(section.x0.to_vec()) };
    }
    let inf_v = values.iter().zip(&valid).filter(|(_, &ok)| ok).fold(f64::INFINITY, |m, (v, _)| m.min(*v));
    let mut gz_bounds = (f64::INFINITY, 0.0f64);
    for p in &section.boundary {
        let gz = gf.newton_jet(p, &section.y0, z_h)?.gz.abs();
        gz_bounds = (gz_bounds.0.min(gz), gz_bounds.1.max(gz));
    }
    let v = GridFunction { spec, values };
    Ok(Normalized { gf, h, y0: section.y0.clone(), z_h, ellipse, center, frame, frame_inv, v, valid, raw, inf_v, gz_bounds })
}

impl Normalized<'_> {
    fn chart(&self) -> TildeMap<'_> {
        TildeMap::new(self.gf, &self.y0, self.z_h)
    }

    pub fn to_bar(&self, x: [f64; 2]) -> Result<[f64; 2], GeometryError> {
        let t = self.chart().forward(&x)?;
        let b = self.frame_inv * (Vector2::new(t[0], t[1]) - self.center);
        Ok([b[0], b[1]])
    }

    pub fn from_bar(&self, xb: [f64; 2]) -> Result<[f64; 2], GeometryError> {
        let (i, j) = self.v.spec.nearest(xb);
        let k = self.v.spec.index(i, j);
        let seed = self.valid[k].then(|| self.raw[k].to_vec());
        let xt = self.center + self.frame * Vector2::new(xb[0], xb[1]);
        let x = self.chart().inverse(xt.as_slice(), seed.as_deref())?;
        Ok([x[0], x[1]])
    }

    /// Whether every node of the interpolation stencil around `xb` is valid.
    fn stencil_valid(&self, xb: [f64; 2]) -> bool {
        let s = &self.v.spec;
        if !s.contains(xb) {
            return false;
        }
        let (ci, cj) = s.nearest(xb);
        (cj.saturating_sub(2)..=(cj + 2).min(s.ny - 1))
            .all(|j| (ci.saturating_sub(2)..=(ci + 2).min(s.nx - 1)).all(|i| self.valid[s.index(i, j)]))
    }

    /// Reconstruct `u(x) = g(x, y₀, z_h) + h v(x̄)`.
    pub fn denormalize(&self, x: [f64; 2]) -> Result<f64, GeometryError> {
        let xb = self.to_bar(x)?;
        if !self.stencil_valid(xb) {
            return Err(GeometryError::InterpolationOutOfRange { at: xb });
        }
        Ok(self.gf.g(&x, &self.y0, self.z_h)? + self.h * self.v.interpolate(xb)?)
    }

    /// `(Ā, B̄)` of the normalized equation `det[D²v − Ā] = B̄` at `x̄` for
    /// the state `(v, p̄)` and density `f` in raw coordinates.
    pub fn coefficients(
        &self,
        xb: [f64; 2],
        v: f64,
        pbar: [f64; 2],
        f: &dyn Fn([f64; 2]) -> f64,
    ) -> Result<(Matrix2<f64>, f64), GeometryError> {
        let gf = self.gf;
        let x = self.from_bar(xb)?;
        let geo = self.chart().geometry(&x)?;
        let jac = Matrix2::new(geo.jac[(0, 0)], geo.jac[(0, 1)], geo.jac[(1, 0)], geo.jac[(1, 1)]);
        let fwd = Matrix2::new(geo.forward[(0, 0)], geo.forward[(0, 1)], geo.forward[(1, 0)], geo.forward[(1, 1)]);
        let anchor = gf.newton_jet(&x, &self.y0, self.z_h)?;
        // p_raw − g_x(x, y₀, z_h) = h J⁻ᵀ L⁻ᵀ p̄ with J⁻¹ = forward.
        let dp = self.h * fwd.transpose() * self.frame_inv.transpose() * Vector2::new(pbar[0], pbar[1]);
        let p_raw = vec![anchor.gx[0] + dp[0], anchor.gx[1] + dp[1]];
        let u_raw = anchor.g + self.h * v;
        let (y, z) = gf.solve_yz(&PhasePoint::new(x.to_vec(), u_raw, p_raw), Some((&self.y0, self.z_h)))?;
        let a_raw = gf.gxx(&x, &y, z)?;
        let g0 = gf.gxx(&x, &self.y0, self.z_h)?;
        let diff = Matrix2::new(a_raw[(0, 0)] - g0[(0, 0)], a_raw[(0, 1)] - g0[(0, 1)], a_raw[(1, 0)] - g0[(1, 0)], a_raw[(1, 1)] - g0[(1, 1)]);
        let mut d = jac.transpose() * diff * jac;
        for a in 0..2 {
            for b in 0..2 {
                d[(a, b)] += (0..2).map(|k| dp[k] * geo.hess.get(k, a, b)).sum::<f64>();
            }
        }
        let abar = self.frame.transpose() * d * self.frame / self.h;
        let det_e = gf.newton_jet(&x, &y, z)?.e_matrix().determinant().abs();
        let bbar = self.frame.determinant().powi(2) * jac.determinant().powi(2) * det_e * f(x) / (self.h * self.h);
        Ok((abar, bbar))
    }

    /// `max |det[D²v − Ā] − B̄|` over nodes whose 3×3 stencil lies in `U`,
    /// using central differences of the stored `v`.
    pub fn equation_residual(&self, f: &dyn Fn([f64; 2]) -> f64) -> Result<f64, GeometryError> {
        let s = self.v.spec;
        let mut worst = 0.0f64;
        for j in 1..s.ny - 1 {
            for i in 1..s.nx - 1 {
                let inside = (j - 1..=j + 1).all(|jj| (i - 1..=i + 1).all(|ii| {
                    let k = s.index(ii, jj);
                    self.valid[k] && self.v.values[k] < 0.0
                }));
                if !inside {
                    continue;
                }
                let d2 = self.v.hessian(i, j);
                let (a, b) = self.coefficients(s.point(i, j), self.v.at(i, j), self.v.gradient(i, j), f)?;
                worst = worst.max(((d2 - a).determinant() - b).abs());
            }
        }
        Ok(worst)
    }
}
