use super::jet::Jet;
use super::tensor::Tensor3;
use nalgebra::DMatrix;

/// Local geometry of the chart `x ↦ x̃ = g_y/g_z(x, y₀, z_h)` at one point.
#[derive(Debug, Clone)]
pub struct ChartGeometry {
    /// Image point `x̃`.
    pub xt: Vec<f64>,
    /// `∂x̃_a/∂x_b`, equal to `Eᵀ/g_z`.
    pub forward: DMatrix<f64>,
    /// `∂x_a/∂x̃_i`, the inverse of `forward`.
    pub jac: DMatrix<f64>,
    /// `∂²x_k/∂x̃_i∂x̃_j` stored as `[k][i][j]`.
    pub hess: Tensor3,
}

/// Chart geometry from the full jet of `g` at `(x, y₀, z_h)`.
/// Returns `None` when the chart Jacobian is singular.
pub fn chart_geometry(anchor: &Jet) -> Option<ChartGeometry> {
    let n = anchor.n;
    let gz = anchor.gz;
    let xt: Vec<f64> = anchor.gy.iter().map(|v| v / gz).collect();
    // N_ab = g_{b,a} g_z - g_{,a} g_{bz};  ∂x̃_a/∂x_b = N_ab / g_z².
    let num = |a: usize, b: usize| anchor.gxy_at(b, a) * gz - anchor.gy[a] * anchor.gxz[b];
    let forward = DMatrix::from_fn(n, n, |a, b| num(a, b) / (gz * gz));
    let jac = forward.clone().try_inverse()?;
    // S_{a,bc} = ∂_c(N_ab / g_z²).
    let mut s = Tensor3::zeros(n);
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                let dn = anchor.gxxy_at(b, c, a) * gz + anchor.gxy_at(b, a) * anchor.gxz[c]
                    - anchor.gxy_at(c, a) * anchor.gxz[b]
                    - anchor.gy[a] * anchor.gxxz_at(b, c);
                s.set(a, b, c, dn / (gz * gz) - 2.0 * num(a, b) * anchor.gxz[c] / (gz * gz * gz));
            }
        }
    }
    let mut hess = Tensor3::zeros(n);
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let mut acc = 0.0;
                for a in 0..n {
                    for b in 0..n {
                        for c in 0..n {
                            acc += jac[(k, a)] * s.get(a, b, c) * jac[(b, i)] * jac[(c, j)];
                        }
                    }
                }
                hess.set(k, i, j, -acc);
            }
        }
    }
    Some(ChartGeometry { xt, forward, jac, hess })
}

/// Express the jet of `g` at `(x, y, z)` in the chart coordinates `x̃`.
/// `y`- and `z`-only derivatives are unchanged.
pub fn pull_back(jet: &Jet, chart: &ChartGeometry) -> Jet {
    let n = jet.n;
    let j = &chart.jac;
    let h = &chart.hess;
    let mut out = jet.clone();
    for i in 0..n {
        out.gx[i] = (0..n).map(|a| j[(a, i)] * jet.gx[a]).sum();
        out.gxz[i] = (0..n).map(|a| j[(a, i)] * jet.gxz[a]).sum();
        for r in 0..n {
            out.gxy[i * n + r] = (0..n).map(|a| j[(a, i)] * jet.gxy_at(a, r)).sum();
        }
    }
    let second = |ii: usize, jj: usize, f: &dyn Fn(usize, usize) -> f64, lin: &dyn Fn(usize) -> f64| {
        let mut acc = 0.0;
        for a in 0..n {
            for b in 0..n {
                acc += j[(a, ii)] * j[(b, jj)] * f(a, b);
            }
        }
        for k in 0..n {
            acc += h.get(k, ii, jj) * lin(k);
        }
        acc
    };
    if !jet.gxx.is_empty() {
        for ii in 0..n {
            for jj in 0..n {
                out.gxx[ii * n + jj] = second(ii, jj, &|a, b| jet.gxx_at(a, b), &|k| jet.gx[k]);
                out.gxxz[ii * n + jj] = second(ii, jj, &|a, b| jet.gxxz_at(a, b), &|k| jet.gxz[k]);
                for r in 0..n {
                    out.gxxy[(ii * n + jj) * n + r] =
                        second(ii, jj, &|a, b| jet.gxxy_at(a, b, r), &|k| jet.gxy_at(k, r));
                }
            }
        }
    }
    out
}
