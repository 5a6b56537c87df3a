use super::coefficients::dpa_from_jet;
use super::tilde::{chart_geometry, pull_back};
use super::{GenFun, GenFunError, PhasePoint};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

/// Threshold separating the A3, A3w and failing verdicts.
pub const A3_TOL: f64 = 1e-8;
const DEFAULT_PAIRS: usize = 16;
/// Fraction of each box side kept clear of the boundary when sampling.
const MARGIN: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum A3Verdict {
    /// Strictly positive on orthogonal unit pairs.
    A3,
    /// Nonnegative within tolerance.
    A3w,
    Fail,
}

impl std::fmt::Display for A3Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            A3Verdict::A3 => "A3",
            A3Verdict::A3w => "A3w",
            A3Verdict::Fail => "FAIL",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct A3Report {
    pub c_min: f64,
    pub verdict: A3Verdict,
    pub argmin_q: PhasePoint,
    pub argmin_xi: Vec<f64>,
    pub argmin_eta: Vec<f64>,
    pub samples: usize,
    pub pairs: usize,
}

/// Random orthonormal pair `(ξ, η)` in `R^n`.
pub(crate) fn orthonormal_pair(n: usize, rng: &mut impl Rng) -> (Vec<f64>, Vec<f64>) {
    loop {
        let a: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let b: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let na = a.iter().map(|v| v * v).sum::<f64>().sqrt();
        if na < 1e-8 {
            continue;
        }
        let xi: Vec<f64> = a.iter().map(|v| v / na).collect();
        let dot: f64 = xi.iter().zip(&b).map(|(p, q)| p * q).sum();
        let eta: Vec<f64> = b.iter().zip(&xi).map(|(q, p)| q - dot * p).collect();
        let ne = eta.iter().map(|v| v * v).sum::<f64>().sqrt();
        if ne < 1e-8 {
            continue;
        }
        return (xi, eta.iter().map(|v| v / ne).collect());
    }
}

fn inner(iv: &crate::gfdsl::Interval, t: f64) -> f64 {
    let w = iv.width();
    iv.lo + MARGIN * w + (1.0 - 2.0 * MARGIN) * w * t
}

/// Sample points `(x, y, z)` in the interior of Γ, away from the diagonal
/// exclusion zone, and return the phase points `(x, g, g_x)` they generate
/// together with the generating `(y, z)`.
pub fn sample_phase_points(
    gf: &GenFun,
    samples: usize,
    seed: u64,
) -> Result<Vec<(PhasePoint, Vec<f64>, f64)>, GenFunError> {
    let n = gf.n();
    let d = gf.domain();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(samples);
    let pad = 1.05;
    while out.len() < samples {
        let x: Vec<f64> = d.u_box.iter().map(|iv| inner(iv, rng.random())).collect();
        let y: Vec<f64> = d.v_box.iter().map(|iv| inner(iv, rng.random())).collect();
        let z = inner(&d.z_interval, rng.random());
        let dist = x.iter().zip(&y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        if d.diagonal_exclusion_radius > 0.0 && dist < pad * d.diagonal_exclusion_radius {
            continue;
        }
        let jet = gf.newton_jet(&x, &y, z)?;
        out.push((PhasePoint::new(x, jet.g, jet.gx[..n].to_vec()), y, z));
    }
    Ok(out)
}

/// Sampled A3 check with the default 16 direction pairs per phase point.
pub fn check_a3(gf: &GenFun, samples: usize, seed: u64) -> Result<A3Report, GenFunError> {
    check_a3_pairs(gf, samples, DEFAULT_PAIRS, seed)
}

/// Minimum of `D_pp A_ijkl ξ_i ξ_j η_k η_l` over sampled phase points and
/// orthonormal pairs.
pub fn check_a3_pairs(gf: &GenFun, samples: usize, pairs: usize, seed: u64) -> Result<A3Report, GenFunError> {
    assert!(samples >= 1 && pairs >= 1, "check_a3 needs at least one sample and one pair");
    let n = gf.n();
    let points = sample_phase_points(gf, samples, seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9E37_79B9_7F4A_7C15);
    let dirs: Vec<Vec<(Vec<f64>, Vec<f64>)>> =
        (0..samples).map(|_| (0..pairs).map(|_| orthonormal_pair(n, &mut rng)).collect()).collect();
    let values: Vec<Result<Vec<f64>, GenFunError>> = points
        .par_iter()
        .zip(dirs.par_iter())
        .map(|((q, y, z), ds)| {
            let c = gf.coefficients(q, Some((y, *z)))?;
            Ok(ds.iter().map(|(xi, eta)| c.dppa.contract(xi, xi, eta, eta) + 0.0).collect())
        })
        .collect();
    let mut best = (f64::INFINITY, 0, 0);
    for (s, v) in values.into_iter().enumerate() {
        for (k, c) in v?.into_iter().enumerate() {
            if c < best.0 {
                best = (c, s, k);
            }
        }
    }
    let (c_min, s, k) = best;
    let verdict = if c_min > A3_TOL {
        A3Verdict::A3
    } else if c_min.abs() <= A3_TOL {
        A3Verdict::A3w
    } else {
        A3Verdict::Fail
    };
    Ok(A3Report {
        c_min,
        verdict,
        argmin_q: points[s].0.clone(),
        argmin_xi: dirs[s][k].0.clone(),
        argmin_eta: dirs[s][k].1.clone(),
        samples,
        pairs,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct A1StarReport {
    /// No collision found. Sampling evidence only, not a proof.
    pub injective: bool,
    /// `(x1, x2, y, z)` with `g_y/g_z(x1) ≈ g_y/g_z(x2)` when a collision exists.
    pub witness: Option<(Vec<f64>, Vec<f64>, Vec<f64>, f64)>,
    pub samples: usize,
    pub grid_points: usize,
}

/// Check injectivity of `x ↦ g_y/g_z(x, y, z)` over an x-lattice of U for
/// sampled `(y, z)`.
pub fn check_a1star(gf: &GenFun, samples: usize, seed: u64) -> Result<A1StarReport, GenFunError> {
    let n = gf.n();
    let d = gf.domain();
    let m = ((300f64).powf(1.0 / n as f64).floor() as usize).max(3);
    let total = m.pow(n as u32);
    let xs: Vec<Vec<f64>> = (0..total)
        .map(|code| {
            let mut c = code;
            d.u_box
                .iter()
                .map(|iv| {
                    let k = c % m;
                    c /= m;
                    iv.lo + iv.width() * k as f64 / (m - 1) as f64
                })
                .collect()
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..samples {
        let y: Vec<f64> = d.v_box.iter().map(|iv| inner(iv, rng.random())).collect();
        let z = inner(&d.z_interval, rng.random());
        let mut imgs: Vec<(usize, Vec<f64>)> = Vec::with_capacity(total);
        for (k, x) in xs.iter().enumerate() {
            if !d.off_diagonal(x, &y) {
                continue;
            }
            let jet = gf.newton_jet(x, &y, z)?;
            imgs.push((k, jet.gy.iter().map(|v| v / jet.gz).collect()));
        }
        for a in 0..imgs.len() {
            for b in a + 1..imgs.len() {
                let dist = imgs[a].1.iter().zip(&imgs[b].1).fold(0.0f64, |m, (p, q)| m.max((p - q).abs()));
                if dist <= 1e-10 {
                    return Ok(A1StarReport {
                        injective: false,
                        witness: Some((xs[imgs[a].0].clone(), xs[imgs[b].0].clone(), y, z)),
                        samples,
                        grid_points: total,
                    });
                }
            }
        }
    }
    Ok(A1StarReport { injective: true, witness: None, samples, grid_points: total })
}

/// Coordinates in which the vanishing contraction is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Chart {
    Raw,
    /// `x̃ = g_y/g_z(x, y₀, z_h)`.
    Tilde,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VanishingReport {
    pub max_defect: f64,
    pub argmax_x: Vec<f64>,
    pub samples: usize,
}

/// Max over sampled `x` in `B_radius(x₀) ∩ U` and orthonormal `ξ ⊥ η` of
/// `|D_{p_k} A_ij(x, g_h(x), Dg_h(x)) ξ_i ξ_j η_k|` where `g_h = g(·, y₀, z_h)`.
///
/// At that phase point `(Y, Z) = (y₀, z_h)` by construction, so no solve is
/// needed. With [`Chart::Tilde`] the jet is pulled back to the `x̃` chart
/// anchored at `(y₀, z_h)` before contracting.
#[allow(clippy::too_many_arguments)]
pub fn verify_orthogonal_vanishing(
    gf: &GenFun,
    x0: &[f64],
    y0: &[f64],
    z_h: f64,
    radius: f64,
    samples: usize,
    seed: u64,
    chart: Chart,
) -> Result<VanishingReport, GenFunError> {
    let n = gf.n();
    let d = gf.domain();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = (0.0f64, x0.to_vec());
    let mut taken = 0;
    let mut attempts = 0;
    while taken < samples {
        attempts += 1;
        if attempts > 100 * samples + 1000 {
            break;
        }
        let x: Vec<f64> = x0.iter().map(|c| c + radius * (2.0 * rng.random::<f64>() - 1.0)).collect();
        let r2: f64 = x.iter().zip(x0).map(|(a, b)| (a - b) * (a - b)).sum();
        if r2 > radius * radius || !d.in_u(&x, 0.0) || !d.off_diagonal(&x, y0) {
            continue;
        }
        taken += 1;
        let mut jet = gf.jet(&x, y0, z_h)?;
        if chart == Chart::Tilde {
            let geo = chart_geometry(&jet).ok_or(GenFunError::SingularE { det: 0.0 })?;
            jet = pull_back(&jet, &geo);
        }
        let e = jet.e_matrix();
        let det = e.determinant();
        let e_inv = e.try_inverse().ok_or(GenFunError::SingularE { det })?;
        let dpa = dpa_from_jet(&jet, &e_inv);
        for _ in 0..DEFAULT_PAIRS {
            let (xi, eta) = orthonormal_pair(n, &mut rng);
            let v = dpa.contract(&xi, &xi, &eta).abs();
            if v > best.0 {
                best = (v, x.clone());
            }
        }
    }
    Ok(VanishingReport { max_defect: best.0, argmax_x: best.1, samples: taken })
}
