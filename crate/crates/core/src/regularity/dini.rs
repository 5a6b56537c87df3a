use crate::geometry::GridFunction;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Node-pair evaluations above which [`PairMode::Auto`] switches to sampling.
pub const EXHAUSTIVE_BUDGET: usize = 200_000_000;

/// How pairs of nodes are visited when computing the modulus.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairMode {
    /// Every pair within the largest radius.
    Exhaustive,
    /// `pairs` uniformly drawn (node, offset) pairs.
    Sampled { pairs: usize, seed: u64 },
    /// Exhaustive within [`EXHAUSTIVE_BUDGET`], otherwise that many samples.
    Auto { seed: u64 },
}

/// Modulus of continuity `ω(r) = sup_{|x−x'| ≤ r} |f(x) − f(x')|` on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DiniModulus {
    /// Increasing.
    pub radii: Vec<f64>,
    /// Nondecreasing.
    pub omega: Vec<f64>,
    /// `∫ ω(r)/r dr` over `[radii[0], radii[last]]`, trapezoid in `log r`.
    pub integral: f64,
    /// `ω` does not decay toward the smallest radius (`ω(r_min) ≥ ω(r_max)/2`),
    /// the signature of a jump. Slowly divergent moduli such as
    /// `1/log(1/r)` are not detectable from a finite range.
    pub non_dini: bool,
    /// Pairs actually compared.
    pub pairs: usize,
}

impl DiniModulus {
    pub const HEADER: &'static str = "r,omega";

    pub fn csv_rows(&self) -> Vec<String> {
        self.radii.iter().zip(&self.omega).map(|(r, w)| format!("{r:.16e},{w:.16e}")).collect()
    }
}

/// `count` radii log-spaced on `[r_min, r_max]`, increasing.
pub fn log_radii(r_min: f64, r_max: f64, count: usize) -> Vec<f64> {
    assert!(count >= 2 && r_min > 0.0 && r_max > r_min, "need 0 < r_min < r_max and two radii");
    (0..count).map(|i| r_min * (r_max / r_min).powf(i as f64 / (count - 1) as f64)).collect()
}

/// Trapezoid rule for `∫ ω(r)/r dr = ∫ ω d(log r)` on increasing radii.
pub fn dini_integral(radii: &[f64], omega: &[f64]) -> f64 {
    radii
        .windows(2)
        .zip(omega.windows(2))
        .map(|(r, w)| 0.5 * (w[0] + w[1]) * (r[1] / r[0]).ln())
        .sum()
}

/// Modulus of continuity of the grid function `f` at the given increasing
/// radii.
pub fn dini(f: &GridFunction, radii: &[f64], mode: PairMode) -> DiniModulus {
    assert!(!radii.is_empty() && radii.windows(2).all(|w| w[0] < w[1]), "radii must increase");
    let s = f.spec;
    let r_max = *radii.last().unwrap_or(&0.0);
    let w = ((r_max / s.spacing).floor() as isize).min(s.nx.max(s.ny) as isize);
    // Half-plane of offsets, so every unordered pair is seen once.
    let mut offsets: Vec<(isize, isize, f64)> = Vec::new();
    for dj in 0..=w {
        for di in -w..=w {
            if dj == 0 && di <= 0 {
                continue;
            }
            let d = s.spacing * (di as f64).hypot(dj as f64);
            if d <= r_max * (1.0 + 1e-12) {
                offsets.push((di, dj, d));
            }
        }
    }
    let (nx, ny) = (s.nx as isize, s.ny as isize);
    let diff = |i: isize, j: isize, di: isize, dj: isize| -> Option<f64> {
        let (a, b) = (i + di, j + dj);
        (a >= 0 && a < nx && b >= 0 && b < ny)
            .then(|| (f.at(i as usize, j as usize) - f.at(a as usize, b as usize)).abs())
    };
    let total = offsets.len() * s.len();
    let mode = match mode {
        PairMode::Auto { seed } if total > EXHAUSTIVE_BUDGET => PairMode::Sampled { pairs: EXHAUSTIVE_BUDGET, seed },
        PairMode::Auto { .. } => PairMode::Exhaustive,
        m => m,
    };
    let (per_offset, pairs): (Vec<f64>, usize) = match mode {
        PairMode::Sampled { pairs, seed } if !offsets.is_empty() => {
            let mut best = vec![0.0f64; offsets.len()];
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..pairs {
                let o = rng.random_range(0..offsets.len());
                let (i, j) = (rng.random_range(0..s.nx) as isize, rng.random_range(0..s.ny) as isize);
                if let Some(v) = diff(i, j, offsets[o].0, offsets[o].1) {
                    best[o] = best[o].max(v);
                }
            }
            (best, pairs)
        }
        _ => {
            let best = offsets
                .par_iter()
                .map(|&(di, dj, _)| {
                    let mut m = 0.0f64;
                    for j in 0..ny {
                        for i in 0..nx {
                            if let Some(v) = diff(i, j, di, dj) {
                                m = m.max(v);
                            }
                        }
                    }
                    m
                })
                .collect();
            (best, total)
        }
    };
    let mut order: Vec<usize> = (0..offsets.len()).collect();
    order.sort_by(|&a, &b| offsets[a].2.total_cmp(&offsets[b].2));
    let mut omega = Vec::with_capacity(radii.len());
    let (mut cursor, mut running) = (0, 0.0f64);
    for &r in radii {
        while cursor < order.len() && offsets[order[cursor]].2 <= r * (1.0 + 1e-12) {
            running = running.max(per_offset[order[cursor]]);
            cursor += 1;
        }
        omega.push(running);
    }
    let integral = dini_integral(radii, &omega);
    let (first, last) = (omega[0], omega[omega.len() - 1]);
    DiniModulus { radii: radii.to_vec(), non_dini: last > 0.0 && first >= 0.5 * last, omega, integral, pairs }
}
