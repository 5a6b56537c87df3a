use super::RegularityError;
use std::f64::consts::PI;

/// A measure on the plane queried through the masses of balls.
pub trait BallMeasure {
    fn ball(&self, x: [f64; 2], eps: f64) -> f64;
}

/// Lebesgue measure.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Lebesgue;

impl BallMeasure for Lebesgue {
    fn ball(&self, _x: [f64; 2], eps: f64) -> f64 {
        PI * eps * eps
    }
}

/// Unit point mass at `at`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointMass {
    pub at: [f64; 2],
}

impl BallMeasure for PointMass {
    fn ball(&self, x: [f64; 2], eps: f64) -> f64 {
        if (x[0] - self.at[0]).hypot(x[1] - self.at[1]) <= eps {
            1.0
        } else {
            0.0
        }
    }
}

/// Density `|x − center|^{−s}`, `0 ≤ s < 2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialPower {
    pub center: [f64; 2],
    pub s: f64,
}

impl BallMeasure for RadialPower {
    fn ball(&self, x: [f64; 2], eps: f64) -> f64 {
        let s = self.s;
        let d = (x[0] - self.center[0]).hypot(x[1] - self.center[1]);
        let e = 2.0 - s;
        if d == 0.0 {
            return 2.0 * PI * eps.powf(e) / e;
        }
        // Polar coordinates around the centre: the circle of radius ρ meets
        // the ball in an arc of angle θ(ρ). With t = ρ^{2−s} the weight
        // ρ^{1−s} dρ becomes dt/(2−s), removing the singularity.
        let arc = |rho: f64| -> f64 {
            if rho + d <= eps {
                2.0 * PI
            } else if rho >= d + eps || rho <= d - eps {
                0.0
            } else {
                2.0 * ((rho * rho + d * d - eps * eps) / (2.0 * rho * d)).clamp(-1.0, 1.0).acos()
            }
        };
        let (t0, t1) = ((d - eps).max(0.0).powf(e), (d + eps).powf(e));
        let m = 4000;
        let dt = (t1 - t0) / m as f64;
        let sum: f64 = (0..m).map(|i| arc((t0 + (i as f64 + 0.5) * dt).powf(1.0 / e))).sum();
        sum * dt / e
    }
}

/// Weighted atoms, e.g. a sampled measure.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct WeightedPoints {
    pub points: Vec<([f64; 2], f64)>,
}

impl BallMeasure for WeightedPoints {
    fn ball(&self, x: [f64; 2], eps: f64) -> f64 {
        self.points.iter().filter(|(p, _)| (p[0] - x[0]).hypot(p[1] - x[1]) <= eps).map(|(_, w)| w).sum()
    }
}

/// Worst ratio `ν(B_ε(x)) / ε^{n(1−1/p)}` over the sampled centres and radii.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasureCheck {
    pub worst_ratio: f64,
    pub worst_at: ([f64; 2], f64),
    /// Largest ratio at the smallest radius over that at the largest.
    pub growth: f64,
    /// Ratios grow by more than a factor 2 as `ε` shrinks.
    pub unbounded: bool,
}

/// Samples the ball-growth condition `ν(B_ε(x)) ≤ C ε^{n(1−1/p)}` in the
/// plane, for `p ∈ (2, ∞]`.
pub fn measure_condition_check(
    nu: &dyn BallMeasure,
    p: f64,
    xs: &[[f64; 2]],
    eps: &[f64],
) -> Result<MeasureCheck, RegularityError> {
    let n = 2.0;
    if p.is_nan() || p <= n {
        return Err(RegularityError::InadmissibleExponent { n: 2, p, bound: n });
    }
    if xs.is_empty() || eps.is_empty() || eps.iter().any(|e| !(*e > 0.0)) {
        return Err(RegularityError::RadiiOrder);
    }
    let power = n * (1.0 - 1.0 / p);
    let mut worst = (f64::NEG_INFINITY, ([0.0; 2], 0.0));
    let (e_min, e_max) = eps.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &e| (a.min(e), b.max(e)));
    let (mut at_min, mut at_max) = (0.0f64, 0.0f64);
    for &x in xs {
        for &e in eps {
            let r = nu.ball(x, e) / e.powf(power);
            if r > worst.0 {
                worst = (r, (x, e));
            }
            if e == e_min {
                at_min = at_min.max(r);
            }
            if e == e_max {
                at_max = at_max.max(r);
            }
        }
    }
    let growth = if at_max > 0.0 {
        at_min / at_max
    } else if at_min > 0.0 {
        f64::INFINITY
    } else {
        1.0
    };
    Ok(MeasureCheck { worst_ratio: worst.0, worst_at: worst.1, growth, unbounded: growth > 2.0 })
}
