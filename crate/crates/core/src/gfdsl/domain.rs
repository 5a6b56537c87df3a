use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DomainError {
    #[error("dimension must be at least 2, got {0}")]
    DimensionTooSmall(usize),
    #[error("{name} has {got} axes, expected {want}")]
    AxisCount { name: &'static str, got: usize, want: usize },
    #[error("{name} axis {axis} is empty: [{lo}, {hi}]")]
    EmptyInterval { name: &'static str, axis: usize, lo: f64, hi: f64 },
    #[error("diagonal exclusion radius must be finite and nonnegative, got {0}")]
    BadExclusion(f64),
}

/// Closed interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Interval {
        Interval { lo, hi }
    }

    pub fn center(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, t: f64, slack: f64) -> bool {
        t >= self.lo - slack && t <= self.hi + slack
    }
}

/// The uniform box `Γ = U × V × I` on which a generating function is declared,
/// plus the admissible value range `J` and an exclusion radius around the
/// diagonal `x = y` for generating functions singular there.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainBox {
    n: usize,
    pub u_box: Vec<Interval>,
    pub v_box: Vec<Interval>,
    pub z_interval: Interval,
    pub j_interval: Interval,
    pub diagonal_exclusion_radius: f64,
}

fn check_box(name: &'static str, b: &[Interval], n: usize) -> Result<(), DomainError> {
    if b.len() != n {
        return Err(DomainError::AxisCount { name, got: b.len(), want: n });
    }
    for (axis, iv) in b.iter().enumerate() {
        if !(iv.lo < iv.hi) {
            return Err(DomainError::EmptyInterval { name, axis, lo: iv.lo, hi: iv.hi });
        }
    }
    Ok(())
}

impl DomainBox {
    pub fn new(
        n: usize,
        u_box: Vec<Interval>,
        v_box: Vec<Interval>,
        z_interval: Interval,
        j_interval: Interval,
        diagonal_exclusion_radius: f64,
    ) -> Result<DomainBox, DomainError> {
        if n < 2 {
            return Err(DomainError::DimensionTooSmall(n));
        }
        check_box("U_box", &u_box, n)?;
        check_box("V_box", &v_box, n)?;
        check_box("z_interval", &[z_interval], 1)?;
        check_box("J_interval", &[j_interval], 1)?;
        if !(diagonal_exclusion_radius >= 0.0 && diagonal_exclusion_radius.is_finite()) {
            return Err(DomainError::BadExclusion(diagonal_exclusion_radius));
        }
        Ok(DomainBox { n, u_box, v_box, z_interval, j_interval, diagonal_exclusion_radius })
    }

    /// Same square `[lo, hi]^n` for U and V.
    pub fn cube(n: usize, lo: f64, hi: f64, z: Interval) -> Result<DomainBox, DomainError> {
        let b = vec![Interval::new(lo, hi); n];
        DomainBox::new(n, b.clone(), b, z, z, 0.0)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn in_u(&self, x: &[f64], slack: f64) -> bool {
        x.iter().zip(&self.u_box).all(|(t, iv)| iv.contains(*t, slack))
    }

    pub fn in_v(&self, y: &[f64], slack: f64) -> bool {
        y.iter().zip(&self.v_box).all(|(t, iv)| iv.contains(*t, slack))
    }

    pub fn off_diagonal(&self, x: &[f64], y: &[f64]) -> bool {
        if self.diagonal_exclusion_radius == 0.0 {
            return true;
        }
        let d2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
        d2.sqrt() >= self.diagonal_exclusion_radius
    }

    /// Membership of `(x, y, z)` in the closed box Γ̄ (with a relative slack).
    pub fn contains(&self, x: &[f64], y: &[f64], z: f64, slack: f64) -> bool {
        self.in_u(x, slack) && self.in_v(y, slack) && self.z_interval.contains(z, slack) && self.off_diagonal(x, y)
    }

    pub fn v_center(&self) -> Vec<f64> {
        self.v_box.iter().map(Interval::center).collect()
    }

    pub fn u_center(&self) -> Vec<f64> {
        self.u_box.iter().map(Interval::center).collect()
    }
}
