//! Fixtures shared by the criterion benches in `benches/`.

use gjelab_core::genfun::PhasePoint;
use gjelab_core::solver::{DirichletProblem, Rhs};
use gjelab_core::{GenFun, GridFunction, GridSpec};

pub fn half_norm2(x: [f64; 2]) -> f64 {
    0.5 * (x[0] * x[0] + x[1] * x[1])
}

/// `|x|²/2` sampled on `[-1, 1]²`.
pub fn quadratic_grid(n: usize) -> GridFunction {
    GridFunction::from_fn(GridSpec::square(-1.0, 1.0, n), half_norm2).expect("valid grid")
}

/// Points on a rotated ellipse with a deterministic interior scatter.
pub fn ellipse_cloud(m: usize) -> Vec<Vec<f64>> {
    (0..m)
        .map(|i| {
            let t = std::f64::consts::TAU * i as f64 / m as f64;
            let r = if i % 3 == 0 { 0.6 } else { 1.0 };
            let (a, b) = (2.0 * r * t.cos(), 0.5 * r * t.sin());
            vec![0.8 * a - 0.6 * b, 0.6 * a + 0.8 * b]
        })
        .collect()
}

/// A phase point inside the domain of the log reflector built-in.
pub fn reflector_point() -> PhasePoint {
    PhasePoint::new(vec![0.1, -0.05], 0.2, vec![-0.9, 0.1])
}

/// `det D²u = (1 + |x|²) e^{|x|²}` with solution `e^{|x|²/2}` on an `n × n` grid.
pub fn exp_problem(gf: &GenFun, n: usize) -> DirichletProblem<'_> {
    let spec = GridSpec::square(-1.0, 1.0, n);
    let f = |x: [f64; 2]| (1.0 + 2.0 * half_norm2(x)) * (2.0 * half_norm2(x)).exp();
    DirichletProblem::rectangle(gf, spec, |x| half_norm2(x).exp(), Rhs::from_fn(&spec, f))
}
