use super::GenFun;
use crate::gfdsl::{DomainBox, Interval};

pub const BUILTIN_NAMES: [&str; 3] = ["ma", "qot", "log"];

fn square(n: usize, lo: f64, hi: f64) -> Vec<Interval> {
    vec![Interval::new(lo, hi); n]
}

/// `g = x·y − z`: the classical Monge–Ampère case.
pub fn monge_ampere() -> GenFun {
    let d = DomainBox::new(2, square(2, -1.0, 1.0), square(2, -4.0, 4.0), Interval::new(-50.0, 50.0), Interval::new(-50.0, 50.0), 0.0)
        .expect("static domain");
    GenFun::from_source("ma", "dot(x,y) - z", d).expect("built-in generating function")
}

/// `g = −|x − y|²/2 − z`: optimal transport with quadratic cost.
pub fn quadratic_cost() -> GenFun {
    let d = DomainBox::new(2, square(2, -1.0, 1.0), square(2, -4.0, 4.0), Interval::new(-50.0, 50.0), Interval::new(-50.0, 50.0), 0.0)
        .expect("static domain");
    GenFun::from_source("qot", "-0.5*norm2(x-y) - z", d).expect("built-in generating function")
}

/// `g = log|x − y| − z` on boxes keeping `|x − y| ∈ [0.5, 1.6]`.
///
/// With this sign the orthogonal curvature constant is positive (A3 holds);
/// the opposite sign `−log|x − y| − z` has the negative constant.
pub fn log_reflector() -> GenFun {
    let d = DomainBox::new(
        2,
        square(2, -0.25, 0.25),
        vec![Interval::new(0.75, 1.25), Interval::new(-0.25, 0.25)],
        Interval::new(-10.0, 10.0),
        Interval::new(-10.0, 10.0),
        0.5,
    )
    .expect("static domain");
    GenFun::from_source("log", "log(norm(x-y)) - z", d).expect("built-in generating function")
}

/// Look up a built-in by name (`ma`, `qot`, `log`).
pub fn builtin(name: &str) -> Option<GenFun> {
    match name {
        "ma" => Some(monge_ampere()),
        "qot" => Some(quadratic_cost()),
        "log" => Some(log_reflector()),
        _ => None,
    }
}
