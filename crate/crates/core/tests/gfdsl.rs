use gjelab_core::genfun;
use gjelab_core::gfdsl::{deriv, deriv_in_order, eval_flat, parse, Expr, Var};
use gjelab_core::GenFun;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const STEP: f64 = 1e-4;

fn vars2() -> Vec<Var> {
    vec![Var::X(0), Var::X(1), Var::Y(0), Var::Y(1), Var::Z]
}

fn random_point(gf: &GenFun, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let d = gf.domain();
    loop {
        let mut p: Vec<f64> = d.u_box.iter().map(|iv| rng.random_range(iv.lo..iv.hi)).collect();
        p.extend(d.v_box.iter().map(|iv| rng.random_range(iv.lo..iv.hi)));
        p.push(rng.random_range(d.z_interval.lo..d.z_interval.hi));
        if d.off_diagonal(&p[..2], &p[2..4]) {
            return p;
        }
    }
}

fn shifted(p: &[f64], v: Var, h: f64) -> Vec<f64> {
    let mut q = p.to_vec();
    q[v.slot(2)] += h;
    q
}

/// Central difference of `e` in `v`, compared with the symbolic derivative
/// to `10 step² M + roundoff`, `M` bounding third derivatives along `v` of `g`.
fn check_fd(g: &Expr, base: &Expr, v: Var, sym: &Expr, p: &[f64], third: f64) {
    let fp = eval_flat(base, &shifted(p, v, STEP)).unwrap();
    let fm = eval_flat(base, &shifted(p, v, -STEP)).unwrap();
    let fd = (fp - fm) / (2.0 * STEP);
    let exact = eval_flat(sym, p).unwrap();
    // Rounding in the two evaluations (intermediates of the built-ins are at
    // most quadratic in the coordinates) and in forming `p ± step`.
    let eps = f64::EPSILON;
    let scale = p.iter().fold(1.0f64, |m, t| m.max(t.abs()));
    let inter = fp.abs() + fm.abs() + scale * scale;
    let round = 4.0 * eps * (inter / (2.0 * STEP) + p[v.slot(2)].abs() * exact.abs() / STEP);
    let tol = 10.0 * STEP * STEP * third.max(1e-300) + round;
    assert!((fd - exact).abs() <= tol, "{g}: d/d{v} fd={fd} sym={exact} tol={tol} at {p:?}");
}

fn third_bound(g: &Expr, idx: &[Var], p: &[f64]) -> f64 {
    eval_flat(&deriv(g, idx).unwrap(), p).unwrap().abs()
}

#[test]
fn derivatives_match_finite_differences_on_builtins() {
    for gf in [genfun::monge_ampere(), genfun::quadratic_cost(), genfun::log_reflector()] {
        let g = gf.expr().clone();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let vs = vars2();
        let firsts: Vec<Expr> = vs.iter().map(|v| deriv(&g, &[*v]).unwrap()).collect();
        for _ in 0..1000 {
            let p = random_point(&gf, &mut rng);
            for (a, va) in vs.iter().enumerate() {
                let m = third_bound(&g, &[*va, *va, *va], &p);
                check_fd(&g, &g, *va, &firsts[a], &p, m);
                for vb in &vs {
                    let second = deriv(&g, &[*va, *vb]).unwrap();
                    let m = third_bound(&g, &[*va, *vb, *vb, *vb], &p).max(third_bound(&g, &[*va, *vb, *vb], &p));
                    check_fd(&g, &firsts[a], *vb, &second, &p, m);
                }
            }
        }
    }
}

#[test]
fn print_parse_print_is_idempotent_on_builtins() {
    for gf in [genfun::monge_ampere(), genfun::quadratic_cost(), genfun::log_reflector()] {
        let once = gf.expr().to_string();
        let twice = parse(&once, 2).unwrap().to_string();
        assert_eq!(once, twice);
        for idx in [vec![Var::X(0), Var::Y(1)], vec![Var::X(0), Var::X(1), Var::Y(0), Var::Z]] {
            let d = deriv(gf.expr(), &idx).unwrap();
            let s = d.to_string();
            assert_eq!(parse(&s, 2).unwrap().to_string(), s);
        }
    }
}

fn any_var() -> impl Strategy<Value = Var> {
    prop_oneof![
        (0..2usize).prop_map(Var::X),
        (0..2usize).prop_map(Var::Y),
        Just(Var::Z),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 256, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn clairaut_symmetry(a in any_var(), b in any_var(), c in any_var(), seed in 0u64..1000) {
        let gf = genfun::log_reflector();
        let g = gf.expr();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = random_point(&gf, &mut rng);
        let ab = eval_flat(&deriv_in_order(g, &[a, b, c]).unwrap(), &p).unwrap();
        let ba = eval_flat(&deriv_in_order(g, &[c, b, a]).unwrap(), &p).unwrap();
        let scale = 1.0 + ab.abs();
        prop_assert!((ab - ba).abs() <= 1e-12 * scale, "{} vs {}", ab, ba);
    }

    #[test]
    fn sorted_derivative_is_permutation_invariant(a in any_var(), b in any_var(), c in any_var()) {
        let g = genfun::log_reflector().expr().clone();
        prop_assert_eq!(deriv(&g, &[a, b, c]).unwrap(), deriv(&g, &[c, a, b]).unwrap());
    }

    #[test]
    fn random_expressions_round_trip(
        c1 in -3.0..3.0f64,
        c2 in 0.1..4.0f64,
        k in 1usize..4,
        pick in 0usize..6,
    ) {
        let atoms = ["x[0]", "y[1]", "z", "norm2(x-y)", "dot(x, y)", "exp(x[1]*z)"];
        let src = format!("{c1:?} * {} - ({}) / {c2:?} + {}^{k}", atoms[pick], atoms[(pick + 1) % 6], atoms[(pick + 2) % 6]);
        let e = parse(&src, 2).unwrap();
        let again = parse(&e.to_string(), 2).unwrap();
        prop_assert_eq!(&e, &again);
        prop_assert_eq!(e.to_string(), again.to_string());
    }
}
