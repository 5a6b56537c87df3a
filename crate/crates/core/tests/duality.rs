use gjelab_core::duality::{
    double_transform, double_transform_check, dual_grid, g_star_transform, gen_exp_normal_form, z_inverse, DualityError,
    NormalForm,
};
use gjelab_core::genfun::{log_reflector, monge_ampere, quadratic_cost};
use gjelab_core::{GridFunction, GridSpec};
use proptest::prelude::*;

fn sampled(spec: GridSpec, u: impl Fn([f64; 2]) -> f64) -> GridFunction {
    GridFunction::from_fn(spec, u).unwrap()
}

fn half_norm2(x: [f64; 2]) -> f64 {
    0.5 * (x[0] * x[0] + x[1] * x[1])
}

#[test]
fn z_inverse_closed_forms() {
    let (ma, qot) = (monge_ampere(), quadratic_cost());
    for (x, y, u) in [([0.3, -0.2], [1.5, 0.7], 0.4), ([-0.9, 0.1], [-2.0, 3.0], -1.25)] {
        let z = z_inverse(&ma, &x, &y, u).unwrap();
        assert!((z - (x[0] * y[0] + x[1] * y[1] - u)).abs() < 1e-12);
        let z = z_inverse(&qot, &x, &y, u).unwrap();
        assert!((z - (-0.5 * ((x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2)) - u)).abs() < 1e-12);
    }
    assert!(matches!(z_inverse(&ma, &[0.0, 0.0], &[0.0, 0.0], 1e3), Err(DualityError::OutOfRange { .. })));
}

proptest! {
    #[test]
    fn z_inverse_inverts_g(
        which in 0usize..3,
        t in prop::array::uniform5(0.0f64..1.0),
        z in -5.0f64..5.0,
    ) {
        let gf = [monge_ampere(), quadratic_cost(), log_reflector()].into_iter().nth(which).unwrap();
        let d = gf.domain();
        let lerp = |iv: &gjelab_core::Interval, s: f64| iv.lo + s * iv.width();
        let x = [lerp(&d.u_box[0], t[0]), lerp(&d.u_box[1], t[1])];
        let y = [lerp(&d.v_box[0], t[2]), lerp(&d.v_box[1], t[3])];
        let u = gf.g(&x, &y, z).unwrap();
        let zi = z_inverse(&gf, &x, &y, u).unwrap();
        prop_assert!((gf.g(&x, &y, zi).unwrap() - u).abs() <= 1e-12);
        prop_assert!((zi - z).abs() <= 1e-10);
    }
}

#[test]
fn legendre_self_duality_of_half_norm() {
    let gf = monge_ampere();
    let spec = GridSpec::square(-1.0, 1.0, 33);
    let u = sampled(spec, half_norm2);
    let v = g_star_transform(&u, &gf, spec).unwrap();
    for k in 0..spec.len() {
        let y = spec.point_k(k);
        assert!((v.values[k] - half_norm2(y)).abs() < 1e-14);
        // The maximizer of x·y − |x|²/2 is x = y itself.
        assert_eq!(v.back_pointer(k), y);
    }
}

#[test]
fn norm_has_zero_dual_on_unit_ball() {
    let gf = monge_ampere();
    let u = sampled(GridSpec::square(-1.0, 1.0, 65), |x| x[0].hypot(x[1]));
    let y_spec = GridSpec::square(-1.5, 1.5, 61);
    let v = g_star_transform(&u, &gf, y_spec).unwrap();
    for k in 0..y_spec.len() {
        let y = y_spec.point_k(k);
        if y[0].hypot(y[1]) <= 1.0 {
            assert!(v.values[k].abs() < 1e-15, "v({y:?}) = {}", v.values[k]);
        }
    }
    // Axis slice: sup_{|s| ≤ 1} (t s − |s|) = t − 1 for t > 1.
    for i in 0..61 {
        let (k, t) = (y_spec.index(i, 30), y_spec.point(i, 30)[0]);
        if t.abs() > 1.0 {
            assert!((v.values[k] - (t.abs() - 1.0)).abs() < 1e-14);
        }
    }
}

#[test]
fn quadratic_cost_dual_matches_closed_form_and_fine_envelope() {
    let gf = quadratic_cost();
    let y_spec = GridSpec::square(-1.5, 1.5, 31);
    let norm2 = |x: [f64; 2]| x[0] * x[0] + x[1] * x[1];
    let coarse = g_star_transform(&sampled(GridSpec::square(-1.0, 1.0, 65), norm2), &gf, y_spec).unwrap();
    let h: f64 = 2.0 / 64.0;
    // Brute-force envelope on a 4x finer grid containing the coarse nodes.
    let fine_spec = GridSpec::square(-1.0, 1.0, 257);
    for k in (0..y_spec.len()).step_by(37) {
        let y = y_spec.point_k(k);
        let fine = (0..fine_spec.len())
            .map(|j| {
                let x = fine_spec.point_k(j);
                -0.5 * norm2([x[0] - y[0], x[1] - y[1]]) - norm2(x)
            })
            .fold(f64::NEG_INFINITY, f64::max);
        // The maximizer y/3 lies inside the square, so v(y) = −|y|²/3.
        let exact = -norm2(y) / 3.0;
        assert!(coarse.values[k] <= fine + 1e-14 && fine <= exact + 1e-14);
        // Curvature 3 and nodes within h/√2 of y/3: error ≤ (3/2)(h²/2).
        assert!(exact - coarse.values[k] <= 0.75 * h * h + 1e-14);
    }
}

#[test]
fn round_trip_of_half_norm_is_first_order_or_better() {
    let gf = monge_ampere();
    let mut prev = None;
    for n in [17, 33, 65] {
        let u = sampled(GridSpec::square(-1.0, 1.0, n), half_norm2);
        let rt = double_transform_check(&u, &gf).unwrap();
        assert!(rt.defect <= 2.0 * rt.spacing, "n = {n}: defect {}", rt.defect);
        assert!(rt.overshoot <= 1e-14);
        if let Some(p) = prev {
            assert!(rt.defect <= 0.5 * p, "n = {n}: {} after {p}", rt.defect);
        }
        prev = Some(rt.defect);
    }
}

#[test]
fn bump_reports_envelope_gap() {
    let gf = monge_ampere();
    let spec = GridSpec::square(-1.0, 1.0, 33);
    let u = sampled(spec, |x| half_norm2(x) + 0.3 * (-(x[0] * x[0] + x[1] * x[1]) / 0.05).exp());
    let rt = double_transform_check(&u, &gf).unwrap();
    assert!(rt.overshoot <= 1e-14);
    assert!(rt.envelope_gap > 0.1, "gap {}", rt.envelope_gap);
    // The gap sits where convexity fails, around the bump.
    let (i, j) = spec.nearest([0.0, 0.0]);
    assert!(u.at(i, j) - rt.u_hat.at(i, j) > 0.1);
    // Away from it only the O(h²) discretization gap remains.
    assert!(u.at(0, 0) - rt.u_hat.at(0, 0) <= 2.0 * rt.spacing);
}

#[test]
fn double_transform_is_idempotent() {
    let gf = monge_ampere();
    let u = sampled(GridSpec::square(-1.0, 1.0, 25), |x| half_norm2(x) + 0.2 * (5.0 * x[0]).sin() * x[1]);
    let y_spec = dual_grid(&u, &gf).unwrap();
    let u1 = double_transform(&gf, &g_star_transform(&u, &gf, y_spec).unwrap()).unwrap();
    let u2 = double_transform(&gf, &g_star_transform(&u1, &gf, y_spec).unwrap()).unwrap();
    assert!(u1.max_abs_diff(&u2) <= 1e-10);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn envelope_is_order_reversing(
        which in 0usize..2,
        bumps in prop::collection::vec(0.0f64..0.3, 81),
        c in -0.5f64..0.5,
    ) {
        let gf = if which == 0 { monge_ampere() } else { quadratic_cost() };
        let spec = GridSpec::square(-1.0, 1.0, 9);
        let u1 = sampled(spec, |x| half_norm2(x) + c * x[0] * x[1]);
        let u2 = GridFunction::new(spec, u1.values.iter().zip(&bumps).map(|(a, b)| a + b).collect()).unwrap();
        let y_spec = GridSpec::square(-1.0, 1.0, 11);
        let v1 = g_star_transform(&u1, &gf, y_spec).unwrap();
        let v2 = g_star_transform(&u2, &gf, y_spec).unwrap();
        for (a, b) in v1.values.iter().zip(&v2.values) {
            prop_assert!(a >= b);
        }
    }
}

#[test]
fn reflector_round_trip_refines() {
    let gf = log_reflector();
    // g-convex for the log cost: D²u = 2I dominates g_xx on this box, and
    // Y(x) stays inside the target box.
    let u = |x: [f64; 2]| -x[0] + x[0] * x[0] + x[1] * x[1];
    let mut defects = Vec::new();
    for n in [9, 17, 33] {
        let rt = double_transform_check(&sampled(GridSpec::square(-0.05, 0.05, n), u), &gf).unwrap();
        assert!(rt.overshoot <= 1e-12);
        defects.push(rt.defect);
    }
    assert!(defects[1] < 0.5 * defects[0] && defects[2] < 0.5 * defects[1], "{defects:?}");
}

fn corrections(nf: &NormalForm) -> f64 {
    nf.a.iter().flatten().flatten().fold(nf.structure_residual, |m, v| m.max(v.abs()))
}

#[test]
fn normal_form_of_ma_and_quadratic_cost_is_flat() {
    let nf = gen_exp_normal_form(&monge_ampere(), [0.2, -0.1], [0.5, 0.3], 0.0).unwrap();
    assert!(corrections(&nf) < 1e-6, "{nf:?}");
    // The quadratic cost differs from x·y − z by pure-x and pure-(y, z)
    // terms only, which the renormalization removes.
    let nf = gen_exp_normal_form(&quadratic_cost(), [0.2, -0.1], [0.5, 0.3], 0.0).unwrap();
    assert!(corrections(&nf) < 1e-6, "{nf:?}");
    assert!((nf.c - 1.0).abs() < 1e-15);
}

#[test]
fn normal_form_of_log_cost_matches_symbolic_taylor() {
    let nf = gen_exp_normal_form(&log_reflector(), [0.0, 0.0], [1.0, 0.0], 0.0).unwrap();
    // Exact values from a symbolic expansion of the renormalized function.
    let a = [[[-1.0, 0.0], [0.0, 1.0]], [[0.0, -1.0], [-1.0, 0.0]]];
    let b2 = [[[1.0, 0.0], [0.0, 1.0]], [[0.0, 1.0], [-1.0, 0.0]]];
    for i in 0..2 {
        assert!(nf.b1[i].abs() < 1e-6 && nf.b3_xzz[i].abs() < 1e-6);
        for j in 0..2 {
            assert!(nf.b3_xyz[i][j].abs() < 1e-6 && nf.b3_xxz[i][j].abs() < 1e-6);
            for k in 0..2 {
                assert!((nf.a[i][j][k] - a[i][j][k]).abs() < 1e-5, "a[{i}][{j}][{k}] = {}", nf.a[i][j][k]);
                assert!((nf.b2[i][j][k] - b2[i][j][k]).abs() < 1e-5, "b2[{i}][{j}][{k}] = {}", nf.b2[i][j][k]);
            }
        }
    }
    assert!(nf.bilinear_defect < 1e-6);
    assert!((nf.structure_residual - 1.0).abs() < 1e-5);
}
