use gjelab_core::genfun::{self, check_a3, A3Verdict};
use gjelab_core::geometry::{
    check_g_convexity, convexity_defect, from_tilde, good_shape, min_ellipsoid, normalize, polygon_area, sandwich,
    section, to_tilde, verify_section_estimates, GeometryError, GridFunction, GridSpec,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

fn grid(lo: f64, hi: f64, n: usize, f: impl Fn([f64; 2]) -> f64) -> GridFunction {
    GridFunction::from_fn(GridSpec::square(lo, hi, n), f).unwrap()
}

fn radii(poly: &[[f64; 2]], c: [f64; 2]) -> (f64, f64) {
    poly.iter().map(|p| (p[0] - c[0]).hypot(p[1] - c[1])).fold((f64::INFINITY, 0.0), |(l, h), r| (l.min(r), h.max(r)))
}

#[test]
fn ma_section_is_disc() {
    let gf = genfun::monge_ampere();
    let u = grid(-0.5, 0.5, 201, |x| 0.5 * (x[0] * x[0] + x[1] * x[1]));
    let s = section(&u, &gf, [0.0, 0.0], 0.02).unwrap();
    let (lo, hi) = radii(&s.boundary, [0.0, 0.0]);
    let r = (2.0f64 * 0.02).sqrt();
    let cell = u.spec.spacing;
    assert!((lo - r).abs() <= cell && (hi - r).abs() <= cell, "{lo} {hi} vs {r}");
    assert!(polygon_area(&s.boundary) > 0.0);
    assert!((s.area() - 2.0 * PI * 0.02).abs() / (2.0 * PI * 0.02) < 1e-3);
}

#[test]
fn qot_section_radius() {
    // u = |x|² touches -|x-y|²/2 - z at 0 with y = 0, z = 0; the section is
    // |x|² < -|x|²/2 + h, a disc of radius sqrt(2h/3).
    let gf = genfun::quadratic_cost();
    let u = grid(-0.5, 0.5, 201, |x| x[0] * x[0] + x[1] * x[1]);
    let h = 0.03;
    let s = section(&u, &gf, [0.0, 0.0], h).unwrap();
    let (lo, hi) = radii(&s.boundary, [0.0, 0.0]);
    let r = (2.0 * h / 3.0).sqrt();
    assert!((lo - r).abs() <= u.spec.spacing && (hi - r).abs() <= u.spec.spacing, "{lo} {hi} vs {r}");
}

#[test]
fn oversized_section_is_rejected() {
    let gf = genfun::monge_ampere();
    let u = grid(-0.5, 0.5, 101, |x| 0.5 * (x[0] * x[0] + x[1] * x[1]));
    let err = section(&u, &gf, [0.0, 0.0], 0.2).unwrap_err();
    assert!(matches!(err, GeometryError::SectionTouchesBoundary { .. }), "{err:?}");
}

#[test]
fn tilde_examples() {
    let ma = genfun::monge_ampere();
    let pts = vec![vec![0.3, -0.2], vec![-0.1, 0.7]];
    let t = to_tilde(&pts, &ma, &[0.5, 0.5], 0.1).unwrap();
    assert_eq!(t, vec![vec![-0.3, 0.2], vec![0.1, -0.7]]);
    let qot = genfun::quadratic_cost();
    // g_y = x − y and g_z = −1, so x̃ = y₀ − x.
    let t = to_tilde(&pts, &qot, &[0.5, 0.25], 0.1).unwrap();
    for (a, b) in t.iter().zip(&pts) {
        assert!((a[0] - (0.5 - b[0])).abs() < 1e-15 && (a[1] - (0.25 - b[1])).abs() < 1e-15);
    }
}

#[test]
fn tilde_round_trip_log() {
    let gf = genfun::log_reflector();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let pts: Vec<Vec<f64>> = (0..200).map(|_| vec![rng.random_range(-0.25..0.25), rng.random_range(-0.25..0.25)]).collect();
    let y0 = [1.0, 0.1];
    let t = to_tilde(&pts, &gf, &y0, 0.4).unwrap();
    let back = from_tilde(&t, &gf, &y0, 0.4).unwrap();
    for (a, b) in back.iter().zip(&pts) {
        assert!((a[0] - b[0]).abs() <= 1e-10 && (a[1] - b[1]).abs() <= 1e-10, "{a:?} vs {b:?}");
    }
}

#[test]
fn unit_circle_ellipse() {
    let pts: Vec<Vec<f64>> = (0..97).map(|k| {
        let t = 2.0 * PI * k as f64 / 97.0;
        vec![t.cos(), t.sin()]
    }).collect();
    let e = min_ellipsoid(&pts).unwrap();
    assert!((e.semi_axes[0] - 1.0).abs() <= 1e-6 && (e.semi_axes[1] - 1.0).abs() <= 1e-6, "{:?}", e.semi_axes);
    assert!((good_shape(&e) - 1.0).abs() <= 1e-6);
}

#[test]
fn rectangle_ellipse() {
    let (a, b) = (1.5, 0.5);
    let pts = vec![vec![-a, -b], vec![a, -b], vec![a, b], vec![-a, b], vec![0.0, 0.0], vec![0.2, 0.1]];
    let e = min_ellipsoid(&pts).unwrap();
    assert!((e.semi_axes[0] - a * 2f64.sqrt()).abs() <= 1e-6);
    assert!((e.semi_axes[1] - b * 2f64.sqrt()).abs() <= 1e-6);
    assert!((good_shape(&e) - a / b).abs() <= 1e-5);
    let flat: Vec<[f64; 2]> = pts.iter().map(|p| [p[0], p[1]]).collect();
    assert!(sandwich(&e, &flat).unwrap().holds(1e-9));
}

#[test]
fn segment_is_degenerate() {
    let pts: Vec<Vec<f64>> = (0..10).map(|k| vec![k as f64, 2.0 * k as f64]).collect();
    assert!(matches!(min_ellipsoid(&pts), Err(GeometryError::DegenerateInput { .. })));
}

#[test]
fn ma_section_estimates_closed_form() {
    let gf = genfun::monge_ampere();
    let u = grid(-0.5, 0.5, 257, |x| 0.5 * (x[0] * x[0] + x[1] * x[1]));
    let hs = [0.001, 0.003, 0.01, 0.03, 0.1];
    let t = verify_section_estimates(&u, &gf, [0.0, 0.0], &hs, &|_| 1.0, (1.0, 1.0)).unwrap();
    for r in &t.rows {
        assert!((r.volume_ratio * 4.0 * PI * PI - 1.0).abs() < 0.05, "{r:?}");
        assert!((r.good_shape_tilde - 1.0).abs() < 0.05);
        assert!(r.shape_ratio <= r.h * 1.05);
        assert!((r.depth - r.h).abs() < 1e-12);
    }
    assert!(t.unbounded.is_empty(), "{:?}", t.unbounded);
}

#[test]
fn anisotropic_good_shape() {
    let gf = genfun::monge_ampere();
    let u = grid(-0.5, 0.5, 257, |x| 0.5 * (x[0] * x[0] + 9.0 * x[1] * x[1]));
    let t = verify_section_estimates(&u, &gf, [0.0, 0.0], &[0.002, 0.02, 0.1], &|_| 9.0, (9.0, 9.0)).unwrap();
    for r in &t.rows {
        assert!((r.good_shape_tilde - 3.0).abs() < 0.1, "{r:?}");
    }
    assert!(t.spread(|r| r.volume_ratio) < 1.05);
    assert!(t.spread(|r| r.axes_ratio) < 1.05);
}

#[test]
fn ma_normalization() {
    let gf = genfun::monge_ampere();
    let u = grid(-0.5, 0.5, 201, |x| 0.5 * (x[0] * x[0] + x[1] * x[1]));
    let s = section(&u, &gf, [0.0, 0.0], 0.05).unwrap();
    let nz = normalize(&u, &gf, &s, 65).unwrap();
    // The ellipse is fitted to the polygon, so v is |x̄|² − 1 only up to the
    // polygon's sub-cell error; the exact map is x = −(c + L x̄).
    let h = 0.05;
    let sp = nz.v.spec;
    for k in 0..sp.len() {
        if !nz.valid[k] {
            continue;
        }
        let p = sp.point_k(k);
        let xt = nz.center + nz.frame * nalgebra::Vector2::new(p[0], p[1]);
        let exact = (0.5 * xt.norm_squared() - h) / h;
        assert!((nz.v.values[k] - exact).abs() < 1e-10);
        assert!((nz.v.values[k] - (p[0] * p[0] + p[1] * p[1] - 1.0)).abs() < 1e-3);
    }
    assert!((nz.inf_v + 1.0).abs() < 1e-3);
    assert_eq!(nz.gz_bounds, (1.0, 1.0));
    let (a, b) = nz.coefficients([0.2, -0.3], -0.8, [0.1, 0.4], &|_| 1.0).unwrap();
    assert!(a.amax() < 1e-12);
    let det_l = nz.frame.determinant();
    assert!((b - det_l * det_l / (h * h)).abs() < 1e-9, "{b}");
    assert!((b - 4.0).abs() < 1e-2);
    let res = nz.equation_residual(&|_| 1.0).unwrap();
    assert!(res < 1e-6, "{res}");
    let back = nz.denormalize([0.1, 0.05]).unwrap();
    assert!((back - 0.5 * (0.01 + 0.0025)).abs() < 1e-10);
}

#[test]
fn log_normalization_round_trip() {
    // u = g(·, y₀, z₀) + |x|²: g-convex with support (y₀, z₀) at the origin.
    let gf = genfun::log_reflector();
    let y0 = [1.0, 0.0];
    let u = grid(-0.25, 0.25, 129, |x| gf.g(&x, &y0, 0.0).unwrap() + x[0] * x[0] + x[1] * x[1]);
    let s = section(&u, &gf, [0.0, 0.0], 0.004).unwrap();
    assert!((s.y0[0] - 1.0).abs() < 1e-4 && s.y0[1].abs() < 1e-4);
    let nz = normalize(&u, &gf, &s, 65).unwrap();
    let ratio = nz.inf_v.abs();
    assert!(ratio > nz.gz_bounds.0 / nz.gz_bounds.1 * 0.5 && ratio <= 1.0 + 1e-6, "{ratio}");
    for p in s.boundary.iter().step_by(7) {
        let q = [0.9 * p[0], 0.9 * p[1]];
        let i = u.interpolate(q).unwrap();
        assert!((nz.denormalize(q).unwrap() - i).abs() < 1e-7);
    }
    // Exact density of u: f = det[D²u − A(x, u, Du)] / |det E|.
    let density = |x: [f64; 2]| {
        let jet = gf.newton_jet(&x, &y0, 0.0).unwrap();
        let q = gjelab_core::PhasePoint::new(x.to_vec(), jet.g + x[0] * x[0] + x[1] * x[1], vec![jet.gx[0] + 2.0 * x[0], jet.gx[1] + 2.0 * x[1]]);
        let c = gf.first_order(&q, None).unwrap();
        let d2 = gf.gxx(&x, &y0, 0.0).unwrap() + nalgebra::DMatrix::identity(2, 2) * 2.0;
        (d2 - c.a).determinant() / c.b_factor.abs()
    };
    let res = nz.equation_residual(&density).unwrap();
    let b_scale = nz.coefficients([0.0, 0.0], nz.v.interpolate([0.0, 0.0]).unwrap(), [0.0, 0.0], &density).unwrap().1;
    println!("normalized residual {res:e}, B̄ {b_scale}");
    assert!(res > 0.0 && res <= 1e-2 * b_scale, "residual {res} vs B̄ {b_scale}");
}

#[test]
fn section_convex_in_tilde_under_a3w() {
    for gf in [genfun::monge_ampere(), genfun::quadratic_cost(), genfun::log_reflector()] {
        let rep = check_a3(&gf, 50, 2).unwrap();
        assert!(rep.verdict != A3Verdict::Fail);
        let y0 = gf.domain().v_center();
        let z0 = 0.0;
        let d = gf.domain().u_box.clone();
        let spec = GridSpec::square(d[0].lo, d[0].hi, 161);
        // A g-convex function: the max of a few supports plus a quadratic.
        let u = GridFunction::from_fn(spec, |x| {
            let base = gf.g(&x, &y0, z0).unwrap() + 2.0 * (x[0] * x[0] + 0.5 * x[1] * x[1]);
            let mut y1 = y0.clone();
            y1[0] += 0.05;
            base.max(gf.g(&x, &y1, z0 + 0.002).unwrap())
        })
        .unwrap();
        let h = 0.01 * d[0].width() * d[0].width();
        let s = section(&u, &gf, [0.0, 0.0], h).unwrap();
        let t = s.boundary_tilde(&gf).unwrap();
        let chart = gjelab_core::geometry::TildeMap::new(&gf, &s.y0, s.z_h());
        let cell = u.spec.spacing * chart.jacobian(&[0.0, 0.0]).unwrap().norm();
        let defect = convexity_defect(&t);
        assert!(defect <= cell, "{}: defect {defect} > {cell}", gf.name());
    }
}

#[test]
fn g_convexity_certificate() {
    let gf = genfun::quadratic_cost();
    let u = grid(-0.5, 0.5, 41, |x| x[0] * x[0] + x[1] * x[1]);
    assert!(check_g_convexity(&u, &gf, 4).unwrap().holds(1e-12));
    let bad = grid(-0.5, 0.5, 41, |x| -x[0] * x[0]);
    assert!(!check_g_convexity(&bad, &gf, 4).unwrap().holds(1e-6));
}

fn random_convex_cloud() -> impl Strategy<Value = Vec<Vec<f64>>> {
    (3usize..40, 0u64..10_000).prop_map(|(m, seed)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (sx, sy, th) = (rng.random_range(0.2..3.0), rng.random_range(0.2..3.0), rng.random_range(0.0..PI));
        (0..m.max(4))
            .map(|_| {
                let (a, b): (f64, f64) = (rng.random_range(-1.0..1.0) * sx, rng.random_range(-1.0..1.0) * sy);
                vec![a * th.cos() - b * th.sin() + 0.3, a * th.sin() + b * th.cos() - 0.7]
            })
            .collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 128, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn ellipse_sandwich(pts in random_convex_cloud()) {
        let e = min_ellipsoid(&pts).unwrap();
        let flat: Vec<[f64; 2]> = pts.iter().map(|p| [p[0], p[1]]).collect();
        let rep = sandwich(&e, &flat).unwrap();
        let scale = e.semi_axes[0];
        prop_assert!(rep.outer_excess <= 1e-12, "{:?}", rep);
        prop_assert!(rep.inner_excess <= 1e-6 * scale, "{:?}", rep);
    }

    #[test]
    fn volume_bracketing(a in 0.5..2.0f64, b in 0.5..2.0f64, c in -0.35..0.35f64, h in 0.005..0.05f64) {
        // u = (a x₁² + 2c x₁x₂ + b x₂²)/2 has smallest eigenvalue ≥ 0.15, so
        // the section radius stays below √(2h/0.15) < 0.82.
        let gf = genfun::monge_ampere();
        let u = grid(-1.0, 1.0, 241, |x| 0.5 * (a * x[0] * x[0] + 2.0 * c * x[0] * x[1] + b * x[1] * x[1]));
        let s = section(&u, &gf, [0.0, 0.0], h).unwrap();
        let e = min_ellipsoid(&s.boundary.iter().map(|p| p.to_vec()).collect::<Vec<_>>()).unwrap();
        let prod = e.axes_product();
        let area = s.area();
        prop_assert!(PI / 4.0 * prod <= area && area <= PI * prod * (1.0 + 1e-9));
    }
}
