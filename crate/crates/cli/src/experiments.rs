use crate::config::{ExperimentConfig, Field, Kind};
use crate::output::{num, Outcome, Probe, Table};
use crate::svg::{Plot, Series, Style};
use crate::CliError;
use gjelab_core::duality::{double_transform_check, gen_exp_normal_form, z_inverse, NormalForm};
use gjelab_core::genfun::{check_a1star, check_a3, sample_phase_points};
use gjelab_core::geometry::{section, verify_section_estimates, EstimateRow};
use gjelab_core::regularity::{default_radii, dini, fit_exponent, log_log_fit, log_radii, sharp_alpha, ExponentFit, PairMode, R2_TRUSTED};
use gjelab_core::solver::{cascade, solve, CascadeConfig, CascadeReport, DirichletProblem, Rhs, SolveOptions};
use gjelab_core::{DiniModulus, GenFun, GridFunction, GridSpec};

/// Everything a runner needs; `cfg` is resolved and validated.
pub struct Ctx<'a> {
    pub cfg: &'a ExperimentConfig,
    pub gf: &'a GenFun,
    pub verbose: bool,
}

impl Ctx<'_> {
    fn say(&self, msg: impl AsRef<str>) {
        if self.verbose {
            eprintln!("[{}] {}", self.kind().name(), msg.as_ref());
        }
    }

    fn kind(&self) -> Kind {
        self.cfg.kind.expect("resolved config has a kind")
    }

    fn seed(&self) -> u64 {
        self.cfg.seed.expect("validated config has a seed")
    }

    fn spec(&self, n: usize) -> GridSpec {
        let [lo, hi] = self.cfg.domain.expect("resolved config has a domain");
        GridSpec::square(lo, hi, n)
    }

    fn grids(&self) -> &[usize] {
        self.cfg.grids.as_deref().unwrap_or(&[])
    }

    fn field(&self, which: &str) -> Result<Field, CliError> {
        let src = match which {
            "u" => self.cfg.u.as_deref(),
            "density" => self.cfg.density.as_deref(),
            _ => self.cfg.exact.as_deref(),
        };
        Field::parse(src.ok_or_else(|| CliError::Config(format!("`{which}` is required for `{}`", self.kind().name())))?)
    }

    fn sample(&self, f: &Field, spec: GridSpec) -> Result<GridFunction, CliError> {
        f.check_on(&spec)?;
        Ok(GridFunction::from_fn(spec, |x| f.value(x))?)
    }

    fn solve_opts(&self) -> SolveOptions {
        SolveOptions { tol: self.cfg.tolerances.residual, ..SolveOptions::default() }
    }
}

pub fn run(ctx: &Ctx) -> Result<Outcome, CliError> {
    match ctx.kind() {
        Kind::Check => run_check(ctx),
        Kind::Solve => run_solve(ctx),
        Kind::Sections => run_sections(ctx),
        Kind::Cascade => run_cascade(ctx),
        Kind::Exponent => run_exponent(ctx),
        Kind::Duality => run_duality(ctx),
    }
}

fn key_value(name: &str, rows: Vec<(&str, String)>) -> Table {
    let mut t = Table::new(name, &["quantity", "value"]);
    for (k, v) in rows {
        t.push(vec![k.to_string(), v]);
    }
    t
}

fn run_check(ctx: &Ctx) -> Result<Outcome, CliError> {
    let (gf, seed) = (ctx.gf, ctx.seed());
    let samples = ctx.cfg.samples.unwrap_or(2000);
    let mut out = Outcome::default();

    // Kernel: (Y, Z) recovered from the phase point a sample was built from.
    ctx.say(format!("kernel round trip on {} phase points", samples.min(1000)));
    let pts = sample_phase_points(gf, samples.min(1000), seed)?;
    let (mut yz_err, mut min_det, mut max_a) = (0.0f64, f64::INFINITY, 0.0f64);
    for (q, y, z) in &pts {
        let fo = gf.first_order(q, None)?;
        let scale = 1.0 + z.abs() + y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let e = fo.y.iter().zip(y).fold((fo.z - z).abs(), |m, (a, b)| m.max((a - b).abs()));
        yz_err = yz_err.max(e / scale);
        min_det = min_det.min(fo.b_factor.abs());
        max_a = max_a.max(fo.a.amax());
    }
    out.tables.push(key_value(
        "kernel",
        vec![
            ("phase_points", pts.len().to_string()),
            ("max_rel_yz_error", num(yz_err)),
            ("min_abs_det_e", num(min_det)),
            ("max_abs_a", num(max_a)),
        ],
    ));
    out.gate("kernel_roundtrip", yz_err <= 1e-8, format!("max relative (Y,Z) error {yz_err:.3e}"));
    out.gate("a2_nondegenerate", min_det > 0.0, format!("min |det E| {min_det:.3e}"));

    ctx.say(format!("A3 on {samples} samples"));
    let a3 = check_a3(gf, samples, seed)?;
    let verdict = a3.verdict.to_string();
    let mut rows = vec![
        ("samples", a3.samples.to_string()),
        ("pairs", a3.pairs.to_string()),
        ("c_min", num(a3.c_min)),
        ("verdict", verdict.clone()),
    ];
    let names = ["argmin_x", "argmin_p", "argmin_xi", "argmin_eta"];
    for (name, v) in names.iter().zip([&a3.argmin_q.x, &a3.argmin_q.p, &a3.argmin_xi, &a3.argmin_eta]) {
        rows.push((name, v.iter().map(|c| num(*c)).collect::<Vec<_>>().join(" ")));
    }
    rows.push(("argmin_u", num(a3.argmin_q.u)));
    out.tables.push(key_value("a3", rows));
    match &ctx.cfg.expect_verdict {
        Some(want) => out.gate("a3_verdict", &verdict == want, format!("{verdict} (expected {want}), c_min {:.6e}", a3.c_min)),
        None => out.gate("a3_verdict", verdict != "FAIL", format!("{verdict}, c_min {:.6e}", a3.c_min)),
    }

    ctx.say("A1* injectivity");
    let a1 = check_a1star(gf, 16, seed)?;
    out.tables.push(key_value(
        "a1star",
        vec![
            ("samples", a1.samples.to_string()),
            ("grid_points", a1.grid_points.to_string()),
            ("injective", a1.injective.to_string()),
        ],
    ));
    out.gate("a1star_injective", a1.injective, format!("{} (y, z) samples over {} x-nodes", a1.samples, a1.grid_points));
    out.summary.push(format!("{}: A3 verdict {verdict} (c_min = {:.6e}); A1* injective: {}", gf.name(), a3.c_min, a1.injective));
    Ok(out)
}

fn max_error(u: &GridFunction, exact: &Field) -> f64 {
    (0..u.spec.len()).map(|k| (u.values[k] - exact.value(u.spec.point_k(k))).abs()).fold(0.0, f64::max)
}

fn run_solve(ctx: &Ctx) -> Result<Outcome, CliError> {
    let gf = ctx.gf;
    let boundary = ctx.field("u")?;
    let density = ctx.field("density")?;
    let exact = ctx.cfg.exact.as_deref().map(Field::parse).transpose()?;
    let tol = &ctx.cfg.tolerances;
    let mut out = Outcome::default();
    let mut table =
        Table::new("convergence", &["n", "spacing", "max_error", "order", "residual", "newton_iters", "continuation_steps", "min_eigen", "converged"]);
    let (mut errs, mut hs): (Vec<f64>, Vec<f64>) = (Vec::new(), Vec::new());
    let mut all_converged = true;
    let mut finest = None;
    for &n in ctx.grids() {
        let spec = ctx.spec(n);
        boundary.check_on(&spec)?;
        density.check_on(&spec)?;
        ctx.say(format!("solving on {n}x{n}"));
        let p = DirichletProblem::rectangle(gf, spec, |x| boundary.value(x), Rhs::from_fn(&spec, |x| density.value(x)));
        let rep = solve(&p, &ctx.solve_opts())?;
        all_converged &= rep.converged;
        let err = exact.as_ref().map(|e| max_error(&rep.u, e));
        let order = match (err, errs.last(), hs.last()) {
            (Some(e), Some(&pe), Some(&ph)) if e > 0.0_f64 && pe > 0.0 => Some((pe / e).ln() / (ph / spec.spacing).ln()),
            _ => None,
        };
        if let Some(e) = err {
            errs.push(e);
            hs.push(spec.spacing);
        }
        table.push(vec![
            n.to_string(),
            num(spec.spacing),
            err.map_or(String::new(), num),
            order.map_or(String::new(), num),
            num(rep.residual_inf),
            rep.newton_iters.to_string(),
            rep.continuation_steps.to_string(),
            num(rep.min_eigen),
            rep.converged.to_string(),
        ]);
        finest = Some(rep);
    }
    let rep = finest.ok_or_else(|| CliError::Config("`grids` is empty".into()))?;
    out.gate("converged", all_converged, "Newton reached the residual tolerance on every grid");

    let mut sol = Table::new("solution", &["x1", "x2", "u", "error"]);
    for k in 0..rep.u.spec.len() {
        let x = rep.u.spec.point_k(k);
        let e = exact.as_ref().map_or(String::new(), |f| num(rep.u.values[k] - f.value(x)));
        sol.push(vec![num(x[0]), num(x[1]), num(rep.u.values[k]), e]);
    }
    let centre = {
        let s = rep.u.spec;
        let m = s.max_corner();
        [0.5 * (s.origin[0] + m[0]), 0.5 * (s.origin[1] + m[1])]
    };
    out.probes.push(Probe { name: "u_centre".into(), value: rep.u.interpolate(centre)?, spacing: rep.u.spec.spacing, is_error: false });

    if let (Some(&e_fine), Some(&h_fine)) = (errs.last(), hs.last()) {
        out.probes.push(Probe { name: "max_error".into(), value: e_fine, spacing: h_fine, is_error: true });
        if e_fine <= 1e-9 {
            out.gate("order", true, format!("exact to rounding (max error {e_fine:.3e})"));
        } else if errs.len() >= 2 {
            let (slope, _) = log_log_fit(&hs, &errs);
            out.gate("order", slope >= tol.order_min, format!("observed order {slope:.3} (min {})", tol.order_min));
            out.summary.push(format!("observed order {slope:.3}"));
        }
        if let Some(m) = tol.max_error {
            out.gate("max_error", e_fine <= m, format!("{e_fine:.3e} on the finest grid (max {m:e})"));
        }
        let mut plot = Plot::new("Solver convergence", "grid spacing h", "max error").log_log();
        plot = plot.with(Series::new("max error", hs.iter().zip(&errs).map(|(h, e)| [*h, *e]).collect(), Style::Both));
        let c = e_fine / (h_fine * h_fine);
        plot = plot.with(Series::new("C h^2", hs.iter().map(|h| [*h, c * h * h]).collect(), Style::Line));
        out.plots.push(("convergence.svg".into(), plot.render()));
        out.summary.push(format!("max error {e_fine:.3e} at h = {h_fine:.4e}"));
    }
    out.summary.push(format!("final residual {:.3e} after {} Newton steps", rep.residual_inf, rep.newton_iters));
    out.tables.push(table);
    out.tables.push(sol);
    Ok(out)
}

fn run_sections(ctx: &Ctx) -> Result<Outcome, CliError> {
    let gf = ctx.gf;
    let n = ctx.grids()[0];
    let spec = ctx.spec(n);
    let u = ctx.sample(&ctx.field("u")?, spec)?;
    let density = ctx.field("density")?;
    density.check_on(&spec)?;
    let (lo, hi) = (0..spec.len()).map(|k| density.value(spec.point_k(k))).fold((f64::INFINITY, 0.0f64), |(a, b), v| (a.min(v), b.max(v)));
    let x0 = ctx.cfg.x0.unwrap_or([0.0, 0.0]);
    let heights = ctx.cfg.heights.clone().unwrap_or_default();
    ctx.say(format!("{} sections on {n}x{n}", heights.len()));
    let est = verify_section_estimates(&u, gf, x0, &heights, &|x| density.value(x), (lo, hi))?;
    let mut table = Table::new("sections", &EstimateRow::HEADER);
    for r in &est.rows {
        table.push(r.values().iter().map(|v| num(*v)).collect());
    }
    let spread = ctx.cfg.tolerances.section_spread;
    let vol = est.spread(|r| r.volume_ratio);
    let axes = est.spread(|r| r.axes_ratio);
    let mut out = Outcome::default();
    out.gate("volume_ratio_constant", vol <= 1.0 + spread, format!("max/min {vol:.4} (allowed {:.4})", 1.0 + spread));
    out.gate("axes_ratio_constant", axes <= 1.0 + spread, format!("max/min {axes:.4} (allowed {:.4})", 1.0 + spread));
    out.gate("ratios_bounded", est.unbounded.is_empty(), format!("drifting: {:?}", est.unbounded));
    out.summary.push(format!("volume ratio spread {vol:.4}, axes ratio spread {axes:.4}"));

    let mut plot = Plot::new("Sections S_h", "x1", "x2");
    plot.equal = true;
    for &h in &heights {
        let s = section(&u, gf, x0, h)?;
        plot = plot.with(Series::new(format!("h = {h:.3e}"), s.boundary.clone(), Style::Polygon));
    }
    out.plots.push(("sections.svg".into(), plot.render()));
    if let Some(r) = est.rows.first() {
        out.probes.push(Probe { name: "volume_ratio".into(), value: r.volume_ratio, spacing: spec.spacing, is_error: false });
    }
    out.tables.push(table);
    Ok(out)
}

fn cascade_plot(rep: &CascadeReport) -> String {
    let ks: Vec<f64> = (0..rep.states.len()).map(|k| k as f64).collect();
    let hess: Vec<[f64; 2]> = rep.states.iter().zip(&ks).map(|(s, k)| [*k, s.hessian_norm()]).collect();
    let bound: Vec<[f64; 2]> = rep.bound.iter().zip(&ks).map(|(b, k)| [*k, *b]).collect();
    let diffs: Vec<[f64; 2]> = rep.diffs.iter().zip(&ks).map(|(d, k)| [*k, *d]).collect();
    let c_omega: Vec<[f64; 2]> = rep.states.iter().zip(&ks).take(rep.diffs.len()).map(|(s, k)| [*k, rep.c_fit * s.omega]).collect();
    Plot::new("Rescaling cascade at x0", "stage k", "value")
        .with(Series::new("|D2u_k(x0)|", hess, Style::Both))
        .with(Series::new("bound", bound, Style::Line))
        .with(Series::new("|D2u_k - D2u_k+1|", diffs, Style::Both))
        .with(Series::new("C omega_k", c_omega, Style::Line))
        .render()
}

fn run_cascade(ctx: &Ctx) -> Result<Outcome, CliError> {
    let gf = ctx.gf;
    let cfg = ctx.cfg;
    let n = ctx.grids()[0];
    let spec = ctx.spec(n);
    let boundary = ctx.field("u")?;
    let density = ctx.field("density")?;
    boundary.check_on(&spec)?;
    density.check_on(&spec)?;
    let f = |x: [f64; 2]| density.value(x);
    ctx.say(format!("base problem on {n}x{n}"));
    let base = solve(&DirichletProblem::rectangle(gf, spec, |x| boundary.value(x), Rhs::from_fn(&spec, f)), &ctx.solve_opts())?;
    let ccfg = CascadeConfig {
        x0: cfg.x0.unwrap_or([0.0, 0.0]),
        h0: cfg.h0.unwrap_or(0.06),
        tau0: cfg.tau0.unwrap_or(0.25),
        stages: cfg.stages.unwrap_or(6),
        stage_nodes: cfg.stage_nodes,
        opts: ctx.solve_opts(),
    };
    ctx.say(format!("{} stages", ccfg.stages));
    let rep = cascade(&base.u, gf, &f, &ccfg)?;

    let fgrid = GridFunction::from_fn(spec, f)?;
    let r_max = 0.25 * (spec.max_corner()[0] - spec.origin[0]);
    let modulus: DiniModulus = dini(&fgrid, &log_radii(2.0 * spec.spacing, r_max, 24), PairMode::Auto { seed: ctx.seed() });

    let mut out = Outcome::default();
    out.gate("hessian_bounded", rep.bounded, format!("|D2u_k(x0)| within sup_V0 |D2u_0| + 1 + C sum omega (C = {:.4})", rep.c_fit));
    out.gate("constant_stable", rep.c_stable, format!("ratios {:?} within 25% of {:.4}", rep.c, rep.c_fit));
    out.gate("sections_nested", rep.containment.iter().all(|&b| b), format!("{:?}", rep.containment));
    out.summary.push(format!(
        "C = {:.4}, sup_V0 |D2u_0| = {:.4}, density Dini integral over [{:.2e}, {:.2e}] = {:.4}",
        rep.c_fit,
        rep.sup_v0,
        modulus.radii[0],
        r_max,
        modulus.integral
    ));
    out.tables.push(Table::from_csv("cascade", CascadeReport::HEADER, rep.rows()));
    out.tables.push(Table::from_csv("density_modulus", DiniModulus::HEADER, modulus.csv_rows()));
    out.tables.push(key_value(
        "cascade_summary",
        vec![
            ("sup_v0", num(rep.sup_v0)),
            ("c_fit", num(rep.c_fit)),
            ("c_stable", rep.c_stable.to_string()),
            ("bounded", rep.bounded.to_string()),
            ("dini_integral", num(modulus.integral)),
            ("non_dini", modulus.non_dini.to_string()),
            ("base_residual", num(base.residual_inf)),
        ],
    ));
    out.plots.push(("cascade.svg".into(), cascade_plot(&rep)));
    out.probes.push(Probe { name: "hessian_x0".into(), value: rep.states[0].hessian_norm(), spacing: spec.spacing, is_error: false });
    Ok(out)
}

fn exponent_plot(fit: &ExponentFit) -> String {
    let pts: Vec<[f64; 2]> = fit.radii.iter().zip(&fit.sup_values).map(|(r, s)| [*r, *s]).collect();
    // Least-squares line through the log-log points.
    let n = pts.len() as f64;
    let (mx, my) = pts.iter().fold((0.0, 0.0), |(a, b), p| (a + p[0].ln() / n, b + p[1].ln() / n));
    let line = fit.radii.iter().map(|r| [*r, (my + fit.slope * (r.ln() - mx)).exp()]).collect();
    Plot::new(&format!("Support defect, alpha = {:.4}", fit.alpha), "r", "sup |u - support|")
        .log_log()
        .with(Series::new("sup over B_r", pts, Style::Markers))
        .with(Series::new(format!("slope {:.4}", fit.slope), line, Style::Line))
        .render()
}

fn run_exponent(ctx: &Ctx) -> Result<Outcome, CliError> {
    let n = ctx.grids()[0];
    let spec = ctx.spec(n);
    let u = ctx.sample(&ctx.field("u")?, spec)?;
    let x0 = ctx.cfg.x0.unwrap_or([0.0, 0.0]);
    let r_max = ctx.cfg.r_max.unwrap_or(0.5);
    if r_max < 8.0 * spec.spacing {
        return Err(CliError::Config(format!("grid too coarse: r_max {r_max} spans fewer than 8 cells of {}", spec.spacing)));
    }
    let radii = default_radii(&spec, r_max);
    ctx.say(format!("fitting on {n}x{n}, radii {:.3e}..{:.3e}", radii[radii.len() - 1], radii[0]));
    let fit = fit_exponent(&u, ctx.gf, x0, &radii)?;
    let tol = ctx.cfg.tolerances.alpha;
    let mut out = Outcome::default();
    out.gate("fit_trusted", fit.trusted(), format!("R^2 = {:.6} (trusted from {R2_TRUSTED})", fit.r_squared));
    if let Some(a) = ctx.cfg.expected_alpha {
        out.gate("alpha_expected", (fit.alpha - a).abs() <= tol, format!("alpha = {:.6}, expected {a} +- {tol}", fit.alpha));
    }
    let mut table = Table::new("alpha", &["p", "sharp_alpha", "alpha_hat", "pass"]);
    for &p in ctx.cfg.p_values.as_deref().unwrap_or(&[]) {
        let sharp = sharp_alpha(2, p)?;
        let pass = fit.alpha >= sharp - tol;
        table.push(vec![num(p), num(sharp), num(fit.alpha), pass.to_string()]);
        out.gate(&format!("alpha_vs_sharp_p{p}"), pass, format!("alpha = {:.6} vs sharp {sharp:.6} - {tol}", fit.alpha));
    }
    out.summary.push(format!(
        "alpha = {:.6} (R^2 = {:.6}), gamma = {}",
        fit.alpha,
        fit.r_squared,
        fit.gamma.map_or("n/a".to_string(), |g| format!("{g:.6}"))
    ));
    out.tables.push(Table::from_csv("exponent", ExponentFit::HEADER, fit.csv_rows()));
    out.tables.push(table);
    out.plots.push(("exponent.svg".into(), exponent_plot(&fit)));
    out.probes.push(Probe { name: "alpha".into(), value: fit.alpha, spacing: spec.spacing, is_error: false });
    Ok(out)
}

fn run_duality(ctx: &Ctx) -> Result<Outcome, CliError> {
    let gf = ctx.gf;
    let field = ctx.field("u")?;
    let factor = ctx.cfg.tolerances.duality_factor;
    let mut out = Outcome::default();
    let mut table = Table::new("duality", &["n", "spacing", "defect", "defect_over_h", "envelope_gap", "overshoot"]);
    let mut pts: Vec<[f64; 2]> = Vec::new();
    for &n in ctx.grids() {
        let spec = ctx.spec(n);
        let u = ctx.sample(&field, spec)?;
        ctx.say(format!("round trip on {n}x{n}"));
        let rt = double_transform_check(&u, gf)?;
        table.push(vec![n.to_string(), num(rt.spacing), num(rt.defect), num(rt.defect / rt.spacing), num(rt.envelope_gap), num(rt.overshoot)]);
        out.gate(
            &format!("defect_n{n}"),
            rt.defect <= factor * rt.spacing,
            format!("defect {:.3e} vs {factor} h = {:.3e}", rt.defect, factor * rt.spacing),
        );
        if let Some(&[h_prev, d_prev]) = pts.last() {
            // At least first-order reduction; tiny defects are at rounding.
            let want = d_prev * rt.spacing / h_prev;
            out.gate(&format!("refines_n{n}"), rt.defect <= want || d_prev < 1e-13, format!("{:.3e} after {d_prev:.3e}", rt.defect));
        }
        pts.push([rt.spacing, rt.defect]);
    }
    if let Some(&[h, d]) = pts.last() {
        out.probes.push(Probe { name: "defect".into(), value: d, spacing: h, is_error: true });
        out.summary.push(format!("round-trip defect {d:.3e} at h = {h:.4e}"));
    }

    let samples = ctx.cfg.samples.unwrap_or(1000);
    let mut worst: f64 = 0.0;
    for (q, y, _) in sample_phase_points(gf, samples, ctx.seed())? {
        let z = z_inverse(gf, &q.x, &y, q.u)?;
        worst = worst.max((gf.g(&q.x, &y, z).map_err(gjelab_core::DualityError::from)? - q.u).abs() / q.u.abs().max(1.0));
    }
    let zt = ctx.cfg.tolerances.z_inverse;
    out.gate("z_inverse_residual", worst <= zt, format!("max relative residual {worst:.3e} over {samples} samples"));

    let d = gf.domain();
    let x0 = ctx.cfg.x0.unwrap_or_else(|| {
        let c = d.u_center();
        [c[0], c[1]]
    });
    let yc = d.v_center();
    let nf = gen_exp_normal_form(gf, x0, [yc[0], yc[1]], 0.0)?;
    out.tables.push(table);
    out.tables.push(Table::from_csv("normal_form", NormalForm::HEADER, nf.csv_rows()));
    out.tables.push(key_value("z_inverse", vec![("samples", samples.to_string()), ("max_rel_residual", num(worst))]));
    out.summary.push(format!("z_inverse residual {worst:.3e}; normal-form structure residual {:.3e}", nf.structure_residual));
    if let Some(&[h, d]) = pts.last() {
        let c = d / (h * h);
        let plot = Plot::new("g*-transform round trip", "grid spacing h", "max |u - u**|")
            .log_log()
            .with(Series::new("defect", pts.clone(), Style::Both))
            .with(Series::new(format!("{factor} h"), pts.iter().map(|p| [p[0], factor * p[0]]).collect(), Style::Line))
            .with(Series::new("C h^2", pts.iter().map(|p| [p[0], c * p[0] * p[0]]).collect(), Style::Line));
        out.plots.push(("duality.svg".into(), plot.render()));
    }
    Ok(out)
}
