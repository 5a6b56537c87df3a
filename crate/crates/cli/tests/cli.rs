use gjelab_cli::compare::compare;
use gjelab_cli::config::{ExperimentConfig, Kind, Tolerances};
use gjelab_cli::output::{num, Manifest, Table};
use gjelab_cli::{execute, main_with_args, CliError, RunArgs, EXIT_CONFIG, EXIT_GATE, EXIT_OK, EXIT_RUNTIME};
use proptest::prelude::*;
use std::fs;
use std::path::{Path, PathBuf};
use tempfile::TempDir;

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn run(args: &[&str]) -> i32 {
    main_with_args(std::iter::once("gjelab").chain(args.iter().copied()))
}

fn csv_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    v.sort();
    v
}

const MA_FILE: &str = r#"
name = "ma"
dimension = 2
g = "dot(x,y) - z"
u_box = [[-1.0, 1.0], [-1.0, 1.0]]
v_box = [[-4.0, 4.0], [-4.0, 4.0]]
z_interval = [-50.0, 50.0]
j_interval = [-50.0, 50.0]
"#;

#[test]
fn check_on_ma_file_reports_a3w() {
    let tmp = TempDir::new().unwrap();
    write(tmp.path(), "ma.toml", MA_FILE);
    let out = tmp.path().join("run");
    let cfg = write(tmp.path(), "cfg.toml", &format!("kind = \"check\"\nseed = 4\ngenfun = \"ma.toml\"\nsamples = 300\noutput = {:?}\n", out));
    assert_eq!(run(&["check", "--config", cfg.to_str().unwrap()]), EXIT_OK);
    let m = Manifest::load(&out).unwrap();
    assert_eq!(m.exit_code, 0);
    assert!(m.failed_gates.is_empty());
    let a3 = fs::read_to_string(out.join("a3.csv")).unwrap();
    assert!(a3.contains("verdict,A3w"), "{a3}");
    // The generating function travels with the run.
    assert_eq!(fs::read_to_string(out.join("genfun.toml")).unwrap(), MA_FILE);
    for f in &m.files {
        assert_eq!(gjelab_cli::output::sha256_hex(&fs::read(out.join(&f.name)).unwrap()), f.sha256, "{}", f.name);
    }
}

#[test]
fn missing_seed_is_a_config_error() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(tmp.path(), "cfg.toml", "kind = \"check\"\ngenfun = \"ma\"\n");
    assert_eq!(run(&["check", "--config", cfg.to_str().unwrap(), "--out", tmp.path().join("o").to_str().unwrap()]), EXIT_CONFIG);
    assert!(!tmp.path().join("o").exists());
    let err = execute(Kind::Check, &RunArgs { config: Some(cfg), ..RunArgs::default() }).unwrap_err();
    assert!(matches!(err, CliError::Config(ref m) if m.contains("seed")), "{err}");
}

#[test]
fn schema_errors_exit_2() {
    let tmp = TempDir::new().unwrap();
    let unknown = write(tmp.path(), "a.toml", "kind = \"check\"\nseed = 1\nsed = 2\n");
    assert_eq!(run(&["check", "--config", unknown.to_str().unwrap()]), EXIT_CONFIG);
    let wrong_kind = write(tmp.path(), "b.toml", "kind = \"solve\"\nseed = 1\n");
    assert_eq!(run(&["check", "--config", wrong_kind.to_str().unwrap()]), EXIT_CONFIG);
    let bad_p = write(tmp.path(), "c.toml", "seed = 1\np_values = [1.2]\n");
    assert_eq!(run(&["exponent", "--config", bad_p.to_str().unwrap()]), EXIT_CONFIG);
    assert_eq!(run(&["check", "--no-such-flag"]), EXIT_CONFIG);
    assert_eq!(run(&["check", "--seed", "1", "--config", tmp.path().join("absent.toml").to_str().unwrap()]), EXIT_CONFIG);
}

#[test]
fn failed_gate_exits_1_and_is_listed() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("run");
    let cfg = write(tmp.path(), "cfg.toml", "kind = \"check\"\nseed = 1\nsamples = 50\nexpect_verdict = \"A3\"\n");
    assert_eq!(run(&["check", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]), EXIT_GATE);
    let m = Manifest::load(&out).unwrap();
    assert_eq!(m.exit_code, EXIT_GATE);
    assert_eq!(m.failed_gates, vec!["a3_verdict".to_string()]);
}

#[test]
fn evaluation_failure_is_a_runtime_error() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("run");
    let cfg = write(tmp.path(), "cfg.toml", "seed = 1\ngrids = [17]\nu = \"1/x[0]\"\n");
    assert_eq!(run(&["duality", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]), EXIT_RUNTIME);
    let m = Manifest::load(&out).unwrap();
    assert_eq!(m.exit_code, EXIT_RUNTIME);
    assert!(m.error.unwrap().contains("1/x[0]"));
}

#[test]
fn fields_must_not_use_y_or_z() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(tmp.path(), "cfg.toml", "seed = 1\ngrids = [17]\nu = \"x[0]*y[1]\"\n");
    let args = RunArgs { config: Some(cfg), out: Some(tmp.path().join("o")), ..RunArgs::default() };
    assert!(matches!(execute(Kind::Duality, &args), Err(CliError::Config(_))));
}

#[test]
fn exponent_radial_study_passes_against_sharp_alpha() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(
        tmp.path(),
        "cfg.toml",
        "kind = \"exponent\"\nseed = 1\ngrids = [257]\nu = \"norm(x)^1.6\"\nexpected_alpha = 0.6\np_values = [1.6, 2.0, 2.4]\nr_max = 0.5\n",
    );
    let args = RunArgs { config: Some(cfg), out: Some(tmp.path().join("run")), ..RunArgs::default() };
    let r = execute(Kind::Exponent, &args).unwrap();
    assert_eq!(r.exit_code(), EXIT_OK, "{:?}", r.manifest.gates);
    let t = r.outcome.table("alpha").unwrap();
    assert_eq!(t.rows.len(), 3);
    let alpha = t.column("alpha_hat").unwrap()[0];
    assert!((alpha - 0.6).abs() <= 0.02);
    let sharp = t.column("sharp_alpha").unwrap();
    assert!(sharp.windows(2).all(|w| w[0] < w[1]));
    assert!(tmp.path().join("run/exponent.svg").exists());
}

#[test]
fn seeded_runs_are_bit_identical_and_rerunnable_from_their_directory() {
    let tmp = TempDir::new().unwrap();
    let (a, b, c) = (tmp.path().join("a"), tmp.path().join("b"), tmp.path().join("c"));
    for d in [&a, &b] {
        assert_eq!(run(&["duality", "--seed", "9", "--grid", "17", "--out", d.to_str().unwrap()]), EXIT_OK);
    }
    assert_eq!(csv_files(&a), csv_files(&b));
    // The written config alone reproduces the run.
    let cfg = a.join("config.toml");
    assert_eq!(run(&["duality", "--config", cfg.to_str().unwrap(), "--out", c.to_str().unwrap()]), EXIT_OK);
    assert_eq!(csv_files(&a), csv_files(&c));
    let (ma, mc) = (Manifest::load(&a).unwrap(), Manifest::load(&c).unwrap());
    assert_eq!(ma.config_sha256, mc.config_sha256);
    let rep = compare(&a, &c, 0.0).unwrap();
    assert!(rep.diffs.is_empty() && rep.orders.is_none() && rep.is_clean());
}

#[test]
fn compare_reports_orders_and_rejects_mismatched_kinds() {
    let tmp = TempDir::new().unwrap();
    let dirs: Vec<PathBuf> = ["s33", "s65", "chk"].iter().map(|n| tmp.path().join(n)).collect();
    let cfg = write(
        tmp.path(),
        "solve.toml",
        "kind = \"solve\"\nseed = 1\nu = \"exp(0.5*norm2(x))\"\nexact = \"exp(0.5*norm2(x))\"\ndensity = \"(1 + norm2(x))*exp(norm2(x))\"\n",
    );
    for (d, n) in dirs.iter().zip(["33", "65"]) {
        assert_eq!(run(&["solve", "--config", cfg.to_str().unwrap(), "--grid", n, "--out", d.to_str().unwrap()]), EXIT_OK);
    }
    let rep = compare(&dirs[0], &dirs[1], 0.0).unwrap();
    let orders = rep.orders.expect("different spacings give an order table");
    let row = orders.rows.iter().find(|r| r[0] == "max_error").unwrap();
    let order: f64 = row[5].parse().unwrap();
    assert!((order - 2.0).abs() < 0.15, "order {order}");
    // The centre value gets a Richardson estimate instead.
    let centre = orders.rows.iter().find(|r| r[0] == "u_centre").unwrap();
    let rich: f64 = centre[6].parse().unwrap();
    assert!((rich - 1.0).abs() < 1e-4, "richardson {rich}");
    assert!(rep.reshaped.contains(&"solution".to_string()));

    assert_eq!(run(&["check", "--seed", "1", "--out", dirs[2].to_str().unwrap()]), EXIT_OK);
    assert!(matches!(compare(&dirs[0], &dirs[2], 0.0), Err(CliError::Schema(_))));
    assert_eq!(run(&["compare", dirs[0].to_str().unwrap(), dirs[2].to_str().unwrap()]), EXIT_CONFIG);
}

#[test]
fn compare_flags_perturbed_cells() {
    let tmp = TempDir::new().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for d in [&a, &b] {
        assert_eq!(run(&["check", "--seed", "2", "--out", d.to_str().unwrap()]), EXIT_OK);
    }
    let path = b.join("kernel.csv");
    let text = fs::read_to_string(&path).unwrap().replace("min_abs_det_e,1.0000000000000000e0", "min_abs_det_e,1.0000000001000000e0");
    fs::write(&path, text).unwrap();
    let mut m = Manifest::load(&b).unwrap();
    m.files.iter_mut().find(|f| f.name == "kernel.csv").unwrap().sha256 = "changed".into();
    fs::write(b.join("manifest.json"), serde_json::to_string(&m).unwrap()).unwrap();
    let rep = compare(&a, &b, 0.0).unwrap();
    assert_eq!(rep.diffs.len(), 1);
    assert_eq!((rep.diffs[0].table.as_str(), rep.diffs[0].cells), ("kernel", 1));
    assert!(!rep.is_clean());
    assert!(compare(&a, &b, 1e-6).unwrap().is_clean());
}

#[test]
fn resolved_config_round_trips_through_toml() {
    let cfg = ExperimentConfig::parse("seed = 5\np_values = [1.6, inf]\n[tolerances]\nalpha = 0.01\n").unwrap();
    let r = cfg.resolve(Kind::Exponent, [-1.0, 1.0]).unwrap();
    assert_eq!(r.tolerances, Tolerances { alpha: 0.01, ..Tolerances::default() });
    assert_eq!(ExperimentConfig::parse(&r.to_toml()).unwrap(), r);
    assert!(r.p_values.unwrap()[1].is_infinite());
}

proptest! {
    #[test]
    fn csv_floats_round_trip_exactly(bits in any::<u64>()) {
        let v = f64::from_bits(bits);
        prop_assume!(v.is_finite());
        prop_assert_eq!(num(v).parse::<f64>().unwrap().to_bits(), v.to_bits());
    }

    #[test]
    fn tables_round_trip(rows in prop::collection::vec(prop::collection::vec(-1e6f64..1e6, 3), 0..20)) {
        let mut t = Table::new("t", &["a", "b", "c"]);
        for r in &rows {
            t.push(r.iter().map(|v| num(*v)).collect());
        }
        let back = Table::parse("t", &t.to_csv()).unwrap();
        prop_assert_eq!(&back, &t);
        for (k, name) in ["a", "b", "c"].iter().enumerate() {
            let col = back.column(name).unwrap();
            prop_assert!(col.iter().zip(&rows).all(|(x, r)| *x == r[k]));
        }
    }

    #[test]
    fn config_round_trips(seed in any::<u64>(), n in 9usize..600, alpha in 0.001f64..0.1, h in prop::collection::vec(1e-4f64..0.5, 1..5)) {
        let mut c = ExperimentConfig::empty();
        c.seed = Some(seed);
        c.grids = Some(vec![n]);
        c.heights = Some(h);
        c.tolerances.alpha = alpha;
        let r = c.resolve(Kind::Sections, [-0.5, 0.5]).unwrap();
        r.validate().unwrap();
        prop_assert_eq!(ExperimentConfig::parse(&r.to_toml()).unwrap(), r);
    }
}
