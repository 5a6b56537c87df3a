//! Batch experiment runner: reads a TOML experiment config, runs one study
//! through `gjelab-core`, and writes CSV tables, SVG plots and a manifest
//! into a self-describing run directory.

pub mod compare;
pub mod config;
pub mod experiments;
pub mod output;
pub mod svg;

use clap::{Args, Parser, Subcommand};
use config::{load_genfun, ExperimentConfig, Kind};
use gjelab_core::genfun::{GenFunError, GenFunFile};
use gjelab_core::{DualityError, RegularityError, SolverError};
use output::{write_file, Manifest, Outcome, CONFIG, MANIFEST};
use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;
use thiserror::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_GATE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("schema mismatch: {0}")]
    Schema(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error(transparent)]
    GenFun(#[from] GenFunError),
    #[error(transparent)]
    Geometry(#[from] gjelab_core::geometry::GeometryError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Regularity(#[from] RegularityError),
    #[error(transparent)]
    Duality(#[from] DualityError),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Schema(_) => EXIT_CONFIG,
            _ => EXIT_RUNTIME,
        }
    }
}

/// Command-line overrides applied on top of the config file.
#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// Experiment config (TOML).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory; overrides `output` in the config.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Seed for all sampling; overrides `seed` in the config.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Run on a single n×n grid instead of the configured list.
    #[arg(long)]
    pub grid: Option<usize>,
    /// Progress messages on stderr.
    #[arg(long, short)]
    pub verbose: bool,
}

#[derive(Debug, Clone, Args)]
pub struct CompareArgs {
    pub run_a: PathBuf,
    pub run_b: PathBuf,
    /// Relative tolerance per cell, `|a − b| ≤ tol · max(1, |a|, |b|)`.
    #[arg(long, default_value_t = 0.0)]
    pub tol: f64,
    /// Directory for `diff.csv` and `orders.csv`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Kernel round trip and sampled A1*, A2, A3 checks.
    Check(RunArgs),
    /// Dirichlet problem on a list of grids with convergence table.
    Solve(RunArgs),
    /// Section volume, ellipsoid and shape ratios over heights.
    Sections(RunArgs),
    /// Constant-density approximating problems and their Hessians at x0.
    Cascade(RunArgs),
    /// Hölder exponent fit against the sharp exponent.
    Exponent(RunArgs),
    /// g*-transform round trip, z-inverse residual and normal form.
    Duality(RunArgs),
    /// Diff two run directories.
    Compare(CompareArgs),
}

#[derive(Debug, Parser)]
#[command(name = "gjelab", version, about = "Numerical experiments for generated Jacobian equations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

/// Result of one experiment run.
#[derive(Debug)]
pub struct RunResult {
    pub dir: PathBuf,
    pub outcome: Outcome,
    pub manifest: Manifest,
}

impl RunResult {
    pub fn exit_code(&self) -> i32 {
        self.manifest.exit_code
    }
}

/// Loads, overrides, resolves and validates a config. Errors here are
/// configuration errors (exit 2).
pub fn prepare(kind: Kind, args: &RunArgs) -> Result<(ExperimentConfig, PathBuf), CliError> {
    let (mut cfg, base) = match &args.config {
        Some(p) => (ExperimentConfig::load(p)?, p.parent().map(Path::to_path_buf).unwrap_or_default()),
        None => (ExperimentConfig::empty(), PathBuf::new()),
    };
    if let Some(s) = args.seed {
        cfg.seed = Some(s);
    }
    if let Some(n) = args.grid {
        cfg.grids = Some(vec![n]);
    }
    if let Some(o) = &args.out {
        cfg.output = Some(o.clone());
    }
    let gf = load_genfun(&cfg.genfun, &base)?;
    let ux = &gf.domain().u_box[0];
    let cfg = cfg.resolve(kind, [ux.lo, ux.hi])?;
    cfg.validate()?;
    Ok((cfg, base))
}

/// Runs one experiment and writes its run directory.
pub fn execute(kind: Kind, args: &RunArgs) -> Result<RunResult, CliError> {
    let (mut cfg, base) = prepare(kind, args)?;
    let gf = load_genfun(&cfg.genfun, &base)?;
    let dir = cfg.output.clone().unwrap_or_else(|| PathBuf::from("runs").join(kind.name()));
    std::fs::create_dir_all(&dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    let mut files = Vec::new();
    // A file-based generating function travels with the run.
    if gjelab_core::genfun::builtin(&cfg.genfun).is_none() {
        let text = std::fs::read_to_string(base.join(&cfg.genfun)).map_err(|e| CliError::Io(e.to_string()))?;
        files.push(write_file(&dir, "genfun.toml", &text)?);
        cfg.genfun = "genfun.toml".into();
    }
    let out_field = cfg.output.take();
    let config_text = cfg.to_toml();
    cfg.output = out_field;
    let config_entry = write_file(&dir, CONFIG, &config_text)?;
    let config_sha256 = config_entry.sha256.clone();
    files.push(config_entry);

    let start = Instant::now();
    let ctx = experiments::Ctx { cfg: &cfg, gf: &gf, verbose: args.verbose };
    let result = experiments::run(&ctx);
    let wall_time_s = start.elapsed().as_secs_f64();
    let mut manifest = Manifest {
        tool: "gjelab".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        kind,
        seed: cfg.seed.unwrap_or_default(),
        config: config_text,
        config_sha256,
        genfun: GenFunFile::describe(&gf),
        wall_time_s,
        files,
        gates: Vec::new(),
        failed_gates: Vec::new(),
        probes: Vec::new(),
        exit_code: EXIT_OK,
        error: None,
    };
    let outcome = match result {
        Ok(o) => o,
        Err(e) => {
            manifest.exit_code = e.exit_code();
            manifest.error = Some(e.to_string());
            write_manifest(&dir, &manifest)?;
            return Err(e);
        }
    };
    for t in &outcome.tables {
        manifest.files.push(write_file(&dir, &t.file_name(), &t.to_csv())?);
    }
    for (name, svg) in &outcome.plots {
        manifest.files.push(write_file(&dir, name, svg)?);
    }
    manifest.gates = outcome.gates.clone();
    manifest.failed_gates = outcome.gates.iter().filter(|g| !g.passed).map(|g| g.name.clone()).collect();
    manifest.probes = outcome.probes.clone();
    manifest.exit_code = if outcome.passed() { EXIT_OK } else { EXIT_GATE };
    write_manifest(&dir, &manifest)?;
    Ok(RunResult { dir, outcome, manifest })
}

fn write_manifest(dir: &Path, m: &Manifest) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(m).map_err(|e| CliError::Io(e.to_string()))?;
    write_file(dir, MANIFEST, &(text + "\n"))?;
    Ok(())
}

fn report_run(kind: Kind, r: &RunResult) {
    for line in &r.outcome.summary {
        println!("{line}");
    }
    for g in &r.outcome.gates {
        println!("[{}] {}: {}", if g.passed { "pass" } else { "FAIL" }, g.name, g.detail);
    }
    println!("{} run written to {} (exit {})", kind.name(), r.dir.display(), r.exit_code());
}

fn run_compare(a: &CompareArgs) -> Result<i32, CliError> {
    let rep = compare::compare(&a.run_a, &a.run_b, a.tol)?;
    if rep.diffs.is_empty() {
        println!("no differences");
    }
    for d in &rep.diffs {
        println!("{}.{}: {} cells differ, max |a - b| = {:.3e}", d.table, d.column, d.cells, d.max_abs);
    }
    for t in &rep.reshaped {
        println!("{t}: row counts differ, not compared cellwise");
    }
    if let Some(t) = &rep.orders {
        print!("{}", t.to_csv());
    }
    if let Some(dir) = &a.out {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Io(e.to_string()))?;
        write_file(dir, "diff.csv", &rep.diff_table().to_csv())?;
        if let Some(t) = &rep.orders {
            write_file(dir, "orders.csv", &t.to_csv())?;
        }
    }
    Ok(if rep.is_clean() { EXIT_OK } else { EXIT_GATE })
}

/// Parses arguments, runs the subcommand and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let (kind, run_args) = match &cli.command {
        Command::Check(a) => (Kind::Check, a),
        Command::Solve(a) => (Kind::Solve, a),
        Command::Sections(a) => (Kind::Sections, a),
        Command::Cascade(a) => (Kind::Cascade, a),
        Command::Exponent(a) => (Kind::Exponent, a),
        Command::Duality(a) => (Kind::Duality, a),
        Command::Compare(a) => {
            return run_compare(a).unwrap_or_else(|e| {
                eprintln!("error: {e}");
                e.exit_code()
            })
        }
    };
    match execute(kind, run_args) {
        Ok(r) => {
            report_run(kind, &r);
            r.exit_code()
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
