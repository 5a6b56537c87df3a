use crate::CliError;
use gjelab_core::genfun::{builtin, GenFunFile};
use gjelab_core::gfdsl::{self, Expr};
use gjelab_core::GenFun;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Check,
    Solve,
    Sections,
    Cascade,
    Exponent,
    Duality,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::Check => "check",
            Kind::Solve => "solve",
            Kind::Sections => "sections",
            Kind::Cascade => "cascade",
            Kind::Exponent => "exponent",
            Kind::Duality => "duality",
        }
    }
}

/// Gate thresholds; every field has a default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Solver residual tolerance, relative to `max(1, max B)`.
    pub residual: f64,
    /// Smallest accepted observed convergence order.
    pub order_min: f64,
    /// Largest accepted max-norm error on the finest grid.
    pub max_error: Option<f64>,
    /// Allowed relative spread of the section ratios.
    pub section_spread: f64,
    /// Slack on fitted exponents.
    pub alpha: f64,
    /// Round-trip defect bound as a multiple of the grid spacing.
    pub duality_factor: f64,
    /// Residual bound of the z-solve.
    pub z_inverse: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            residual: 1e-8,
            order_min: 1.8,
            max_error: None,
            section_spread: 0.05,
            alpha: 0.02,
            duality_factor: 2.0,
            z_inverse: 1e-12,
        }
    }
}

/// One experiment, as read from TOML. Fields not used by a kind are
/// ignored; the ones it needs are checked by [`ExperimentConfig::validate`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: Option<Kind>,
    pub seed: Option<u64>,
    /// Built-in name (`ma`, `qot`, `log`) or path to a generating-function
    /// file, relative to the config file.
    #[serde(default = "default_genfun")]
    pub genfun: String,
    pub grids: Option<Vec<usize>>,
    /// Square computational domain `[lo, hi]²`; defaults to the first
    /// interval of the generating function's `x` box.
    pub domain: Option<[f64; 2]>,
    pub output: Option<PathBuf>,
    /// Scalar field in `x`: boundary data for `solve`/`cascade`, the
    /// function itself for `sections`/`exponent`/`duality`.
    pub u: Option<String>,
    /// Density `f` in `x`.
    pub density: Option<String>,
    /// Exact solution for error tables.
    pub exact: Option<String>,
    pub x0: Option<[f64; 2]>,
    pub heights: Option<Vec<f64>>,
    /// Sample count of the structural checks.
    pub samples: Option<usize>,
    /// Expected A3 verdict (`A3`, `A3w` or `FAIL`).
    pub expect_verdict: Option<String>,
    /// Integrability exponents to test `α̂` against; `inf` allowed.
    pub p_values: Option<Vec<f64>>,
    pub r_max: Option<f64>,
    pub expected_alpha: Option<f64>,
    pub h0: Option<f64>,
    pub tau0: Option<f64>,
    pub stages: Option<usize>,
    pub stage_nodes: Option<usize>,
    #[serde(default)]
    pub tolerances: Tolerances,
}

fn default_genfun() -> String {
    "ma".into()
}

impl ExperimentConfig {
    pub fn empty() -> ExperimentConfig {
        ExperimentConfig {
            kind: None,
            seed: None,
            genfun: default_genfun(),
            grids: None,
            domain: None,
            output: None,
            u: None,
            density: None,
            exact: None,
            x0: None,
            heights: None,
            samples: None,
            expect_verdict: None,
            p_values: None,
            r_max: None,
            expected_alpha: None,
            h0: None,
            tau0: None,
            stages: None,
            stage_nodes: None,
            tolerances: Tolerances::default(),
        }
    }

    pub fn parse(text: &str) -> Result<ExperimentConfig, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<ExperimentConfig, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        ExperimentConfig::parse(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Fill kind-specific defaults so the resolved config fully describes
    /// the run.
    pub fn resolve(mut self, kind: Kind, default_domain: [f64; 2]) -> Result<ExperimentConfig, CliError> {
        if let Some(k) = self.kind {
            if k != kind {
                return Err(CliError::Config(format!("config is for `{}`, not `{}`", k.name(), kind.name())));
            }
        }
        self.kind = Some(kind);
        self.domain.get_or_insert(default_domain);
        let grids = |v: &[usize]| Some(v.to_vec());
        match kind {
            Kind::Check => {
                self.samples.get_or_insert(2000);
            }
            Kind::Solve => {
                self.grids = self.grids.or_else(|| grids(&[33, 65, 129]));
                self.u.get_or_insert_with(|| "0.5*norm2(x)".into());
                self.density.get_or_insert_with(|| "1".into());
            }
            Kind::Sections => {
                self.grids = self.grids.or_else(|| grids(&[513]));
                self.u.get_or_insert_with(|| "0.5*norm2(x)".into());
                self.density.get_or_insert_with(|| "1".into());
                self.x0.get_or_insert([0.0, 0.0]);
                self.heights.get_or_insert_with(|| (0..5).map(|i| 0.001 * 10f64.powf(0.5 * i as f64)).collect());
            }
            Kind::Cascade => {
                self.grids = self.grids.or_else(|| grids(&[257]));
                self.u.get_or_insert_with(|| "0.5*(x[0]^2/1.25 + 1.25*x[1]^2)".into());
                self.density.get_or_insert_with(|| DINI_DENSITY.into());
                self.x0.get_or_insert([0.0, 0.0]);
                self.h0.get_or_insert(0.06);
                self.tau0.get_or_insert(0.25);
                self.stages.get_or_insert(6);
                self.stage_nodes.get_or_insert(129);
            }
            Kind::Exponent => {
                self.grids = self.grids.or_else(|| grids(&[513]));
                self.u.get_or_insert_with(|| "norm(x)^1.6".into());
                self.x0.get_or_insert([0.0, 0.0]);
                self.r_max.get_or_insert(0.5);
                self.p_values.get_or_insert_with(|| vec![f64::INFINITY]);
            }
            Kind::Duality => {
                self.grids = self.grids.or_else(|| grids(&[33, 65]));
                self.u.get_or_insert_with(|| "0.5*norm2(x)".into());
                self.samples.get_or_insert(1000);
            }
        }
        Ok(self)
    }

    /// Presence and range checks; run on the resolved config.
    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: &str| Err(CliError::Config(m.to_string()));
        if self.seed.is_none() {
            return bad("missing `seed` (set it in the config or pass --seed)");
        }
        if let Some(g) = &self.grids {
            if g.is_empty() || g.iter().any(|&n| n < 9) {
                return bad("`grids` must list sizes of at least 9 nodes");
            }
        }
        if let Some([lo, hi]) = self.domain {
            if !(lo < hi) {
                return bad("`domain` must be [lo, hi] with lo < hi");
            }
        }
        if let Some(h) = &self.heights {
            if h.is_empty() || h.iter().any(|v| !(*v > 0.0)) {
                return bad("`heights` must be positive");
            }
        }
        if let Some(p) = &self.p_values {
            if p.iter().any(|v| !(*v > 1.5)) {
                return bad("`p_values` must exceed (n+1)/2 = 1.5");
            }
        }
        if let Some(v) = &self.expect_verdict {
            if !["A3", "A3w", "FAIL"].contains(&v.as_str()) {
                return bad("`expect_verdict` must be A3, A3w or FAIL");
            }
        }
        if let Some(t) = self.tau0 {
            if !(t > 0.0 && t < 1.0) {
                return bad("`tau0` must lie in (0, 1)");
            }
        }
        Ok(())
    }
}

/// `1 + 0.1/log(e + 1/|x|)`, with a tiny shift keeping `x = 0` finite.
pub const DINI_DENSITY: &str = "1 + 0.1/log(2.718281828459045 + 1/sqrt(norm2(x) + 1e-300))";

pub fn load_genfun(spec: &str, base: &Path) -> Result<GenFun, CliError> {
    if let Some(gf) = builtin(spec) {
        return Ok(gf);
    }
    let path = base.join(spec);
    let file = GenFunFile::load(&path).map_err(|e| CliError::Config(e.to_string()))?;
    file.build().map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

/// A scalar field `x ↦ e(x)` written in the generating-function grammar.
#[derive(Debug, Clone)]
pub struct Field {
    pub src: String,
    expr: Expr,
}

impl Field {
    pub fn parse(src: &str) -> Result<Field, CliError> {
        let expr = gfdsl::parse(src, 2).map_err(|e| CliError::Config(format!("field `{src}`: {e}")))?;
        if expr.depends_on_any_y() || expr.depends_on(gfdsl::Var::Z) {
            return Err(CliError::Config(format!("field `{src}` may only use x")));
        }
        Ok(Field { src: src.to_string(), expr })
    }

    pub fn at(&self, x: [f64; 2]) -> Result<f64, CliError> {
        gfdsl::eval(&self.expr, &x, &[0.0, 0.0], 0.0).map_err(|e| CliError::Numerical(format!("field `{}` at {x:?}: {e}", self.src)))
    }

    /// Infallible view for APIs taking plain closures; callers validate the
    /// grid first with [`Field::check_on`].
    pub fn value(&self, x: [f64; 2]) -> f64 {
        self.at(x).unwrap_or(f64::NAN)
    }

    pub fn check_on(&self, spec: &gjelab_core::GridSpec) -> Result<(), CliError> {
        for k in 0..spec.len() {
            self.at(spec.point_k(k))?;
        }
        Ok(())
    }
}
