use super::{GenFun, GenFunError};
use crate::gfdsl::{DomainBox, Interval};
use serde::{Deserialize, Serialize};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GenFunFileError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("malformed generating-function file: {0}")]
    Toml(#[from] toml::de::Error),
    #[error(transparent)]
    Invalid(#[from] GenFunError),
}

/// On-disk description of a generating function (TOML).
///
/// ```toml
/// name = "ma"
/// dimension = 2
/// g = "dot(x,y) - z"
/// u_box = [[-1.0, 1.0], [-1.0, 1.0]]
/// v_box = [[-4.0, 4.0], [-4.0, 4.0]]
/// z_interval = [-50.0, 50.0]
/// j_interval = [-50.0, 50.0]
/// diagonal_exclusion_radius = 0.0
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenFunFile {
    #[serde(default)]
    pub name: Option<String>,
    pub dimension: usize,
    pub g: String,
    pub u_box: Vec<[f64; 2]>,
    pub v_box: Vec<[f64; 2]>,
    pub z_interval: [f64; 2],
    pub j_interval: [f64; 2],
    #[serde(default)]
    pub diagonal_exclusion_radius: f64,
}

fn intervals(b: &[[f64; 2]]) -> Vec<Interval> {
    b.iter().map(|[lo, hi]| Interval::new(*lo, *hi)).collect()
}

impl GenFunFile {
    pub fn parse(text: &str) -> Result<GenFunFile, GenFunFileError> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<GenFunFile, GenFunFileError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| GenFunFileError::Io { path: path.display().to_string(), source })?;
        GenFunFile::parse(&text)
    }

    pub fn domain(&self) -> Result<DomainBox, GenFunError> {
        Ok(DomainBox::new(
            self.dimension,
            intervals(&self.u_box),
            intervals(&self.v_box),
            Interval::new(self.z_interval[0], self.z_interval[1]),
            Interval::new(self.j_interval[0], self.j_interval[1]),
            self.diagonal_exclusion_radius,
        )?)
    }

    pub fn build(&self) -> Result<GenFun, GenFunError> {
        let name = self.name.clone().unwrap_or_else(|| "custom".to_string());
        GenFun::from_source(&name, &self.g, self.domain()?)
    }

    /// Describe an existing generating function in file form.
    pub fn describe(gf: &GenFun) -> GenFunFile {
        let d = gf.domain();
        let b = |v: &[Interval]| v.iter().map(|iv| [iv.lo, iv.hi]).collect();
        GenFunFile {
            name: Some(gf.name().to_string()),
            dimension: gf.n(),
            g: gf.expr().to_string(),
            u_box: b(&d.u_box),
            v_box: b(&d.v_box),
            z_interval: [d.z_interval.lo, d.z_interval.hi],
            j_interval: [d.j_interval.lo, d.j_interval.hi],
            diagonal_exclusion_radius: d.diagonal_exclusion_radius,
        }
    }
}
