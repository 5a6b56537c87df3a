use crate::config::{ExperimentConfig, Kind};
use crate::CliError;
use gjelab_core::genfun::GenFunFile;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::Path;

pub const MANIFEST: &str = "manifest.json";
pub const CONFIG: &str = "config.toml";

/// Float cell with 17 significant digits, so values round-trip exactly.
pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

/// One CSV table with a fixed column order.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Table {
        Table { name: name.to_string(), header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    /// Table from a core `HEADER` constant and pre-formatted rows.
    pub fn from_csv(name: &str, header: &str, rows: Vec<String>) -> Table {
        Table {
            name: name.to_string(),
            header: header.split(',').map(str::to_string).collect(),
            rows: rows.into_iter().map(|r| r.split(',').map(str::to_string).collect()).collect(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len(), "row width of table {}", self.name);
        self.rows.push(row);
    }

    pub fn file_name(&self) -> String {
        format!("{}.csv", self.name)
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.header.join(",");
        s.push('\n');
        for r in &self.rows {
            s.push_str(&r.join(","));
            s.push('\n');
        }
        s
    }

    pub fn parse(name: &str, text: &str) -> Result<Table, CliError> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| CliError::Schema(format!("{name}: empty table")))?;
        let header: Vec<String> = header.split(',').map(str::to_string).collect();
        let mut rows = Vec::new();
        for (i, l) in lines.enumerate() {
            let r: Vec<String> = l.split(',').map(str::to_string).collect();
            if r.len() != header.len() {
                return Err(CliError::Schema(format!("{name}: row {} has {} cells, header {}", i + 1, r.len(), header.len())));
            }
            rows.push(r);
        }
        Ok(Table { name: name.to_string(), header, rows })
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let c = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[c].parse().unwrap_or(f64::NAN)).collect())
    }
}

/// A declared property gate; any failure makes the run exit 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gate {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Gate {
    pub fn new(name: &str, passed: bool, detail: impl Into<String>) -> Gate {
        Gate { name: name.to_string(), passed, detail: detail.into() }
    }
}

/// Scalar summary used by `compare` to estimate convergence orders between
/// runs on different grids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Probe {
    pub name: String,
    pub value: f64,
    pub spacing: f64,
    /// `value` is an error against a known answer (order from ratios) rather
    /// than a plain quantity (order needs a Richardson estimate).
    pub is_error: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    pub name: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub kind: Kind,
    pub seed: u64,
    /// Resolved configuration as TOML text, identical to `config.toml`
    /// (TOML keeps infinite exponents, which JSON cannot).
    pub config: String,
    pub config_sha256: String,
    pub genfun: GenFunFile,
    pub wall_time_s: f64,
    pub files: Vec<FileEntry>,
    pub gates: Vec<Gate>,
    pub failed_gates: Vec<String>,
    pub probes: Vec<Probe>,
    pub exit_code: i32,
    /// Runtime error message when the experiment aborted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl Manifest {
    pub fn load(dir: &Path) -> Result<Manifest, CliError> {
        let path = dir.join(MANIFEST);
        let text = std::fs::read_to_string(&path).map_err(|e| CliError::Schema(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Schema(format!("{}: {e}", path.display())))
    }

    pub fn resolved_config(&self) -> Result<ExperimentConfig, CliError> {
        ExperimentConfig::parse(&self.config)
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn write_file(dir: &Path, name: &str, contents: &str) -> Result<FileEntry, CliError> {
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    Ok(FileEntry { name: name.to_string(), sha256: sha256_hex(contents.as_bytes()) })
}

/// Everything an experiment produces before it is written out.
#[derive(Debug, Default)]
pub struct Outcome {
    pub tables: Vec<Table>,
    /// `(file name, svg source)`.
    pub plots: Vec<(String, String)>,
    pub gates: Vec<Gate>,
    pub probes: Vec<Probe>,
    /// Human-readable lines for the terminal.
    pub summary: Vec<String>,
}

impl Outcome {
    pub fn gate(&mut self, name: &str, passed: bool, detail: impl Into<String>) {
        self.gates.push(Gate::new(name, passed, detail));
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    pub fn passed(&self) -> bool {
        self.gates.iter().all(|g| g.passed)
    }
}
