use crate::output::{num, Manifest, Table};
use crate::CliError;
use std::path::Path;

/// Largest disagreement in one column of a table present in both runs.
#[derive(Debug, Clone, PartialEq)]
pub struct ColumnDiff {
    pub table: String,
    pub column: String,
    pub max_abs: f64,
    /// Cells outside `|a − b| ≤ tol · max(1, |a|, |b|)`; text cells count
    /// when unequal.
    pub cells: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareReport {
    pub diffs: Vec<ColumnDiff>,
    /// Tables whose row counts differ (different grids); not diffed cellwise.
    pub reshaped: Vec<String>,
    /// Probe-by-probe order estimates when the runs used different spacings.
    pub orders: Option<Table>,
}

impl CompareReport {
    /// Same resolution and no differences beyond tolerance.
    pub fn is_clean(&self) -> bool {
        self.orders.is_some() || self.diffs.is_empty()
    }

    pub fn diff_table(&self) -> Table {
        let mut t = Table::new("diff", &["table", "column", "max_abs", "cells"]);
        for d in &self.diffs {
            t.push(vec![d.table.clone(), d.column.clone(), num(d.max_abs), d.cells.to_string()]);
        }
        t
    }
}

fn load_table(dir: &Path, name: &str) -> Result<Table, CliError> {
    let path = dir.join(name);
    let text = std::fs::read_to_string(&path).map_err(|e| CliError::Schema(format!("{}: {e}", path.display())))?;
    Table::parse(name.trim_end_matches(".csv"), &text)
}

fn diff_tables(a: &Table, b: &Table, tol: f64) -> Vec<ColumnDiff> {
    let mut out = Vec::new();
    for (c, col) in a.header.iter().enumerate() {
        let (mut max_abs, mut cells) = (0.0f64, 0);
        for (ra, rb) in a.rows.iter().zip(&b.rows) {
            let (sa, sb) = (&ra[c], &rb[c]);
            if sa == sb {
                continue;
            }
            match (sa.parse::<f64>(), sb.parse::<f64>()) {
                (Ok(x), Ok(y)) => {
                    let d = (x - y).abs();
                    if d.is_nan() {
                        cells += 1;
                        continue;
                    }
                    max_abs = max_abs.max(d);
                    if d > tol * 1f64.max(x.abs()).max(y.abs()) {
                        cells += 1;
                    }
                }
                _ => cells += 1,
            }
        }
        if cells > 0 {
            out.push(ColumnDiff { table: a.name.clone(), column: col.clone(), max_abs, cells });
        }
    }
    out
}

/// Order table from probes measured at different spacings. Errors give
/// `log(e_a/e_b)/log(h_a/h_b)`; plain values give a Richardson estimate
/// assuming second order.
fn order_table(a: &Manifest, b: &Manifest) -> Option<Table> {
    let mut t = Table::new("orders", &["probe", "h_a", "h_b", "value_a", "value_b", "observed_order", "richardson", "error_estimate_b"]);
    for pa in &a.probes {
        let Some(pb) = b.probes.iter().find(|p| p.name == pa.name) else { continue };
        if pa.spacing == pb.spacing {
            continue;
        }
        let ratio = pa.spacing / pb.spacing;
        let (order, rich, err_b) = if pa.is_error {
            let o = (pa.value / pb.value).ln() / ratio.ln();
            (o.is_finite().then_some(o), None, Some(pb.value))
        } else {
            let r = pb.value + (pb.value - pa.value) / (ratio * ratio - 1.0);
            (None, Some(r), Some((r - pb.value).abs()))
        };
        let opt = |v: Option<f64>| v.map_or(String::new(), num);
        t.push(vec![pa.name.clone(), num(pa.spacing), num(pb.spacing), num(pa.value), num(pb.value), opt(order), opt(rich), opt(err_b)]);
    }
    (!t.rows.is_empty()).then_some(t)
}

/// Cell-by-cell comparison of two run directories of the same kind.
pub fn compare(dir_a: &Path, dir_b: &Path, tol: f64) -> Result<CompareReport, CliError> {
    let (a, b) = (Manifest::load(dir_a)?, Manifest::load(dir_b)?);
    if a.kind != b.kind {
        return Err(CliError::Schema(format!("runs are of different kinds: {} vs {}", a.kind.name(), b.kind.name())));
    }
    let mut diffs = Vec::new();
    let mut reshaped = Vec::new();
    for fa in a.files.iter().filter(|f| f.name.ends_with(".csv")) {
        let Some(fb) = b.files.iter().find(|f| f.name == fa.name) else {
            return Err(CliError::Schema(format!("{} missing from {}", fa.name, dir_b.display())));
        };
        if fa.sha256 == fb.sha256 {
            continue;
        }
        let (ta, tb) = (load_table(dir_a, &fa.name)?, load_table(dir_b, &fb.name)?);
        if ta.header != tb.header {
            return Err(CliError::Schema(format!("{}: column sets differ", fa.name)));
        }
        if ta.rows.len() != tb.rows.len() {
            reshaped.push(ta.name.clone());
            continue;
        }
        diffs.extend(diff_tables(&ta, &tb, tol));
    }
    Ok(CompareReport { diffs, reshaped, orders: order_table(&a, &b) })
}
