//! Minimal CSV writers for the two export schemas.
//!
//! All fields are numeric or fixed identifiers, so no quoting or escaping
//! is ever required; floats are written in Rust's shortest round-trip
//! form, which keeps exports reproducible byte for byte.
//!
//! Statistic rows: `experiment,f,n,hurst,replicate,statistic,limit_value`
//! (empty `f`/`hurst`/`limit_value` when not applicable).
//! Path rows: `t,value`.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{Context, Result};

use fracvar::GridPath;

/// One exported replication.
#[derive(Clone, Copy, Debug)]
pub struct StatRow {
    pub experiment: &'static str,
    pub f: Option<&'static str>,
    pub n: usize,
    pub hurst: Option<f64>,
    pub replicate: u64,
    pub statistic: f64,
    pub limit_value: Option<f64>,
}

pub fn write_statistic_rows(path: &Path, rows: &[StatRow]) -> Result<()> {
    let mut out = String::with_capacity(rows.len() * 48 + 64);
    out.push_str("experiment,f,n,hurst,replicate,statistic,limit_value\n");
    for row in rows {
        let _ = write!(out, "{},{}", row.experiment, row.f.unwrap_or(""));
        let _ = write!(out, ",{},", row.n);
        if let Some(h) = row.hurst {
            let _ = write!(out, "{h}");
        }
        let _ = write!(out, ",{},{},", row.replicate, row.statistic);
        if let Some(l) = row.limit_value {
            let _ = write!(out, "{l}");
        }
        out.push('\n');
    }
    std::fs::write(path, out).with_context(|| format!("writing CSV {}", path.display()))
}

pub fn write_path_rows(path: &Path, grid: &GridPath) -> Result<()> {
    let n = grid.n();
    let mut out = String::with_capacity(grid.values.len() * 24 + 16);
    out.push_str("t,value\n");
    for (k, v) in grid.values.iter().enumerate() {
        let _ = writeln!(out, "{},{}", k as f64 / n as f64, v);
    }
    std::fs::write(path, out).with_context(|| format!("writing CSV {}", path.display()))
}
