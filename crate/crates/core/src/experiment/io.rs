//! CSV tables, checksums and run manifests.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::analysis::{Traces, WeakConvergenceReport};
use crate::error::Result;
use crate::integrator::SpaceTimeField;

use super::config::ConfigEcho;

/// 17 significant digits, enough to reproduce any `f64` exactly.
pub fn fmt_value(x: f64) -> String {
    format!("{x:.16e}")
}

/// Header cell for a coordinate, shortest round-trip decimal.
fn coord_header(x: f64) -> String {
    format!("x={x}")
}

/// A numeric table read back from disk.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }
}

fn write_table(path: &Path, header: &[String], rows: impl Iterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_path(path)?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a numeric CSV; empty cells become NaN.
pub fn read_table(path: &Path) -> Result<Table> {
    let mut r = csv::Reader::from_path(path)?;
    let header = r.headers()?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let row = rec
            .iter()
            .map(|c| if c.is_empty() { Ok(f64::NAN) } else { c.parse::<f64>() })
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| crate::error::LabError::Domain(format!("{}: {e}", path.display())))?;
        rows.push(row);
    }
    Ok(Table { header, rows })
}

/// Writes `field_u.csv` and `field_w.csv`: one row per time step, `t` first.
pub fn write_field(dir: &Path, field: &SpaceTimeField) -> Result<(PathBuf, PathBuf)> {
    let grid = &field.grid;
    let u_path = dir.join("field_u.csv");
    let w_path = dir.join("field_w.csv");
    for (path, coords, is_u) in [(&u_path, grid.u_coords(), true), (&w_path, grid.w_coords(), false)] {
        let header: Vec<String> = std::iter::once("t".to_string()).chain(coords.iter().map(|&x| coord_header(x))).collect();
        let rows = (0..=field.time.steps()).map(|k| {
            let vals = if is_u { field.u(k) } else { field.w(k) };
            std::iter::once(fmt_value(field.time.time(k))).chain(vals.iter().map(|&v| fmt_value(v))).collect()
        });
        write_table(path, &header, rows)?;
    }
    Ok((u_path, w_path))
}

pub fn write_traces(path: &Path, tr: &Traces) -> Result<()> {
    let header: Vec<String> = ["t", "energy", "state_norm", "spatial_mean_u"].map(String::from).to_vec();
    let rows = (0..tr.t.len())
        .map(|k| vec![fmt_value(tr.t[k]), fmt_value(tr.energy[k]), fmt_value(tr.state_norm[k]), fmt_value(tr.spatial_mean_u[k])]);
    write_table(path, &header, rows)
}

pub fn write_convergence_csv(path: &Path, report: &WeakConvergenceReport) -> Result<()> {
    let header: Vec<String> =
        ["n", "testfn", "pairing_fine", "pairing_limit", "abs_error", "empirical_order"].map(String::from).to_vec();
    let rows = report.rows.iter().map(|r| {
        vec![
            r.n.to_string(),
            r.testfn.clone(),
            fmt_value(r.pairing_fine),
            fmt_value(r.pairing_limit),
            fmt_value(r.abs_error),
            r.empirical_order.map(fmt_value).unwrap_or_default(),
        ]
    });
    write_table(path, &header, rows)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path)?;
    Ok(Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect())
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub config: ConfigEcho,
    /// File name to SHA-256 of its bytes.
    pub checksums: BTreeMap<String, String>,
    /// Wall-clock seconds per stage, in execution order.
    pub stages: Vec<(String, f64)>,
}

impl RunManifest {
    pub fn new(command: &str, config: ConfigEcho) -> Self {
        Self {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config,
            checksums: BTreeMap::new(),
            stages: Vec::new(),
        }
    }

    pub fn record(&mut self, path: &Path) -> Result<()> {
        let name = path.file_name().map_or_else(|| path.display().to_string(), |n| n.to_string_lossy().into_owned());
        self.checksums.insert(name, sha256_file(path)?);
        Ok(())
    }

    pub fn stage<T>(&mut self, name: &str, f: impl FnOnce() -> Result<T>) -> Result<T> {
        let start = std::time::Instant::now();
        let out = f()?;
        self.stages.push((name.to_string(), start.elapsed().as_secs_f64()));
        Ok(out)
    }
}
