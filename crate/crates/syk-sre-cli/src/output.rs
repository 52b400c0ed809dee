//! CSV tables and the flat key-value run manifest.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use sha2::{Digest, Sha256};
use syk_sre::sweep_driver::BranchCurve;

pub const CSV_HEADER: &str = "beta,betaJ,action_per_N,m2_per_N,s2_per_N,m2tilde_per_N,branch,converged";

/// One CSV line. Quantities a mode does not produce are NaN.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub beta: f64,
    pub beta_j: f64,
    pub action: f64,
    pub m2: f64,
    pub s2: f64,
    pub m2_tilde: f64,
    pub branch: String,
    pub converged: bool,
}

impl Row {
    pub fn blank(beta: f64, energy_unit: f64, branch: &str) -> Self {
        Self {
            beta,
            beta_j: beta * energy_unit,
            action: f64::NAN,
            m2: f64::NAN,
            s2: f64::NAN,
            m2_tilde: f64::NAN,
            branch: branch.to_string(),
            converged: false,
        }
    }
}

/// 17 significant digits, so every double round-trips.
fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

pub fn render_csv(rows: &[Row], manifest_hash: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# manifest-sha256: {manifest_hash}");
    let _ = writeln!(s, "{CSV_HEADER}");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            num(r.beta),
            num(r.beta_j),
            num(r.action),
            num(r.m2),
            num(r.s2),
            num(r.m2_tilde),
            r.branch,
            r.converged
        );
    }
    s
}

pub fn emit_csv(rows: &[Row], path: &Path, manifest_hash: &str) -> io::Result<()> {
    fs::write(path, render_csv(rows, manifest_hash))
}

/// Rows from a branch curve; `fill` places the observable in its column.
pub fn curve_rows(curve: &BranchCurve, energy_unit: f64, branch: &str, fill: impl Fn(&mut Row, f64)) -> Vec<Row> {
    (0..curve.len())
        .map(|k| {
            let mut r = Row::blank(curve.beta_values[k], energy_unit, branch);
            r.action = curve.action_values[k];
            fill(&mut r, curve.observable_values[k]);
            r.converged = curve.converged[k];
            r
        })
        .collect()
}

/// Flat `key = value` manifest. The first block (software + config echo) is
/// deterministic and its SHA-256 is stamped into every CSV.
#[derive(Debug, Clone, Default)]
pub struct RunManifest {
    header: Vec<(String, String)>,
    body: Vec<(String, String)>,
}

impl RunManifest {
    pub fn new(config_text: &str) -> Self {
        let mut header = vec![("software".to_string(), format!("syk-sre {}", env!("CARGO_PKG_VERSION")))];
        for line in config_text.lines() {
            if let Some((k, v)) = line.split_once(" = ") {
                header.push((format!("config.{k}"), v.to_string()));
            }
        }
        Self { header, body: Vec::new() }
    }

    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        for (k, v) in &self.header {
            h.update(k.as_bytes());
            h.update(b"=");
            h.update(v.as_bytes());
            h.update(b"\n");
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn set(&mut self, key: impl Into<String>, value: impl ToString) {
        self.body.push((key.into(), value.to_string()));
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        for (k, v) in self.header.iter().chain(&self.body) {
            let _ = writeln!(s, "{k} = {v}");
        }
        let _ = writeln!(s, "manifest_sha256 = {}", self.hash());
        s
    }

    pub fn write(&self, path: &Path) -> io::Result<()> {
        fs::write(path, self.render())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_table_is_header_only() {
        let s = render_csv(&[], "abc");
        assert_eq!(s, format!("# manifest-sha256: abc\n{CSV_HEADER}\n"));
    }

    #[test]
    fn numbers_round_trip() {
        let x = 0.1 + 0.2;
        let s = num(x);
        assert_eq!(s.parse::<f64>().unwrap(), x);
        assert_eq!(num(f64::NAN), "NaN");
    }

    #[test]
    fn hash_ignores_run_body() {
        let mut a = RunManifest::new("mode = ed\nn = 3\n");
        let b = RunManifest::new("mode = ed\nn = 3\n");
        a.set("wall_time_s", 1.5);
        assert_eq!(a.hash(), b.hash());
        assert_ne!(a.hash(), RunManifest::new("mode = ed\nn = 4\n").hash());
    }
}
