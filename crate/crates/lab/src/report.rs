//! Report assembly and the files written for every run.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use hyperlab_core::disc::{HyperbolicGeodesic, C64};
use hyperlab_core::flow::GeodesicPath;

use crate::config::SCHEMA_VERSION;
use crate::svg::Role;

/// Fixed-width rendering used for every number in a report.
pub fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.10e}")
    } else {
        format!("{x}")
    }
}

pub fn opt_num(x: Option<f64>) -> String {
    x.map_or_else(|| "none".to_string(), num)
}

pub fn point(z: C64) -> String {
    format!("{},{}", num(z.re), num(z.im))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub limit: f64,
    pub pass: bool,
}

impl Check {
    /// `value <= limit`.
    pub fn at_most(name: &str, value: f64, limit: f64) -> Self {
        Check {
            name: name.to_string(),
            value,
            limit,
            pass: value <= limit,
        }
    }

    /// `value >= limit`.
    pub fn at_least(name: &str, value: f64, limit: f64) -> Self {
        Check {
            name: name.to_string(),
            value,
            limit,
            pass: value >= limit,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    Measured,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Measured => "measured",
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }
}

#[derive(Debug, Clone)]
pub struct NamedPath {
    pub name: String,
    pub role: Role,
    pub points: Vec<C64>,
    pub csv: String,
}

impl NamedPath {
    pub fn geodesic(name: impl Into<String>, role: Role, path: &GeodesicPath) -> Self {
        NamedPath {
            name: name.into(),
            role,
            points: path.points(),
            csv: path.to_csv(),
        }
    }

    /// Samples `line` on `[t0, t1]`.
    pub fn line(name: impl Into<String>, role: Role, line: &HyperbolicGeodesic, t0: f64, t1: f64) -> Self {
        let n = (((t1 - t0) / 0.05).ceil() as usize).max(2);
        let mut csv = String::from("t,re,im\n");
        let mut points = Vec::with_capacity(n + 1);
        for k in 0..=n {
            let t = t0 + (t1 - t0) * k as f64 / n as f64;
            let z = line.point_c(t);
            let _ = writeln!(csv, "{},{},{}", num(t), num(z.re), num(z.im));
            points.push(z);
        }
        NamedPath {
            name: name.into(),
            role,
            points,
            csv,
        }
    }

    pub fn polyline(name: impl Into<String>, role: Role, points: Vec<C64>) -> Self {
        let mut csv = String::from("re,im\n");
        for z in &points {
            let _ = writeln!(csv, "{},{}", num(z.re), num(z.im));
        }
        NamedPath {
            name: name.into(),
            role,
            points,
            csv,
        }
    }
}

/// Everything an experiment produces.
#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub results: Vec<(String, String)>,
    pub checks: Vec<Check>,
    pub table: Table,
    /// Free-form blocks appended to the text report.
    pub sections: Vec<(String, String)>,
    pub paths: Vec<NamedPath>,
}

impl Outcome {
    pub fn result(&mut self, key: &str, value: impl Into<String>) {
        self.results.push((key.to_string(), value.into()));
    }

    pub fn status(&self) -> Status {
        if self.checks.is_empty() {
            Status::Measured
        } else if self.checks.iter().all(|c| c.pass) {
            Status::Pass
        } else {
            Status::Fail
        }
    }
}

/// Header shared by every report file.
#[derive(Debug, Clone)]
pub struct Header {
    pub kind: String,
    pub seed: u64,
    pub metric: String,
    pub c_f: f64,
    pub d_est: f64,
    pub d_source: String,
    pub config: Vec<(&'static str, String)>,
}

impl Header {
    fn lines(&self, status: Status) -> Vec<(String, String)> {
        vec![
            ("schema_version".into(), SCHEMA_VERSION.to_string()),
            ("kind".into(), self.kind.clone()),
            ("seed".into(), self.seed.to_string()),
            ("metric".into(), self.metric.clone()),
            ("c_F".into(), num(self.c_f)),
            ("D_est".into(), num(self.d_est)),
            ("D_est_source".into(), self.d_source.clone()),
            ("status".into(), status.as_str().into()),
        ]
    }
}

pub fn report_text(header: &Header, outcome: &Outcome) -> String {
    let mut out = String::new();
    for (k, v) in header.lines(outcome.status()) {
        let _ = writeln!(out, "{k} = {v}");
    }
    out.push_str("\n[config]\n");
    for (k, v) in &header.config {
        let _ = writeln!(out, "{k} = {v}");
    }
    out.push_str("\n[results]\n");
    for (k, v) in &outcome.results {
        let _ = writeln!(out, "{k} = {v}");
    }
    if !outcome.checks.is_empty() {
        out.push_str("\n[checks]\n");
        for c in &outcome.checks {
            let verdict = if c.pass { "pass" } else { "FAIL" };
            let _ = writeln!(out, "{} = {} (limit {}) {verdict}", c.name, num(c.value), num(c.limit));
        }
    }
    for (title, body) in &outcome.sections {
        let _ = write!(out, "\n[{title}]\n{body}");
        if !body.ends_with('\n') {
            out.push('\n');
        }
    }
    out
}

/// The table as CSV, preceded by `#` lines carrying the header and resolved config.
pub fn report_csv(header: &Header, outcome: &Outcome) -> String {
    let mut out = String::new();
    for (k, v) in header.lines(outcome.status()) {
        let _ = writeln!(out, "# {k} = {v}");
    }
    for (k, v) in &header.config {
        let _ = writeln!(out, "# config.{k} = {v}");
    }
    let _ = writeln!(out, "{}", outcome.table.header.join(","));
    for r in &outcome.table.rows {
        let _ = writeln!(out, "{}", r.join(","));
    }
    out
}

/// Writes `report.txt`, `report.csv` and `paths/*.csv` into `dir`.
pub fn write_reports(dir: &Path, header: &Header, outcome: &Outcome) -> io::Result<()> {
    fs::create_dir_all(dir.join("paths"))?;
    fs::write(dir.join("report.txt"), report_text(header, outcome))?;
    fs::write(dir.join("report.csv"), report_csv(header, outcome))?;
    for p in &outcome.paths {
        fs::write(dir.join("paths").join(format!("{}.csv", p.name)), &p.csv)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn header() -> Header {
        Header {
            kind: "width".into(),
            seed: 3,
            metric: "hyperbolic".into(),
            c_f: 1.05,
            d_est: 0.0,
            d_source: "config".into(),
            config: vec![("fan", "8".into())],
        }
    }

    #[test]
    fn status_follows_checks() {
        let mut o = Outcome::default();
        assert_eq!(o.status(), Status::Measured);
        o.checks.push(Check::at_most("x", 1.0, 2.0));
        assert_eq!(o.status(), Status::Pass);
        o.checks.push(Check::at_least("y", 1.0, 2.0));
        assert_eq!(o.status(), Status::Fail);
    }

    #[test]
    fn reports_embed_the_header() {
        let mut o = Outcome::default();
        o.table = Table::new(&["a", "b"]);
        o.table.push(vec![num(1.0), num(2.0)]);
        let text = report_text(&header(), &o);
        assert!(text.starts_with("schema_version = 1\nkind = width\nseed = 3\n"));
        assert!(text.contains("c_F = 1.0500000000e0"));
        let csv = report_csv(&header(), &o);
        assert!(csv.contains("# config.fan = 8\na,b\n1.0000000000e0,2.0000000000e0\n"));
    }
}
