use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};

use super::config::{Format, RunConfig};
use crate::error::{GeomError, Result};

pub const SCHEMA: &str = "nullgeom.report/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Skipped,
}

impl Status {
    pub fn exit_code(self) -> u8 {
        match self {
            Status::Fail => 1,
            Status::Pass | Status::Skipped => 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointOut {
    pub surface: String,
    pub u: Vec<f64>,
    pub eigenvalues: Vec<f64>,
    pub s1_dot: f64,
    pub s1: f64,
    pub theta_xi_plus: f64,
    pub theta_n_plus: f64,
    pub class: String,
    /// Identity residuals, aggregated by max into [`Aggregates::max_residual`].
    pub residuals: BTreeMap<String, f64>,
    /// Other per-point quantities.
    pub values: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Check {
    /// Passes when `value ≤ tolerance`.
    pub fn at_most(name: impl Into<String>, value: f64, tolerance: f64) -> Check {
        Check { name: name.into(), value, tolerance, pass: value <= tolerance }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Aggregates {
    pub point_count: usize,
    pub max_residual: BTreeMap<String, f64>,
    pub histogram: BTreeMap<String, usize>,
}

impl Aggregates {
    pub fn from_points(points: &[PointOut]) -> Aggregates {
        let mut max_residual = BTreeMap::new();
        let mut histogram = BTreeMap::new();
        for p in points {
            for (k, v) in &p.residuals {
                let e = max_residual.entry(k.clone()).or_insert(0.0f64);
                *e = e.max(*v);
            }
            *histogram.entry(p.class.clone()).or_insert(0) += 1;
        }
        Aggregates { point_count: points.len(), max_residual, histogram }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema: String,
    pub command: String,
    pub arguments: serde_json::Value,
    pub config: RunConfig,
    pub status: Status,
    pub checks: Vec<Check>,
    pub verdict: Vec<String>,
    pub aggregates: Aggregates,
    pub details: serde_json::Value,
    pub notes: Vec<String>,
    pub points: Vec<PointOut>,
}

impl Report {
    /// Builds aggregates from `points`; status fails when any check fails.
    pub fn new(command: &str, arguments: serde_json::Value, config: &RunConfig, points: Vec<PointOut>) -> Report {
        Report {
            schema: SCHEMA.into(),
            command: command.into(),
            arguments,
            config: config.clone(),
            status: Status::Pass,
            checks: Vec::new(),
            verdict: Vec::new(),
            aggregates: Aggregates::from_points(&points),
            details: serde_json::Value::Null,
            notes: Vec::new(),
            points,
        }
    }

    pub fn push_check(&mut self, check: Check) {
        if !check.pass {
            self.status = Status::Fail;
        }
        self.checks.push(check);
    }

    /// One check per aggregated residual whose name is in `tolerances`.
    pub fn check_residuals(&mut self, tolerances: &[(&str, f64)]) {
        for &(name, tol) in tolerances {
            if let Some(&v) = self.aggregates.max_residual.get(name) {
                self.push_check(Check::at_most(name, v, tol));
            }
        }
    }

    /// True when the stored aggregates and status match a recomputation from the file's own records.
    pub fn is_consistent(&self) -> bool {
        let status_ok = match self.status {
            Status::Fail => self.checks.iter().any(|c| !c.pass),
            Status::Pass => self.checks.iter().all(|c| c.pass),
            Status::Skipped => true,
        };
        self.schema == SCHEMA
            && Aggregates::from_points(&self.points) == self.aggregates
            && self.checks.iter().all(|c| c.pass == (c.value <= c.tolerance))
            && status_ok
    }

    pub fn to_json(&self) -> String {
        let mut buf = Vec::new();
        let mut ser = serde_json::Serializer::with_formatter(&mut buf, SciFormatter::default());
        self.serialize(&mut ser).expect("report serializes");
        buf.push(b'\n');
        String::from_utf8(buf).expect("JSON is UTF-8")
    }

    pub fn from_json(text: &str) -> Result<Report> {
        serde_json::from_str(text).map_err(|e| GeomError::Config(format!("report: {e}")))
    }

    /// Per-point CSV: fixed columns, then one column per residual and value name in sorted order.
    pub fn to_csv(&self) -> String {
        let residuals: BTreeSet<&String> = self.points.iter().flat_map(|p| p.residuals.keys()).collect();
        let values: BTreeSet<&String> = self.points.iter().flat_map(|p| p.values.keys()).collect();
        let mut out = format!("# schema={SCHEMA} command={} status={:?}\n", self.command, self.status);
        out.push_str("surface,u,eigenvalues,s1_dot,s1,theta_xi_plus,theta_n_plus,class");
        for k in &residuals {
            let _ = write!(out, ",residual.{k}");
        }
        for k in &values {
            let _ = write!(out, ",value.{k}");
        }
        out.push('\n');
        let join = |v: &[f64]| v.iter().map(|x| format!("{x:.16e}")).collect::<Vec<_>>().join(";");
        for p in &self.points {
            let _ = write!(
                out,
                "\"{}\",{},{},{:.16e},{:.16e},{:.16e},{:.16e},{}",
                p.surface.replace('"', "\"\""),
                join(&p.u),
                join(&p.eigenvalues),
                p.s1_dot,
                p.s1,
                p.theta_xi_plus,
                p.theta_n_plus,
                p.class
            );
            for k in &residuals {
                out.push(',');
                if let Some(v) = p.residuals.get(*k) {
                    let _ = write!(out, "{v:.16e}");
                }
            }
            for k in &values {
                out.push(',');
                if let Some(v) = p.values.get(*k) {
                    let _ = write!(out, "{v:.16e}");
                }
            }
            out.push('\n');
        }
        out
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => self.to_json(),
            Format::Csv => self.to_csv(),
        }
    }
}

/// Writes `text` to `path`, or to stdout when no path is given.
pub fn emit(text: &str, path: Option<&Path>) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text)
            .map_err(|e| GeomError::Io { path: p.display().to_string(), message: e.to_string() }),
        None => {
            use std::io::Write;
            let mut out = io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| GeomError::Io { path: "<stdout>".into(), message: e.to_string() })
        }
    }
}

/// Pretty JSON with every float in `{:.16e}` form (17 significant digits).
#[derive(Default)]
struct SciFormatter {
    inner: PrettyFormatter<'static>,
}

impl Formatter for SciFormatter {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        write!(w, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, f64::from(value))
    }

    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.begin_array(w)
    }

    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_array(w)
    }

    fn begin_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.inner.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_array_value(w)
    }

    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.begin_object(w)
    }

    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_object(w)
    }

    fn begin_object_key<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.inner.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_object_value(w)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn point(class: &str, r: f64) -> PointOut {
        PointOut {
            surface: "s".into(),
            u: vec![0.1, 1.0 / 3.0],
            eigenvalues: vec![0.0, 1.0],
            s1_dot: -1e-300,
            s1: 2.0,
            theta_xi_plus: 0.0,
            theta_n_plus: -2.0,
            class: class.into(),
            residuals: [("a".to_string(), r)].into(),
            values: BTreeMap::new(),
        }
    }

    #[test]
    fn floats_use_seventeen_digits_and_round_trip() {
        let mut r = Report::new("t", serde_json::Value::Null, &RunConfig::default(), vec![point("MTS", 0.1)]);
        r.push_check(Check::at_most("a", 0.1, 1.0));
        let text = r.to_json();
        assert!(text.contains("3.3333333333333331e-1"), "{text}");
        assert!(text.contains(SCHEMA));
        let back = Report::from_json(&text).unwrap();
        assert_eq!(back, r);
        assert!(back.is_consistent());
    }

    #[test]
    fn tampered_aggregates_are_detected() {
        let mut r = Report::new(
            "t",
            serde_json::Value::Null,
            &RunConfig::default(),
            vec![point("MTS", 0.1), point("MOTS", 0.3)],
        );
        assert_eq!(r.aggregates.max_residual["a"], 0.3);
        assert_eq!(r.aggregates.histogram["MTS"], 1);
        r.check_residuals(&[("a", 0.2)]);
        assert_eq!(r.status, Status::Fail);
        assert!(r.is_consistent());
        r.aggregates.max_residual.insert("a".into(), 0.2);
        assert!(!r.is_consistent());
    }

    #[test]
    fn csv_has_header_and_rows() {
        let r = Report::new("t", serde_json::Value::Null, &RunConfig::default(), vec![point("MTS", 0.1)]);
        let csv = r.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert!(lines[0].contains(SCHEMA));
        assert_eq!(lines[1], "surface,u,eigenvalues,s1_dot,s1,theta_xi_plus,theta_n_plus,class,residual.a");
        assert_eq!(lines.len(), 3);
    }
}
