//! Check records, run metadata and their JSON / CSV serialization.
//!
//! Floating-point numbers are written with 17 significant digits so that
//! every `f64` round-trips; non-finite values become JSON `null`.

use std::io::Write;

use serde_json::{Map, Number, Value};

use crate::error::CliError;

/// Version of the JSON report layout.
pub const SCHEMA_VERSION: u32 = 1;

/// How `observed` is compared with `expected`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Comparison {
    /// `|observed − expected| ≤ tolerance`.
    Absolute,
    /// `|observed − expected| ≤ tolerance · |expected|`, or `≤ tolerance`
    /// when `expected` is zero.
    Relative,
    /// `observed > expected` (tolerance is informational).
    Greater,
}

impl Comparison {
    pub fn as_str(self) -> &'static str {
        match self {
            Comparison::Absolute => "absolute",
            Comparison::Relative => "relative",
            Comparison::Greater => "greater",
        }
    }
}

/// One named check.
#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub group: String,
    pub name: String,
    pub expected: f64,
    pub observed: f64,
    pub tolerance: f64,
    pub comparison: Comparison,
    pub pass: bool,
}

impl Record {
    pub fn new(group: &str, name: impl Into<String>, expected: f64, observed: f64, tolerance: f64, comparison: Comparison) -> Record {
        let diff = (observed - expected).abs();
        let pass = match comparison {
            Comparison::Absolute => diff <= tolerance,
            Comparison::Relative => {
                let scale = if expected == 0.0 { 1.0 } else { expected.abs() };
                diff <= tolerance * scale
            }
            Comparison::Greater => observed > expected,
        };
        Record {
            group: group.to_string(),
            name: name.into(),
            expected,
            observed,
            tolerance,
            comparison,
            pass,
        }
    }

    /// A residual that should vanish: `|observed| ≤ tolerance`.
    pub fn residual(group: &str, name: impl Into<String>, observed: f64, tolerance: f64) -> Record {
        Record::new(group, name, 0.0, observed, tolerance, Comparison::Absolute)
    }

    pub fn relative(group: &str, name: impl Into<String>, expected: f64, observed: f64, tolerance: f64) -> Record {
        Record::new(group, name, expected, observed, tolerance, Comparison::Relative)
    }

    /// The error measure used by the comparison.
    pub fn error(&self) -> f64 {
        let diff = (self.observed - self.expected).abs();
        match self.comparison {
            Comparison::Relative if self.expected != 0.0 => diff / self.expected.abs(),
            _ => diff,
        }
    }
}

/// Per-α numerical settings of a kernel run.
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaMetadata {
    pub alpha: f64,
    pub degree: usize,
    pub radial_order: usize,
    pub angular_order: usize,
    pub cutoff_radius: Option<f64>,
    pub tail_estimate: Option<f64>,
    pub condition_estimate: f64,
    pub max_convergence: f64,
}

/// Run description.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Metadata {
    pub command: String,
    pub model: String,
    pub seed: u64,
    pub alphas: Vec<f64>,
    pub points: Vec<Vec<(f64, f64)>>,
    pub runs: Vec<AlphaMetadata>,
    /// Free-form extra fields, e.g. fit residuals.
    pub extra: Vec<(String, f64)>,
}

/// Full output of one command.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub metadata: Metadata,
    pub records: Vec<Record>,
}

/// Output format.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

/// `f64` as a JSON number with 17 significant digits; `null` if not finite.
pub fn number(x: f64) -> Value {
    if !x.is_finite() {
        return Value::Null;
    }
    let text = format!("{x:.16e}");
    match text.parse::<Number>() {
        Ok(n) => Value::Number(n),
        Err(_) => Value::Null,
    }
}

fn opt_number(x: Option<f64>) -> Value {
    x.map_or(Value::Null, number)
}

impl Report {
    pub fn new(metadata: Metadata, records: Vec<Record>) -> Report {
        Report { metadata, records }
    }

    /// True iff every record passes.
    pub fn pass(&self) -> bool {
        self.records.iter().all(|r| r.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Record> {
        self.records.iter().filter(|r| !r.pass)
    }

    pub fn to_json(&self) -> Value {
        let m = &self.metadata;
        let mut meta = Map::new();
        meta.insert("command".into(), Value::String(m.command.clone()));
        meta.insert("model".into(), Value::String(m.model.clone()));
        meta.insert("seed".into(), Value::Number(m.seed.into()));
        meta.insert("alphas".into(), Value::Array(m.alphas.iter().map(|&a| number(a)).collect()));
        meta.insert(
            "points".into(),
            Value::Array(
                m.points
                    .iter()
                    .map(|p| Value::Array(p.iter().map(|&(re, im)| Value::Array(vec![number(re), number(im)])).collect()))
                    .collect(),
            ),
        );
        let runs = m
            .runs
            .iter()
            .map(|r| {
                let mut o = Map::new();
                o.insert("alpha".into(), number(r.alpha));
                o.insert("degree".into(), Value::Number(r.degree.into()));
                o.insert("radial_order".into(), Value::Number(r.radial_order.into()));
                o.insert("angular_order".into(), Value::Number(r.angular_order.into()));
                o.insert("cutoff_radius".into(), opt_number(r.cutoff_radius));
                o.insert("tail_estimate".into(), opt_number(r.tail_estimate));
                o.insert("condition_estimate".into(), number(r.condition_estimate));
                o.insert("max_convergence".into(), number(r.max_convergence));
                Value::Object(o)
            })
            .collect();
        meta.insert("runs".into(), Value::Array(runs));
        let mut extra = Map::new();
        for (k, v) in &m.extra {
            extra.insert(k.clone(), number(*v));
        }
        meta.insert("extra".into(), Value::Object(extra));

        let records = self
            .records
            .iter()
            .map(|r| {
                let mut o = Map::new();
                o.insert("group".into(), Value::String(r.group.clone()));
                o.insert("name".into(), Value::String(r.name.clone()));
                o.insert("expected".into(), number(r.expected));
                o.insert("observed".into(), number(r.observed));
                o.insert("tolerance".into(), number(r.tolerance));
                o.insert("comparison".into(), Value::String(r.comparison.as_str().into()));
                o.insert("pass".into(), Value::Bool(r.pass));
                Value::Object(o)
            })
            .collect();

        let mut root = Map::new();
        root.insert("schema_version".into(), Value::Number(SCHEMA_VERSION.into()));
        root.insert("pass".into(), Value::Bool(self.pass()));
        root.insert("metadata".into(), Value::Object(meta));
        root.insert("records".into(), Value::Array(records));
        Value::Object(root)
    }

    pub fn write_json<W: Write>(&self, mut w: W) -> Result<(), CliError> {
        serde_json::to_writer_pretty(&mut w, &self.to_json()).map_err(|e| CliError::Io(e.to_string()))?;
        writeln!(w).map_err(|e| CliError::Io(e.to_string()))
    }

    /// One row per record.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), CliError> {
        let mut out = csv::Writer::from_writer(w);
        let io = |e: csv::Error| CliError::Io(e.to_string());
        out.write_record(["group", "name", "expected", "observed", "tolerance", "comparison", "pass"])
            .map_err(io)?;
        for r in &self.records {
            out.write_record([
                r.group.as_str(),
                r.name.as_str(),
                &format!("{:.16e}", r.expected),
                &format!("{:.16e}", r.observed),
                &format!("{:.16e}", r.tolerance),
                r.comparison.as_str(),
                if r.pass { "true" } else { "false" },
            ])
            .map_err(io)?;
        }
        out.flush().map_err(|e| CliError::Io(e.to_string()))
    }

    pub fn write<W: Write>(&self, w: W, format: Format) -> Result<(), CliError> {
        match format {
            Format::Json => self.write_json(w),
            Format::Csv => self.write_csv(w),
        }
    }

    /// Short human-readable summary.
    pub fn summary(&self) -> String {
        let failed: Vec<_> = self.failures().collect();
        let mut s = format!(
            "{}: {} records, {} failed",
            self.metadata.command,
            self.records.len(),
            failed.len()
        );
        for r in failed {
            s.push_str(&format!(
                "\n  FAIL {}/{}: observed {:.6e}, expected {:.6e}, tolerance {:.3e} ({})",
                r.group,
                r.name,
                r.observed,
                r.expected,
                r.tolerance,
                r.comparison.as_str()
            ));
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn record_comparisons() {
        assert!(Record::relative("g", "a", 1.0, 1.019, 0.02).pass);
        assert!(!Record::relative("g", "a", 1.0, 1.021, 0.02).pass);
        assert!(Record::relative("g", "zero", 0.0, 0.01, 0.02).pass);
        assert!(!Record::residual("g", "r", 1e-9, 1e-10).pass);
        assert!(!Record::residual("g", "nan", f64::NAN, 1.0).pass);
        assert!(Record::new("g", "pd", 0.0, 0.5, 0.0, Comparison::Greater).pass);
    }

    #[test]
    fn json_numbers_have_17_digits() {
        assert_eq!(number(0.1).to_string(), "1.0000000000000001e-1");
        assert_eq!(number(f64::NAN), Value::Null);
        let v: f64 = number(std::f64::consts::PI).to_string().parse().unwrap();
        assert_eq!(v, std::f64::consts::PI);
    }

    #[test]
    fn overall_pass_requires_all_records() {
        let mut r = Report::new(Metadata::default(), vec![Record::residual("g", "a", 0.0, 1.0)]);
        assert!(r.pass());
        r.records.push(Record::residual("g", "b", 2.0, 1.0));
        assert!(!r.pass());
        let j = r.to_json();
        assert_eq!(j["schema_version"], 1);
        assert_eq!(j["pass"], false);
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 3);
    }
}
