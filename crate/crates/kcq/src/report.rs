//! Report rows, pass/fail gates and CSV/JSON emission.
//!
//! CSV header (fixed):
//! `experiment,point,parameters,quantity,estimate,stdErr,samples,reference,gate,tolerance,pass`.
//! Floats are written as `{:.16e}` (17 significant digits); absent optional
//! fields are empty cells. JSON is an array of the same records, with floats
//! in shortest round-trip form.

use std::io::Write;
use std::path::Path;

use kcq_core::mc::Estimate;
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

pub const CSV_HEADER: [&str; 11] = [
    "experiment",
    "point",
    "parameters",
    "quantity",
    "estimate",
    "stdErr",
    "samples",
    "reference",
    "gate",
    "tolerance",
    "pass",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// How an estimate is judged against its reference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gate {
    /// `|x − p| ≤ k·√(p(1−p)/samples)`.
    BinomialSigma { k: f64 },
    /// `|x − ref| ≤ k·stdErr`.
    Sigma { k: f64 },
    /// `x ≤ ref`.
    AtMost,
    /// `x + k·stdErr ≥ ref`.
    AtLeast { k: f64 },
    /// `x − k·stdErr > ref`.
    Above { k: f64 },
    /// `lo ≤ x ≤ hi`.
    Within { lo: f64, hi: f64 },
    /// `lo < x < hi`.
    Between { lo: f64, hi: f64 },
    /// `x == ref`.
    Equal,
}

impl Gate {
    fn name(&self) -> &'static str {
        match self {
            Gate::BinomialSigma { .. } => "binomialSigma",
            Gate::Sigma { .. } => "sigma",
            Gate::AtMost => "atMost",
            Gate::AtLeast { .. } => "atLeast",
            Gate::Above { .. } => "above",
            Gate::Within { .. } => "within",
            Gate::Between { .. } => "between",
            Gate::Equal => "equal",
        }
    }
}

/// A measured quantity before it is stamped with experiment and point.
#[derive(Debug, Clone, PartialEq)]
pub struct Measurement {
    pub quantity: String,
    pub estimate: Estimate,
    pub reference: Option<f64>,
    pub gate: Option<Gate>,
}

impl Measurement {
    pub fn new(quantity: impl Into<String>, estimate: Estimate) -> Self {
        Self {
            quantity: quantity.into(),
            estimate,
            reference: None,
            gate: None,
        }
    }

    pub fn exact(quantity: impl Into<String>, value: f64) -> Self {
        Self::new(quantity, Estimate::exact(value))
    }

    /// Attach a reference without a gate.
    pub fn reference(mut self, r: f64) -> Self {
        self.reference = Some(r);
        self
    }

    pub fn gated(mut self, reference: f64, gate: Gate) -> Self {
        self.reference = Some(reference);
        self.gate = Some(gate);
        self
    }

    pub fn within(self, lo: f64, hi: f64) -> Self {
        self.gated(0.5 * (lo + hi), Gate::Within { lo, hi })
    }

    pub fn between(self, lo: f64, hi: f64) -> Self {
        self.gated(0.5 * (lo + hi), Gate::Between { lo, hi })
    }

    /// (tolerance, pass) under the gate, if any.
    fn judge(&self) -> (Option<f64>, Option<bool>) {
        let (Some(r), Some(g)) = (self.reference, self.gate) else {
            return (None, None);
        };
        let x = self.estimate.value;
        let se = self.estimate.std_err;
        let (tol, pass) = match g {
            Gate::BinomialSigma { k } => {
                let t = k * self.estimate.binomial_sigma(r);
                (t, (x - r).abs() <= t)
            }
            Gate::Sigma { k } => (k * se, (x - r).abs() <= k * se),
            Gate::AtMost => (0.0, x <= r),
            Gate::AtLeast { k } => (k * se, x + k * se >= r),
            Gate::Above { k } => (k * se, x - k * se > r),
            Gate::Within { lo, hi } => (0.5 * (hi - lo), lo <= x && x <= hi),
            Gate::Between { lo, hi } => (0.5 * (hi - lo), lo < x && x < hi),
            Gate::Equal => (0.0, x == r),
        };
        (Some(tol), Some(pass && x.is_finite()))
    }

    pub fn into_row(self, experiment: &str, point: u64, parameters: &str) -> ReportRow {
        let (tolerance, pass) = self.judge();
        ReportRow {
            experiment: experiment.to_string(),
            point,
            parameters: parameters.to_string(),
            quantity: self.quantity,
            estimate: self.estimate.value,
            std_err: self.estimate.std_err,
            samples: self.estimate.samples,
            reference: self.reference,
            gate: self.gate.map(|g| g.name().to_string()),
            tolerance,
            pass,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ReportRow {
    pub experiment: String,
    pub point: u64,
    pub parameters: String,
    pub quantity: String,
    pub estimate: f64,
    pub std_err: f64,
    pub samples: u64,
    pub reference: Option<f64>,
    pub gate: Option<String>,
    pub tolerance: Option<f64>,
    pub pass: Option<bool>,
}

impl ReportRow {
    pub fn is_gated(&self) -> bool {
        self.pass.is_some()
    }
}

/// True when every gated row passed (vacuously true without gates).
pub fn all_gates_pass(rows: &[ReportRow]) -> bool {
    rows.iter().all(|r| r.pass != Some(false))
}

fn float(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt_float(x: Option<f64>) -> String {
    x.map(float).unwrap_or_default()
}

pub fn write_csv<W: Write>(rows: &[ReportRow], out: W) -> Result<()> {
    if rows.is_empty() {
        return Err(HarnessError::EmptyReport);
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.write_record([
            r.experiment.clone(),
            r.point.to_string(),
            r.parameters.clone(),
            r.quantity.clone(),
            float(r.estimate),
            float(r.std_err),
            r.samples.to_string(),
            opt_float(r.reference),
            r.gate.clone().unwrap_or_default(),
            opt_float(r.tolerance),
            r.pass.map(|p| p.to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn write_json<W: Write>(rows: &[ReportRow], mut out: W) -> Result<()> {
    if rows.is_empty() {
        return Err(HarnessError::EmptyReport);
    }
    serde_json::to_writer_pretty(&mut out, rows)?;
    writeln!(out).map_err(serde_json::Error::io)?;
    Ok(())
}

pub fn render(rows: &[ReportRow], format: Format) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    match format {
        Format::Csv => write_csv(rows, &mut buf)?,
        Format::Json => write_json(rows, &mut buf)?,
    }
    Ok(buf)
}

/// Write the report to `path`.
pub fn emit_report(rows: &[ReportRow], format: Format, path: &Path) -> Result<()> {
    let bytes = render(rows, format)?;
    std::fs::write(path, bytes).map_err(|source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Read a CSV report back.
pub fn read_csv<R: std::io::Read>(input: R) -> Result<Vec<ReportRow>> {
    let mut r = csv::Reader::from_reader(input);
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let f = |i: usize| rec.get(i).unwrap_or_default();
        let num = |i: usize| -> Result<f64> {
            f(i).parse::<f64>()
                .map_err(|e| HarnessError::config(format!("csv column {}", CSV_HEADER[i]), e))
        };
        let opt = |i: usize| -> Result<Option<f64>> { if f(i).is_empty() { Ok(None) } else { num(i).map(Some) } };
        rows.push(ReportRow {
            experiment: f(0).to_string(),
            point: f(1).parse().map_err(|e| HarnessError::config("csv column point", e))?,
            parameters: f(2).to_string(),
            quantity: f(3).to_string(),
            estimate: num(4)?,
            std_err: num(5)?,
            samples: f(6).parse().map_err(|e| HarnessError::config("csv column samples", e))?,
            reference: opt(7)?,
            gate: (!f(8).is_empty()).then(|| f(8).to_string()),
            tolerance: opt(9)?,
            pass: match f(10) {
                "" => None,
                s => Some(s.parse().map_err(|e| HarnessError::config("csv column pass", e))?),
            },
        });
    }
    Ok(rows)
}
