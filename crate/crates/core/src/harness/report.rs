use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::geometry::Space;

/// Shortest round-trip text, with an exponent for very small or large values.
fn number(x: f64) -> String {
    let a = x.abs();
    if a == 0.0 || (1e-4..1e15).contains(&a) {
        x.to_string()
    } else {
        format!("{x:e}")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Every relative residual must be at most the tolerance.
    Vanishing,
    /// Every relative residual must exceed the tolerance.
    Nonzero,
}

impl Mode {
    pub fn default_tolerance(self) -> f64 {
        match self {
            Mode::Vanishing => 1e-8,
            Mode::Nonzero => 1e-3,
        }
    }

    pub fn accepts(self, relative: f64, tol: f64) -> bool {
        match self {
            Mode::Vanishing => relative <= tol,
            Mode::Nonzero => relative > tol,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepParams {
    pub p: Vec<f64>,
    #[serde(rename = "L")]
    pub l: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualRecord {
    pub point_index: usize,
    /// `None` for the `p = ∞` families.
    pub p: Option<f64>,
    #[serde(rename = "L")]
    pub l: f64,
    pub re: f64,
    pub im: f64,
    pub scale: f64,
    pub relative: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SkippedPair {
    pub p: Option<f64>,
    #[serde(rename = "L")]
    pub l: f64,
    pub reason: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub duration_ms: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub operator: String,
    pub family: String,
    pub space: Space,
    pub params: SweepParams,
    pub mode: Mode,
    pub tolerance: f64,
    pub points: Vec<Vec<f64>>,
    pub residuals: Vec<ResidualRecord>,
    pub skipped: Vec<SkippedPair>,
    pub max_rel: f64,
    pub min_rel: f64,
    pub pass: bool,
    pub metadata: Metadata,
}

impl ResidualReport {
    /// Builds a report and sets `max_rel`, `min_rel` and `pass` from the
    /// records. A report with no records never passes.
    #[allow(clippy::too_many_arguments)]
    pub fn assemble(
        operator: String,
        family: String,
        space: Space,
        params: SweepParams,
        mode: Mode,
        tolerance: f64,
        points: Vec<Vec<f64>>,
        mut residuals: Vec<ResidualRecord>,
        skipped: Vec<SkippedPair>,
    ) -> Self {
        for r in &mut residuals {
            r.pass = mode.accepts(r.relative, tolerance);
        }
        let max_rel = residuals.iter().map(|r| r.relative).fold(0.0, f64::max);
        let min_rel = residuals.iter().map(|r| r.relative).fold(f64::INFINITY, f64::min);
        let pass = !residuals.is_empty() && residuals.iter().all(|r| r.pass);
        ResidualReport {
            operator,
            family,
            space,
            params,
            mode,
            tolerance,
            points,
            residuals,
            skipped,
            max_rel,
            min_rel: if min_rel.is_finite() { min_rel } else { 0.0 },
            pass,
            metadata: Metadata::default(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    /// JSON with the metadata block zeroed, for run-to-run comparison.
    pub fn canonical_json(&self) -> Result<String> {
        let mut copy = self.clone();
        copy.metadata = Metadata::default();
        copy.to_json()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let d = self.space.dim();
        let mut header = vec!["operator".to_string(), "family".into(), "point_index".into()];
        header.extend((0..d).map(|k| format!("x{k}")));
        header.extend(["p", "L", "re", "im", "scale", "relative", "pass"].map(String::from));
        w.write_record(&header)?;
        for r in &self.residuals {
            let mut row = vec![self.operator.clone(), self.family.clone(), r.point_index.to_string()];
            row.extend(self.points[r.point_index].iter().map(|&x| number(x)));
            row.push(r.p.map(number).unwrap_or_default());
            row.extend([r.l, r.re, r.im, r.scale, r.relative].map(number));
            row.push(r.pass.to_string());
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }
}
