use std::collections::BTreeMap;
use std::io::Write;

use serde::Serialize;

use crate::error::Result;

/// Relative slack of the pass rule `rhs − lhs ≥ −1e-9·max(1, rhs)`.
pub const MARGIN_TOL: f64 = 1e-9;

pub fn margin_passes(lhs: f64, rhs: f64) -> bool {
    rhs - lhs >= -MARGIN_TOL * rhs.max(1.0)
}

/// Outcome of one computable inequality `lhs ≤ rhs`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundCheckReport {
    pub inequality_id: String,
    pub description: String,
    pub n: usize,
    pub n_ref: usize,
    pub t: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub constants: BTreeMap<String, f64>,
    /// `None` when an optimizer failed and the check is inconclusive.
    pub pass: Option<bool>,
    pub notes: Vec<String>,
}

impl BoundCheckReport {
    pub fn new(
        inequality_id: &str,
        description: &str,
        n: usize,
        n_ref: usize,
        t: f64,
        lhs: f64,
        rhs: f64,
        constants: BTreeMap<String, f64>,
    ) -> Self {
        Self {
            inequality_id: inequality_id.into(),
            description: description.into(),
            n,
            n_ref,
            t,
            lhs,
            rhs,
            margin: rhs - lhs,
            constants,
            pass: Some(margin_passes(lhs, rhs)),
            notes: Vec::new(),
        }
    }

    pub fn inconclusive(inequality_id: &str, description: &str, n: usize, n_ref: usize, t: f64, note: String) -> Self {
        Self {
            inequality_id: inequality_id.into(),
            description: description.into(),
            n,
            n_ref,
            t,
            lhs: f64::NAN,
            rhs: f64::NAN,
            margin: f64::NAN,
            constants: BTreeMap::new(),
            pass: None,
            notes: vec![note],
        }
    }

    pub fn passed(&self) -> bool {
        self.pass == Some(true)
    }
}

/// `inequality_id,n,n_ref,t,lhs,rhs,margin,pass` with a leading comment line.
pub fn write_bound_csv<W: Write>(reports: &[BoundCheckReport], header: &str, mut out: W) -> Result<()> {
    writeln!(out, "# {header}")?;
    writeln!(out, "inequality_id,n,n_ref,t,lhs,rhs,margin,pass")?;
    for r in reports {
        let pass = match r.pass {
            Some(true) => "true",
            Some(false) => "false",
            None => "inconclusive",
        };
        writeln!(out, "{},{},{},{},{},{},{},{}", r.inequality_id, r.n, r.n_ref, r.t, r.lhs, r.rhs, r.margin, pass)?;
    }
    Ok(())
}

/// Metrics of a sweep over Galerkin truncations.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub experiment: String,
    pub description: String,
    pub n_values: Vec<usize>,
    pub n_ref: usize,
    /// Metric name → one value per entry of `n_values`.
    pub metrics: BTreeMap<String, Vec<f64>>,
    pub sample_count: usize,
    pub seed: Option<u64>,
    pub settings: BTreeMap<String, f64>,
    pub flags: Vec<String>,
}

impl ConvergenceReport {
    pub fn new(experiment: &str, description: &str, n_values: Vec<usize>, n_ref: usize) -> Self {
        Self {
            experiment: experiment.into(),
            description: description.into(),
            n_values,
            n_ref,
            metrics: BTreeMap::new(),
            sample_count: 0,
            seed: None,
            settings: BTreeMap::new(),
            flags: Vec::new(),
        }
    }

    pub fn metric(&self, name: &str) -> Option<&[f64]> {
        self.metrics.get(name).map(|v| v.as_slice())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// `n,metric,value`, rows ordered by `N` then metric name.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "# {}", self.description)?;
        writeln!(out, "n,metric,value")?;
        for (i, n) in self.n_values.iter().enumerate() {
            for (name, values) in &self.metrics {
                writeln!(out, "{n},{name},{}", values[i])?;
            }
        }
        Ok(())
    }
}

pub(crate) fn nonincreasing(values: &[f64]) -> bool {
    values.windows(2).all(|w| w[1] <= w[0])
}
