use std::collections::{BTreeMap, HashMap};
use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::bases::EigenBasis;
use crate::error::{Error, Result};
use crate::spectral::Node;

/// Radiative forcing `E(ξ, t)` in W·m⁻².
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum EmissionScenario {
    #[default]
    None,
    Constant { value: f64 },
    /// `start + rate·t`, uniform in space.
    LinearRamp { start: f64, rate: f64 },
    /// CSV file with header `t,mode_or_node,value`.
    Table { path: String },
}

/// Emissions resolved on a quadrature grid.
#[derive(Debug, Clone)]
pub enum EmissionField {
    Uniform { start: f64, rate: f64 },
    /// Grid fields at increasing times, linearly interpolated and held
    /// constant outside the table.
    Sampled { times: Vec<f64>, fields: Vec<Vec<f64>>, index: HashMap<(u64, u64), usize> },
}

fn node_key(n: &Node) -> (u64, u64) {
    (n.x.to_bits(), n.lon.to_bits())
}

impl EmissionField {
    pub fn zero() -> Self {
        EmissionField::Uniform { start: 0.0, rate: 0.0 }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, EmissionField::Uniform { start, rate } if *start == 0.0 && *rate == 0.0)
    }

    pub fn resolve(scenario: &EmissionScenario, basis: &EigenBasis) -> Result<Self> {
        match scenario {
            EmissionScenario::None => Ok(Self::zero()),
            EmissionScenario::Constant { value } => Ok(EmissionField::Uniform { start: *value, rate: 0.0 }),
            EmissionScenario::LinearRamp { start, rate } => Ok(EmissionField::Uniform { start: *start, rate: *rate }),
            EmissionScenario::Table { path } => {
                let file = std::fs::File::open(path)
                    .map_err(|e| Error::Model(format!("emissions table '{path}': {e}")))?;
                Self::from_csv(file, basis)
            }
        }
    }

    /// Reads `t,mode_or_node,value` rows; `mode_or_node` is `node:<j>` for a
    /// grid node or `mode:<k>` for a basis mode. Lines starting with `#` are
    /// skipped.
    pub fn from_csv<R: Read>(input: R, basis: &EigenBasis) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(input);
        let headers = reader.headers()?.clone();
        if headers.iter().collect::<Vec<_>>() != ["t", "mode_or_node", "value"] {
            return Err(Error::Model(format!(
                "emissions header must be t,mode_or_node,value, found {}",
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let n = basis.grid().len();
        let mut by_time: BTreeMap<u64, (f64, Vec<f64>)> = BTreeMap::new();
        for (line, record) in reader.records().enumerate() {
            let record = record?;
            let bad = |what: &str| Error::Model(format!("emissions row {}: {what}", line + 1));
            let t: f64 = record[0].parse().map_err(|_| bad("time is not a number"))?;
            let value: f64 = record[2].parse().map_err(|_| bad("value is not a number"))?;
            if !t.is_finite() || !value.is_finite() {
                return Err(bad("non-finite entry"));
            }
            let key = if t == 0.0 { 0.0f64 } else { t };
            let entry = by_time.entry(ordered_bits(key)).or_insert_with(|| (t, vec![0.0; n]));
            let (kind, idx) = record[1].split_once(':').ok_or_else(|| bad("expected node:<j> or mode:<k>"))?;
            let idx: usize = idx.parse().map_err(|_| bad("index is not an integer"))?;
            match kind {
                "node" if idx < n => entry.1[idx] += value,
                "mode" if idx < basis.len() => {
                    entry.1.iter_mut().zip(basis.mode(idx)).for_each(|(f, e)| *f += value * e);
                }
                "node" | "mode" => return Err(bad("index out of range")),
                _ => return Err(bad("expected node:<j> or mode:<k>")),
            }
        }
        if by_time.is_empty() {
            return Err(Error::Model("emissions table has no rows".into()));
        }
        let (times, fields) = by_time.into_values().unzip();
        let index = basis.nodes().iter().enumerate().map(|(j, n)| (node_key(n), j)).collect();
        Ok(EmissionField::Sampled { times, fields, index })
    }

    pub fn eval(&self, t: f64, node: &Node) -> f64 {
        match self {
            EmissionField::Uniform { start, rate } => start + rate * t,
            EmissionField::Sampled { times, fields, index } => {
                let Some(&j) = index.get(&node_key(node)) else {
                    return 0.0;
                };
                let i = times.partition_point(|s| *s <= t);
                if i == 0 {
                    fields[0][j]
                } else if i == times.len() {
                    fields[i - 1][j]
                } else {
                    let w = (t - times[i - 1]) / (times[i] - times[i - 1]);
                    (1.0 - w) * fields[i - 1][j] + w * fields[i][j]
                }
            }
        }
    }

    /// `sup_t ‖E(·, t)‖` for `t ∈ [t0, t1]`, on the grid.
    pub fn sup_norm(&self, basis: &EigenBasis, t0: f64, t1: f64) -> f64 {
        let grid = basis.grid();
        let norm_at = |t: f64| {
            let v: Vec<f64> = basis.nodes().iter().map(|n| self.eval(t, n)).collect();
            grid.norm(&v)
        };
        match self {
            EmissionField::Uniform { .. } => norm_at(t0).max(norm_at(t1)),
            EmissionField::Sampled { fields, .. } => fields.iter().map(|f| grid.norm(f)).fold(0.0, f64::max),
        }
    }
}

/// Total order on finite floats usable as a map key.
fn ordered_bits(t: f64) -> u64 {
    let b = t.to_bits();
    if b >> 63 == 1 {
        !b
    } else {
        b | (1 << 63)
    }
}
