use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{self, SpectralField};

/// States at increasing times; all states belong to one basis and share one
/// coefficient length (the Galerkin dimension).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<SpectralField>,
}

impl Trajectory {
    pub fn new(times: Vec<f64>, states: Vec<SpectralField>) -> Result<Self> {
        if times.len() != states.len() || times.is_empty() {
            return Err(Error::Dimension(format!(
                "{} times for {} states",
                times.len(),
                states.len()
            )));
        }
        if !times.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::Argument("trajectory times must increase strictly".into()));
        }
        if states.windows(2).any(|w| w[0].basis_id != w[1].basis_id) {
            return Err(Error::Argument("trajectory states mix bases".into()));
        }
        Ok(Self { times, states })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> &SpectralField {
        self.states.last().expect("trajectory is never empty")
    }

    pub fn sup_norm(&self) -> f64 {
        self.states.iter().map(|s| s.norm()).fold(0.0, f64::max)
    }

    /// `sup_t ‖Π_N^⊥ y(t)‖`.
    pub fn sup_residual(&self, n: usize) -> f64 {
        self.states.iter().map(|s| spectral::tail_norm(&s.coeffs, n)).fold(0.0, f64::max)
    }

    /// `‖Π_N^⊥ y‖_{L²(t0, T; H)}` by the trapezoid rule on the stored times.
    pub fn l2_residual(&self, n: usize) -> f64 {
        let sq: Vec<f64> =
            self.states.iter().map(|s| spectral::tail_norm(&s.coeffs, n).powi(2)).collect();
        trapezoid(&self.times, &sq).max(0.0).sqrt()
    }

    /// Index of the stored time matching `t` within `tol`.
    pub fn find_time(&self, t: f64, tol: f64) -> Option<usize> {
        let i = self.times.partition_point(|s| *s < t - tol);
        (i < self.times.len() && (self.times[i] - t).abs() <= tol).then_some(i)
    }

    /// `sup ‖self(t) − other(t)‖` over the times of `self` that `other` also stores.
    pub fn sup_distance(&self, other: &Trajectory) -> Result<f64> {
        let span = self.times.last().unwrap() - self.times[0];
        let tol = 1e-9 * span.abs().max(1.0);
        let mut worst: f64 = 0.0;
        let mut matched = 0;
        for (t, s) in self.times.iter().zip(&self.states) {
            if let Some(j) = other.find_time(*t, tol) {
                worst = worst.max(s.distance(&other.states[j]));
                matched += 1;
            }
        }
        if matched == 0 {
            return Err(Error::Argument("trajectories share no time points".into()));
        }
        Ok(worst)
    }

    /// Long-format CSV: `time,mode_index,coefficient`.
    pub fn write_csv<W: Write>(&self, header: &str, mut out: W) -> Result<()> {
        writeln!(out, "# {header}")?;
        writeln!(out, "time,mode_index,coefficient")?;
        for (t, s) in self.times.iter().zip(&self.states) {
            for (k, c) in s.coeffs.iter().enumerate() {
                writeln!(out, "{t},{k},{c}")?;
            }
        }
        Ok(())
    }

    /// Summary CSV: `time,norm,residual_energy@N...`.
    pub fn write_summary_csv<W: Write>(&self, header: &str, ns: &[usize], mut out: W) -> Result<()> {
        writeln!(out, "# {header}")?;
        let cols: Vec<String> = ns.iter().map(|n| format!("residual_energy@{n}")).collect();
        if cols.is_empty() {
            writeln!(out, "time,norm")?;
        } else {
            writeln!(out, "time,norm,{}", cols.join(","))?;
        }
        for (t, s) in self.times.iter().zip(&self.states) {
            let mut line = format!("{t},{}", s.norm());
            for n in ns {
                line.push_str(&format!(",{}", spectral::tail_norm(&s.coeffs, *n)));
            }
            writeln!(out, "{line}")?;
        }
        Ok(())
    }
}

pub(crate) fn trapezoid(times: &[f64], values: &[f64]) -> f64 {
    times
        .windows(2)
        .zip(values.windows(2))
        .map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0] + v[1]))
        .sum()
}
