use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Continuous piecewise-linear ice-albedo feedback: `alpha_max` below
/// `t_lo`, `alpha_min` above `t_hi`, linear in between.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlbedoRamp {
    pub alpha_max: f64,
    pub alpha_min: f64,
    pub t_lo: f64,
    pub t_hi: f64,
}

impl Default for AlbedoRamp {
    fn default() -> Self {
        Self { alpha_max: 0.62, alpha_min: 0.3, t_lo: -10.0, t_hi: 0.0 }
    }
}

impl AlbedoRamp {
    pub fn validate(&self) -> Result<()> {
        if !(0.0 < self.alpha_min && self.alpha_min < self.alpha_max && self.alpha_max < 1.0) {
            return Err(Error::Model(format!(
                "albedo needs 0 < alpha_min < alpha_max < 1, got {} and {}",
                self.alpha_min, self.alpha_max
            )));
        }
        if !(self.t_lo < self.t_hi) {
            return Err(Error::Model(format!("albedo ramp needs t_lo < t_hi, got {} and {}", self.t_lo, self.t_hi)));
        }
        Ok(())
    }

    pub fn eval(&self, temp: f64) -> f64 {
        if temp <= self.t_lo {
            self.alpha_max
        } else if temp >= self.t_hi {
            self.alpha_min
        } else {
            self.alpha_max - self.slope() * (temp - self.t_lo)
        }
    }

    /// `dα/dT`, taken from the right at the corners.
    pub fn derivative(&self, temp: f64) -> f64 {
        if temp >= self.t_lo && temp < self.t_hi {
            -self.slope()
        } else {
            0.0
        }
    }

    /// `(alpha_max − alpha_min)/(t_hi − t_lo)`.
    pub fn slope(&self) -> f64 {
        (self.alpha_max - self.alpha_min) / (self.t_hi - self.t_lo)
    }
}

/// Normalized insolation `S(x, t) = 1 − s2·P₂(x) + seasonal·x·cos(2πt/period)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Insolation {
    pub s2: f64,
    /// Amplitude of the annual harmonic; zero gives the annual mean.
    pub seasonal: f64,
    pub period: f64,
}

impl Default for Insolation {
    fn default() -> Self {
        Self { s2: 0.482, seasonal: 0.0, period: 1.0 }
    }
}

const SUP_SAMPLES: usize = 4001;

impl Insolation {
    pub fn eval(&self, x: f64, t: f64) -> f64 {
        let p2 = 0.5 * (3.0 * x * x - 1.0);
        let mut s = 1.0 - self.s2 * p2;
        if self.seasonal != 0.0 {
            s += self.seasonal * x * (2.0 * PI * t / self.period).cos();
        }
        s
    }

    /// Upper and lower envelope of `S` over `x ∈ [−1, 1]` and all times.
    fn envelope(&self) -> (f64, f64) {
        (0..SUP_SAMPLES)
            .map(|i| -1.0 + 2.0 * i as f64 / (SUP_SAMPLES - 1) as f64)
            .map(|x| {
                let p2 = 0.5 * (3.0 * x * x - 1.0);
                let base = 1.0 - self.s2 * p2;
                let swing = self.seasonal.abs() * x.abs();
                (base + swing, base - swing)
            })
            .fold((f64::NEG_INFINITY, f64::INFINITY), |(hi, lo), (a, b)| (hi.max(a), lo.min(b)))
    }

    pub fn sup(&self) -> f64 {
        self.envelope().0
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.period > 0.0) {
            return Err(Error::Model(format!("insolation period {} must be positive", self.period)));
        }
        if self.envelope().1 < -1e-12 {
            return Err(Error::Model("insolation S(x, t) must be nonnegative".into()));
        }
        Ok(())
    }
}
