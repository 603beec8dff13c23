use serde::{Deserialize, Serialize};

use crate::dynamics::{integrate, trapezoid, ControlOperator, ControlSignal, SemilinearProblem, Trajectory};
use crate::error::{Error, Result};
use crate::spectral::{self, SpectralField};

fn one() -> f64 {
    1.0
}

/// `J(u) = ∫ 𝒢(y) + ℰ(u) dt` with `𝒢(y) = (w/2)‖y − T_d‖²` and `ℰ(u) = (μ/2)‖u‖²_V`.
///
/// Setting `tracking_weight = 0` gives `𝒢 ≡ 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostFunctional {
    pub target: SpectralField,
    #[serde(default = "one")]
    pub tracking_weight: f64,
    pub mu: f64,
}

impl CostFunctional {
    pub fn tracking(target: SpectralField, mu: f64) -> Result<Self> {
        let c = Self { target, tracking_weight: 1.0, mu };
        c.validate()?;
        Ok(c)
    }

    /// `𝒢 ≡ 0`, control penalty only.
    pub fn control_only(basis_id: &str, mu: f64) -> Result<Self> {
        let c = Self { target: SpectralField::zeros(basis_id, 0), tracking_weight: 0.0, mu };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu >= 0.0) || !self.mu.is_finite() {
            return Err(Error::Argument(format!("control weight mu = {} must be >= 0", self.mu)));
        }
        if !(self.tracking_weight >= 0.0) || !self.tracking_weight.is_finite() {
            return Err(Error::Argument(format!(
                "tracking weight {} must be >= 0",
                self.tracking_weight
            )));
        }
        Ok(())
    }

    pub(crate) fn check_basis(&self, problem: &SemilinearProblem) -> Result<()> {
        if self.target.basis_id != problem.basis.id() && !self.target.is_empty() {
            return Err(Error::Argument(format!(
                "target belongs to basis '{}', problem uses '{}'",
                self.target.basis_id,
                problem.basis.id()
            )));
        }
        if self.target.len() > problem.basis.len() {
            return Err(Error::Dimension("target longer than the basis".into()));
        }
        Ok(())
    }

    /// `𝒢(y)` for a state with any number of coefficients.
    pub fn tracking_value(&self, y: &[f64]) -> f64 {
        if self.tracking_weight == 0.0 {
            return 0.0;
        }
        0.5 * self.tracking_weight * spectral::distance(y, &self.target.coeffs).powi(2)
    }

    /// `∇𝒢(y)` restricted to the coefficients of `y`.
    pub fn tracking_gradient(&self, y: &[f64]) -> Vec<f64> {
        let d = &self.target.coeffs;
        y.iter()
            .enumerate()
            .map(|(k, v)| self.tracking_weight * (v - d.get(k).copied().unwrap_or(0.0)))
            .collect()
    }

    /// `ℰ(v)` for one vector of dofs.
    pub fn control_value(&self, op: &ControlOperator, v: &[f64]) -> f64 {
        0.5 * self.mu * op.v_norm(v).powi(2)
    }

    /// `Lip(𝒢)` on the ball of radius `radius`: `w·(radius + ‖T_d‖)`.
    pub fn tracking_lipschitz(&self, radius: f64) -> f64 {
        self.tracking_weight * (radius + self.target.norm())
    }
}

/// `⟨a, b⟩` in `L²(t, T; V)` for two vectors laid out like `u.values`.
pub fn control_inner(u: &ControlSignal, op: &ControlOperator, a: &[f64], b: &[f64]) -> f64 {
    let m = op.dof_masses();
    let dofs = u.dofs.max(1);
    u.interval_len()
        * a.iter().zip(b).enumerate().map(|(i, (x, y))| m[i % dofs] * x * y).sum::<f64>()
}

pub fn control_norm(u: &ControlSignal, op: &ControlOperator, a: &[f64]) -> f64 {
    control_inner(u, op, a, a).max(0.0).sqrt()
}

/// Cost of a computed trajectory: trapezoid rule for `𝒢` on the stored
/// times, exact interval sums for `ℰ`.
pub fn trajectory_cost(
    trajectory: &Trajectory,
    u: &ControlSignal,
    op: &ControlOperator,
    cost: &CostFunctional,
) -> f64 {
    let g: Vec<f64> = trajectory.states.iter().map(|s| cost.tracking_value(&s.coeffs)).collect();
    let tracking = trapezoid(&trajectory.times, &g);
    let control: f64 =
        (0..u.n_intervals).map(|i| cost.control_value(op, u.interval(i))).sum::<f64>() * u.interval_len();
    tracking + control
}

/// `J_N(u)` for the Galerkin system at `n` modes, time step `dt`.
pub fn evaluate_cost(
    problem: &SemilinearProblem,
    n: usize,
    u: &ControlSignal,
    cost: &CostFunctional,
    dt: f64,
) -> Result<f64> {
    cost.check_basis(problem)?;
    let traj = integrate(problem, n, u, dt)?;
    Ok(trajectory_cost(&traj, u, &problem.control_op, cost))
}
