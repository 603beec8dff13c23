use std::sync::Arc;

use super::control::{ControlOperator, ControlSignal};
use super::maps::PointwiseMap;
use crate::bases::EigenBasis;
use crate::error::{Error, Result};
use crate::spectral::SpectralField;

/// Default bound on the state norm beyond which integration is aborted.
pub const DIVERGENCE_GUARD: f64 = 1e8;

/// `y' = Ly + F(t, y) + 𝔠(u)`, `y(start_time) = initial`, on `[start_time, horizon]`.
///
/// `L` is diagonal in `basis` with eigenvalues `−λ_k`. `F` acts pointwise
/// through grid evaluation. The basis fixes the largest usable truncation and
/// the quadrature grid shared by every Galerkin level.
#[derive(Debug, Clone)]
pub struct SemilinearProblem {
    pub basis: Arc<EigenBasis>,
    pub nonlinearity: Arc<dyn PointwiseMap>,
    pub control_op: Arc<ControlOperator>,
    pub initial: SpectralField,
    pub start_time: f64,
    pub horizon: f64,
    pub divergence_guard: f64,
}

impl SemilinearProblem {
    pub fn new(
        basis: Arc<EigenBasis>,
        nonlinearity: Arc<dyn PointwiseMap>,
        control_op: Arc<ControlOperator>,
        initial: SpectralField,
        horizon: f64,
    ) -> Result<Self> {
        let problem = Self {
            initial: initial.resized(basis.len()),
            basis,
            nonlinearity,
            control_op,
            start_time: 0.0,
            horizon,
            divergence_guard: DIVERGENCE_GUARD,
        };
        if initial.basis_id != problem.basis.id() {
            return Err(Error::Argument(format!(
                "initial state belongs to basis '{}', problem uses '{}'",
                initial.basis_id,
                problem.basis.id()
            )));
        }
        if initial.len() > problem.basis.len() {
            return Err(Error::Dimension(format!(
                "initial state has {} coefficients, basis {}",
                initial.len(),
                problem.basis.len()
            )));
        }
        problem.validate()?;
        Ok(problem)
    }

    fn validate(&self) -> Result<()> {
        if !(self.horizon > self.start_time) {
            return Err(Error::Argument(format!(
                "horizon {} must exceed the start time {}",
                self.horizon, self.start_time
            )));
        }
        if self.control_op.grid_len() != self.basis.grid().len() {
            return Err(Error::Dimension("control operator built for another grid".into()));
        }
        Ok(())
    }

    /// The same dynamics started from `state` at time `t`.
    pub fn restarted(&self, t: f64, state: &SpectralField) -> Result<Self> {
        let mut p = self.clone();
        p.start_time = t;
        p.initial = state.resized(self.basis.len());
        p.initial.basis_id = self.basis.id().to_string();
        p.validate()?;
        Ok(p)
    }

    pub fn duration(&self) -> f64 {
        self.horizon - self.start_time
    }

    pub fn max_modes(&self) -> usize {
        self.basis.len()
    }

    pub fn check_truncation(&self, n: usize) -> Result<()> {
        if n == 0 || n > self.basis.len() {
            return Err(Error::Range(format!(
                "truncation N = {n} outside 1..={}",
                self.basis.len()
            )));
        }
        Ok(())
    }

    pub fn check_control(&self, u: &ControlSignal) -> Result<()> {
        if u.dofs != self.control_op.dof_count() {
            return Err(Error::Dimension(format!(
                "control has {} dofs, operator expects {}",
                u.dofs,
                self.control_op.dof_count()
            )));
        }
        let tol = 1e-9 * self.duration().abs().max(1.0);
        if (u.start - self.start_time).abs() > tol || (u.end - self.horizon).abs() > tol {
            return Err(Error::Argument(format!(
                "control covers [{}, {}], problem runs on [{}, {}]",
                u.start, u.end, self.start_time, self.horizon
            )));
        }
        if !u.is_admissible() {
            return Err(Error::Range("control is not admissible".into()));
        }
        Ok(())
    }

    /// Grid values of `F(t, v)` for grid values `v`.
    pub fn eval_nonlinearity(&self, t: f64, v: &[f64]) -> Vec<f64> {
        if self.nonlinearity.is_zero() {
            return vec![0.0; v.len()];
        }
        self.basis
            .nodes()
            .iter()
            .zip(v)
            .map(|(node, x)| self.nonlinearity.value(t, node, *x))
            .collect()
    }

    pub fn eval_derivative(&self, t: f64, v: &[f64]) -> Vec<f64> {
        if self.nonlinearity.is_zero() {
            return vec![0.0; v.len()];
        }
        self.basis
            .nodes()
            .iter()
            .zip(v)
            .map(|(node, x)| self.nonlinearity.derivative(t, node, *x))
            .collect()
    }

    /// `‖F(t, 0)‖_H` by grid quadrature.
    pub fn nonlinearity_at_zero_norm(&self, t: f64) -> f64 {
        let zero = vec![0.0; self.basis.grid().len()];
        self.basis.grid().norm(&self.eval_nonlinearity(t, &zero))
    }
}
