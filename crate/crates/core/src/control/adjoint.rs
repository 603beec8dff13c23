//! Exact adjoint of the ETD2RK-discretized Galerkin system.
//!
//! For one step `y⁺ = E y + Φ₁N₀ + Φ₂(N₁ − N₀)` with `N₀ = N(y)`,
//! `a = E y + Φ₁N₀`, `N₁ = N(a)` and symmetric Jacobians `J₀`, `J₁`, the
//! backward recursion is
//! `μ = λ⁺ + J₁Φ₂λ⁺`, `λ = Eμ + J₀(Φ₁μ − Φ₂λ⁺) + ω∇𝒢(y)`,
//! and the step's sensitivity to the projected forcing is `Φ₁μ`.

use super::cost::{trajectory_cost, CostFunctional};
use crate::dynamics::{run_forward, ControlSignal, ForwardRun, SemilinearProblem, Trajectory};
use crate::error::Result;
use crate::spectral::SpectralField;

/// Cost, gradient and forward trajectory at one control.
#[derive(Debug, Clone)]
pub struct GradientEvaluation {
    pub cost: f64,
    /// Riesz representative of `DJ(u)` in `L²(t, T; V)`, laid out like `u.values`.
    pub gradient: Vec<f64>,
    pub trajectory: Trajectory,
}

struct Backward {
    /// Discrete adjoint `λ_n` at every stored time, when kept.
    lambda: Vec<Vec<f64>>,
    /// `Σ Φ₁μ` over the steps of each control interval.
    forcing_sensitivity: Vec<Vec<f64>>,
}

fn jacobian_apply(problem: &SemilinearProblem, n: usize, deriv: &[f64], v: &[f64]) -> Vec<f64> {
    let grid = problem.basis.synthesize_slice(v);
    let weighted: Vec<f64> = grid
        .iter()
        .zip(deriv)
        .zip(&problem.basis.grid().weights)
        .map(|((g, d), w)| g * d * w)
        .collect();
    problem.basis.analyze_weighted(&weighted, n)
}

fn trapezoid_weight(h: f64, index: usize, last: usize) -> f64 {
    if index == 0 || index == last {
        0.5 * h
    } else {
        h
    }
}

fn backward(problem: &SemilinearProblem, n: usize, run: &ForwardRun, cost: &CostFunctional, keep: bool) -> Backward {
    let states = &run.trajectory.states;
    let last = states.len() - 1;
    let f = &run.factors;
    let h = run.h;
    let linear_only = problem.nonlinearity.is_zero();
    let n_intervals = last / run.steps_per_interval;
    let mut forcing_sensitivity = vec![vec![0.0; n]; n_intervals];
    let mut lambda_store = if keep { vec![Vec::new(); last + 1] } else { Vec::new() };

    let mut lambda: Vec<f64> = cost
        .tracking_gradient(&states[last].coeffs)
        .into_iter()
        .map(|g| trapezoid_weight(h, last, last) * g)
        .collect();
    if keep {
        lambda_store[last] = lambda.clone();
    }
    for step in (0..last).rev() {
        let mut mu = lambda.clone();
        if !linear_only {
            let v: Vec<f64> = (0..n).map(|k| f.phi2[k] * lambda[k]).collect();
            let j1v = jacobian_apply(problem, n, &run.deriv_stage[step], &v);
            mu.iter_mut().zip(&j1v).for_each(|(m, j)| *m += j);
        }
        let sens = &mut forcing_sensitivity[step / run.steps_per_interval];
        for k in 0..n {
            sens[k] += f.phi1[k] * mu[k];
        }
        let grad_g = cost.tracking_gradient(&states[step].coeffs);
        let w = trapezoid_weight(h, step, last);
        let mut next: Vec<f64> = (0..n).map(|k| f.decay[k] * mu[k] + w * grad_g[k]).collect();
        if !linear_only {
            let z: Vec<f64> = (0..n).map(|k| f.phi1[k] * mu[k] - f.phi2[k] * lambda[k]).collect();
            let j0z = jacobian_apply(problem, n, &run.deriv_state[step], &z);
            next.iter_mut().zip(&j0z).for_each(|(a, b)| *a += b);
        }
        lambda = next;
        if keep {
            lambda_store[step] = lambda.clone();
        }
    }
    Backward { lambda: lambda_store, forcing_sensitivity }
}

/// Adjoint state `p` on the forward time grid for the Galerkin system at `n`
/// modes: the discrete counterpart of `−p' = L_N p + DF_N(y)ᵀp + ∇𝒢(y)`,
/// `p(T) = 0`, exact for the discretized cost.
pub fn adjoint_solve(
    problem: &SemilinearProblem,
    n: usize,
    u: &ControlSignal,
    cost: &CostFunctional,
    dt: f64,
) -> Result<Trajectory> {
    cost.check_basis(problem)?;
    let run = run_forward(problem, n, u, dt, true)?;
    let bw = backward(problem, n, &run, cost, true);
    let states = &run.trajectory.states;
    let last = states.len() - 1;
    let id = problem.basis.id().to_string();
    // λ_n carries the trapezoid weight of 𝒢 at t_n; p(t_n) only half of an interior weight
    let adj: Vec<SpectralField> = bw
        .lambda
        .iter()
        .enumerate()
        .map(|(i, l)| {
            let excess = trapezoid_weight(run.h, i, last) - if i < last { 0.5 * run.h } else { 0.0 };
            let g = cost.tracking_gradient(&states[i].coeffs);
            let coeffs = l.iter().zip(&g).map(|(a, b)| a - excess * b).collect();
            SpectralField { basis_id: id.clone(), coeffs }
        })
        .collect();
    Trajectory::new(run.trajectory.times.clone(), adj)
}

/// `J_N(u)` and its gradient in `L²(t, T; V)`.
pub fn gradient(
    problem: &SemilinearProblem,
    n: usize,
    u: &ControlSignal,
    cost: &CostFunctional,
    dt: f64,
) -> Result<GradientEvaluation> {
    cost.check_basis(problem)?;
    let run = run_forward(problem, n, u, dt, true)?;
    let bw = backward(problem, n, &run, cost, false);
    let op = &problem.control_op;
    let masses = op.dof_masses();
    let dt_i = u.interval_len();
    let mut grad = vec![0.0; u.values.len()];
    for (i, sens) in bw.forcing_sensitivity.iter().enumerate() {
        if u.dofs == 0 {
            break;
        }
        let grid = problem.basis.synthesize_slice(sens);
        let pairing = op.apply_adjoint(u.interval(i), &grid);
        for d in 0..u.dofs {
            let v = u.values[i * u.dofs + d];
            grad[i * u.dofs + d] = pairing[d] / (dt_i * masses[d]) + cost.mu * v;
        }
    }
    let value = trajectory_cost(&run.trajectory, u, op, cost);
    Ok(GradientEvaluation { cost: value, gradient: grad, trajectory: run.trajectory })
}
