use std::io::Write;

use serde::{Deserialize, Serialize};

use super::adjoint::{gradient, GradientEvaluation};
use super::cost::{control_inner, control_norm, evaluate_cost, CostFunctional};
use crate::dynamics::{ControlOperator, ControlSignal, SemilinearProblem, Trajectory};
use crate::error::{Error, Result};

/// Projected-gradient settings. `tol` applies to `‖u − P(u − ∇J(u))‖` in
/// `L²(t, T; V)`; a positive `rel_tol` also accepts a reduction of that
/// quantity by the given factor relative to the starting iterate. A positive
/// `stall_tol` also stops once three consecutive accepted steps change the
/// cost by less than `stall_tol·max(|J|, 1)`, which is how minimizers at
/// kinks of a piecewise-smooth cost are recognized.
const STALL_STEPS: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerOptions {
    pub dt: f64,
    pub tol: f64,
    pub rel_tol: f64,
    pub stall_tol: f64,
    pub max_iters: usize,
    pub armijo_c: f64,
    pub shrink: f64,
    pub max_backtracks: usize,
    /// First trial step; `1/μ` (or 1 when `μ = 0`) when absent.
    pub initial_step: Option<f64>,
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        Self {
            dt: 1e-2,
            tol: 1e-6,
            rel_tol: 0.0,
            stall_tol: 0.0,
            max_iters: 500,
            armijo_c: 1e-4,
            shrink: 0.5,
            max_backtracks: 60,
            initial_step: None,
        }
    }
}

impl OptimizerOptions {
    pub fn validate(&self) -> Result<()> {
        let ok = self.dt > 0.0
            && self.tol > 0.0
            && self.rel_tol >= 0.0
            && self.stall_tol >= 0.0
            && self.armijo_c > 0.0
            && self.armijo_c < 1.0
            && self.shrink > 0.0
            && self.shrink < 1.0
            && self.initial_step.is_none_or(|s| s > 0.0);
        if !ok {
            return Err(Error::Argument(format!("invalid optimizer options {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct OcpSolution {
    pub control: ControlSignal,
    #[serde(skip)]
    pub trajectory: Trajectory,
    pub cost: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Final projected-gradient norm.
    pub gradient_norm: f64,
    /// Cost of every accepted iterate, starting with the initial control.
    pub cost_history: Vec<f64>,
    pub message: String,
}

impl OcpSolution {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// `interval_start,region,dof,value`, one row per interval and dof.
    pub fn write_control_csv<W: Write>(&self, op: &ControlOperator, header: &str, out: W) -> Result<()> {
        write_control_csv(&self.control, op, header, out)
    }
}

pub fn write_control_csv<W: Write>(
    u: &ControlSignal,
    op: &ControlOperator,
    header: &str,
    mut out: W,
) -> Result<()> {
    writeln!(out, "# {header}")?;
    writeln!(out, "interval_start,region,dof,value")?;
    for i in 0..u.n_intervals {
        for (r, region) in op.regions().iter().enumerate() {
            let first = op.region_offset(r);
            let end = op.regions().get(r + 1).map_or(op.dof_count(), |_| op.region_offset(r + 1));
            for d in first..end {
                writeln!(out, "{},{},{},{}", u.interval_start(i), region.name, d - first, u.interval(i)[d])?;
            }
        }
    }
    Ok(())
}

/// Componentwise projection onto the admissible box.
pub fn project_control(u_raw: &ControlSignal) -> ControlSignal {
    let mut u = u_raw.clone();
    u.clamp();
    u
}

fn projected_step(u: &ControlSignal, g: &[f64], step: f64) -> ControlSignal {
    let mut trial = u.clone();
    trial.values.iter_mut().zip(g).for_each(|(v, gi)| *v -= step * gi);
    trial.clamp();
    trial
}

fn projected_gradient_norm(u: &ControlSignal, op: &ControlOperator, g: &[f64]) -> f64 {
    let p = projected_step(u, g, 1.0);
    let diff: Vec<f64> = u.values.iter().zip(&p.values).map(|(a, b)| a - b).collect();
    control_norm(u, op, &diff)
}

/// Minimizes `J_N` over admissible piecewise-constant controls by projected
/// gradient with Armijo backtracking and Barzilai–Borwein trial steps.
pub fn optimize(
    problem: &SemilinearProblem,
    n: usize,
    cost: &CostFunctional,
    u0: &ControlSignal,
    options: &OptimizerOptions,
) -> Result<OcpSolution> {
    options.validate()?;
    if !u0.is_admissible() {
        return Err(Error::Range("initial control is not admissible".into()));
    }
    let op = &problem.control_op;
    let mut u = u0.clone();
    let mut eval: GradientEvaluation = gradient(problem, n, &u, cost, options.dt)?;
    let mut history = vec![eval.cost];
    let mut step = options
        .initial_step
        .unwrap_or(if cost.mu > 0.0 { 1.0 / cost.mu } else { 1.0 });
    let pg0 = projected_gradient_norm(&u, op, &eval.gradient);
    let target = options.tol.max(options.rel_tol * pg0);
    let mut pg = pg0;
    let mut iterations = 0;
    let mut message = String::new();
    let mut converged = pg <= target;
    let mut stalled = 0;

    while !converged && iterations < options.max_iters {
        let mut accepted = None;
        let mut trial_step = step;
        for _ in 0..=options.max_backtracks {
            let trial = projected_step(&u, &eval.gradient, trial_step);
            let du: Vec<f64> = trial.values.iter().zip(&u.values).map(|(a, b)| a - b).collect();
            let decrease = control_inner(&u, op, &eval.gradient, &du);
            match evaluate_cost(problem, n, &trial, cost, options.dt) {
                Ok(j) if j <= eval.cost + options.armijo_c * decrease => {
                    accepted = Some(trial);
                    break;
                }
                Ok(_) | Err(Error::Divergence { .. }) => trial_step *= options.shrink,
                Err(e) => return Err(e),
            }
        }
        let Some(next) = accepted else {
            message = format!("line search failed at iteration {iterations} (step {trial_step:.3e})");
            break;
        };
        let next_eval = gradient(problem, n, &next, cost, options.dt)?;
        let s: Vec<f64> = next.values.iter().zip(&u.values).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = next_eval.gradient.iter().zip(&eval.gradient).map(|(a, b)| a - b).collect();
        let change = (eval.cost - next_eval.cost).abs();
        stalled = if options.stall_tol > 0.0 && change <= options.stall_tol * next_eval.cost.abs().max(1.0) { stalled + 1 } else { 0 };
        let sy = control_inner(&u, op, &s, &y);
        let ss = control_inner(&u, op, &s, &s);
        step = if sy > 0.0 && ss > 0.0 { (ss / sy).clamp(1e-12, 1e12) } else { trial_step / options.shrink };
        u = next;
        eval = next_eval;
        history.push(eval.cost);
        iterations += 1;
        pg = projected_gradient_norm(&u, op, &eval.gradient);
        converged = pg <= target;
        if !converged && stalled >= STALL_STEPS {
            converged = true;
            message = format!("cost stalled over {STALL_STEPS} steps with projected gradient norm {pg:.3e}");
        }
    }
    if message.is_empty() {
        message = if converged {
            format!("projected gradient norm {pg:.3e} below {target:.3e}")
        } else {
            format!("iteration limit {} reached with projected gradient norm {pg:.3e}", options.max_iters)
        };
    }
    Ok(OcpSolution {
        control: u,
        trajectory: eval.trajectory,
        cost: eval.cost,
        iterations,
        converged,
        gradient_norm: pg,
        cost_history: history,
        message,
    })
}
