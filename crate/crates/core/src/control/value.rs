use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cost::CostFunctional;
use super::optimize::{optimize, OcpSolution, OptimizerOptions};
use crate::dynamics::{ControlSignal, SemilinearProblem};
use crate::error::{Error, Result};
use crate::spectral::SpectralField;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ValueOptions {
    pub optimizer: OptimizerOptions,
    /// Random admissible starts in addition to the zero control.
    pub random_starts: usize,
    pub seed: u64,
    /// Spread of converged start costs above which the estimate is flagged.
    pub disagreement_tol: f64,
}

impl Default for ValueOptions {
    fn default() -> Self {
        Self { optimizer: OptimizerOptions::default(), random_starts: 4, seed: 0, disagreement_tol: 1e-6 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct StartOutcome {
    pub cost: f64,
    pub converged: bool,
    pub iterations: usize,
}

/// Best multistart estimate of `v_N(t, Π_N x)`, an upper bound on the infimum.
#[derive(Debug, Clone, Serialize)]
pub struct ValueEstimate {
    pub t: f64,
    pub value: f64,
    #[serde(skip)]
    pub best: Option<OcpSolution>,
    pub starts: Vec<StartOutcome>,
    /// Largest minus smallest converged cost.
    pub disagreement: f64,
    pub disagreement_flag: bool,
}

/// The initial controls used for a multistart on `template`.
pub fn multistart_controls(template: &ControlSignal, random_starts: usize, seed: u64) -> Result<Vec<ControlSignal>> {
    let zero = ControlSignal::zero(
        template.start,
        template.end,
        template.n_intervals,
        template.lower.clone(),
        template.upper.clone(),
    )?;
    let mut starts = vec![zero];
    for k in 0..random_starts {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(k as u64 + 1);
        starts.push(template.random(&mut rng));
    }
    Ok(starts)
}

/// `v_N(t, Π_N x) = inf J_N` over controls on `[t, T]`, restricted from
/// `template` (which must cover the full horizon with `t` on an interval
/// boundary).
pub fn value_function(
    problem: &SemilinearProblem,
    n: usize,
    cost: &CostFunctional,
    template: &ControlSignal,
    t: f64,
    x: &SpectralField,
    options: &ValueOptions,
) -> Result<ValueEstimate> {
    let tol = 1e-9 * problem.horizon.abs().max(1.0);
    if (t - problem.horizon).abs() <= tol {
        return Ok(ValueEstimate {
            t,
            value: 0.0,
            best: None,
            starts: Vec::new(),
            disagreement: 0.0,
            disagreement_flag: false,
        });
    }
    if t < problem.start_time - tol || t > problem.horizon {
        return Err(Error::Argument(format!(
            "t = {t} outside [{}, {}]",
            problem.start_time, problem.horizon
        )));
    }
    let window = template.restrict_from(t)?;
    let sub = problem.restarted(t, x)?;
    let starts = multistart_controls(&window, options.random_starts, options.seed)?;
    let runs: Vec<Result<OcpSolution>> =
        starts.par_iter().map(|u0| optimize(&sub, n, cost, u0, &options.optimizer)).collect();
    let mut outcomes = Vec::with_capacity(runs.len());
    let mut best: Option<OcpSolution> = None;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for run in runs {
        let sol = match run {
            Ok(s) => s,
            Err(Error::Divergence { .. }) => continue,
            Err(e) => return Err(e),
        };
        outcomes.push(StartOutcome { cost: sol.cost, converged: sol.converged, iterations: sol.iterations });
        if !sol.converged {
            continue;
        }
        lo = lo.min(sol.cost);
        hi = hi.max(sol.cost);
        if best.as_ref().is_none_or(|b| sol.cost < b.cost) {
            best = Some(sol);
        }
    }
    let Some(best) = best else {
        return Err(Error::NonConvergence(format!(
            "no multistart run converged for the value at t = {t}, N = {n}"
        )));
    };
    let disagreement = hi - lo;
    Ok(ValueEstimate {
        t,
        value: best.cost,
        best: Some(best),
        starts: outcomes,
        disagreement,
        disagreement_flag: disagreement > options.disagreement_tol,
    })
}
