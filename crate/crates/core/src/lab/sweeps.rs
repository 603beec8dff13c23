use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::report::{nonincreasing, ConvergenceReport};
use crate::control::{value_function, CostFunctional, ValueOptions};
use crate::dynamics::{integrate, solve_reference, ControlSignal, SemilinearProblem, Trajectory};
use crate::error::{Error, Result};
use crate::spectral::SpectralField;

/// Time-integration settings of a sweep: Galerkin step and reference step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Steps {
    pub dt: f64,
    pub dt_ref: f64,
}

fn check_levels(problem: &SemilinearProblem, n_values: &[usize], n_ref: usize) -> Result<()> {
    problem.check_truncation(n_ref)?;
    if n_values.is_empty() || !n_values.windows(2).all(|w| w[0] < w[1]) {
        return Err(Error::Argument("N values must be nonempty and increasing".into()));
    }
    let largest = *n_values.last().unwrap();
    if 2 * largest > n_ref {
        return Err(Error::Argument(format!("largest N = {largest} exceeds N_ref/2 = {}", n_ref / 2)));
    }
    Ok(())
}

/// Sample `i` of the control stream for `seed`; prefixes of the stream are
/// shared across sample counts.
pub fn sample_control(template: &ControlSignal, seed: u64, i: usize) -> ControlSignal {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(i as u64);
    template.random(&mut rng)
}

fn errors_against(
    problem: &SemilinearProblem,
    u: &ControlSignal,
    reference: &Trajectory,
    n_values: &[usize],
    dt: f64,
) -> Result<Vec<f64>> {
    n_values
        .par_iter()
        .map(|&n| integrate(problem, n, u, dt)?.sup_distance(reference))
        .collect()
}

/// `sup_t ‖y_N(t; Π_N x, u) − y_ref(t)‖` for each `N`.
pub fn trajectory_convergence_sweep(
    problem: &SemilinearProblem,
    u: &ControlSignal,
    n_values: &[usize],
    n_ref: usize,
    steps: Steps,
) -> Result<ConvergenceReport> {
    check_levels(problem, n_values, n_ref)?;
    let reference = solve_reference(problem, u, n_ref, steps.dt_ref)?;
    let errors = errors_against(problem, u, &reference, n_values, steps.dt)?;
    let residual: Vec<f64> = n_values.iter().map(|n| reference.sup_residual(*n)).collect();
    let mut report = ConvergenceReport::new(
        "trajectory",
        "sup over stored times of the distance between Galerkin and reference trajectories for one control",
        n_values.to_vec(),
        n_ref,
    );
    if !nonincreasing(&errors) {
        report.flags.push("sup error is not nonincreasing in N".into());
    }
    report.metrics.insert("sup_error".into(), errors);
    report.metrics.insert("sup_residual".into(), residual);
    report.sample_count = 1;
    report.settings.insert("dt".into(), steps.dt);
    report.settings.insert("dt_ref".into(), steps.dt_ref);
    Ok(report)
}

/// Monte Carlo surrogate of `sup_u sup_t ‖y_N − y‖` and of
/// `sup_u sup_t ‖Π_N^⊥ y‖` over `k_samples` seeded admissible controls.
pub fn uniform_convergence_estimate(
    problem: &SemilinearProblem,
    template: &ControlSignal,
    n_values: &[usize],
    n_ref: usize,
    k_samples: usize,
    seed: u64,
    steps: Steps,
) -> Result<ConvergenceReport> {
    check_levels(problem, n_values, n_ref)?;
    if k_samples == 0 {
        return Err(Error::Argument("at least one control sample is required".into()));
    }
    let per_sample: Vec<Result<(Vec<f64>, Vec<f64>)>> = (0..k_samples)
        .into_par_iter()
        .map(|i| {
            let u = sample_control(template, seed, i);
            let reference = solve_reference(problem, &u, n_ref, steps.dt_ref)?;
            let errors = errors_against(problem, &u, &reference, n_values, steps.dt)?;
            let residual = n_values.iter().map(|n| reference.sup_residual(*n)).collect();
            Ok((errors, residual))
        })
        .collect();
    let mut max_err = vec![0.0f64; n_values.len()];
    let mut max_res = vec![0.0f64; n_values.len()];
    let mut report = ConvergenceReport::new(
        "uniform",
        "maximum over sampled admissible controls of the sup-in-time Galerkin error and high-mode residual",
        n_values.to_vec(),
        n_ref,
    );
    for (i, sample) in per_sample.into_iter().enumerate() {
        let (errors, residual) = sample?;
        if !nonincreasing(&residual) {
            report.flags.push(format!("sample {i}: residual not nonincreasing in N"));
        }
        for j in 0..n_values.len() {
            max_err[j] = max_err[j].max(errors[j]);
            max_res[j] = max_res[j].max(residual[j]);
        }
    }
    if !nonincreasing(&max_err) {
        report.flags.push("max sup error is not nonincreasing in N".into());
    }
    report.metrics.insert("max_sup_error".into(), max_err);
    report.metrics.insert("max_sup_residual".into(), max_res);
    report.sample_count = k_samples;
    report.seed = Some(seed);
    report.settings.insert("dt".into(), steps.dt);
    report.settings.insert("dt_ref".into(), steps.dt_ref);
    Ok(report)
}

/// Value estimates per time and truncation; `None` marks optimizer failure.
#[derive(Debug, Clone)]
pub struct ValueTable {
    pub t_values: Vec<f64>,
    /// `values[i][j]` for `t_values[i]` and level `j` (the last level is `N_ref`).
    pub values: Vec<Vec<Option<f64>>>,
    pub disagreement_flags: Vec<String>,
}

/// `max_t |v_N(t, Π_N x) − v_{N_ref}(t, x)|` for each `N`.
#[allow(clippy::too_many_arguments)]
pub fn value_convergence_sweep(
    problem: &SemilinearProblem,
    cost: &CostFunctional,
    template: &ControlSignal,
    t_values: &[f64],
    x: &SpectralField,
    n_values: &[usize],
    n_ref: usize,
    options: &ValueOptions,
) -> Result<(ConvergenceReport, ValueTable)> {
    check_levels(problem, n_values, n_ref)?;
    if t_values.iter().any(|t| *t < problem.start_time || *t > problem.horizon) {
        return Err(Error::Argument("t values must lie in [t0, T]".into()));
    }
    let mut levels = n_values.to_vec();
    levels.push(n_ref);
    let tasks: Vec<(usize, usize)> =
        (0..t_values.len()).flat_map(|i| (0..levels.len()).map(move |j| (i, j))).collect();
    let results: Vec<Result<Option<(f64, bool)>>> = tasks
        .par_iter()
        .map(|&(i, j)| {
            match value_function(problem, levels[j], cost, template, t_values[i], x, options) {
                Ok(v) => Ok(Some((v.value, v.disagreement_flag))),
                Err(Error::NonConvergence(_)) => Ok(None),
                Err(e) => Err(e),
            }
        })
        .collect();
    let mut values = vec![vec![None; levels.len()]; t_values.len()];
    let mut table_flags = Vec::new();
    for (&(i, j), r) in tasks.iter().zip(results) {
        if let Some((v, flag)) = r? {
            values[i][j] = Some(v);
            if flag {
                table_flags.push(format!("multistart disagreement at t = {}, N = {}", t_values[i], levels[j]));
            }
        }
    }
    let mut report = ConvergenceReport::new(
        "value",
        "maximum over sampled times of the gap between Galerkin and reference value functions",
        n_values.to_vec(),
        n_ref,
    );
    let mut gaps = vec![0.0f64; n_values.len()];
    for (i, row) in values.iter().enumerate() {
        let mut per_t = vec![f64::NAN; n_values.len()];
        for j in 0..n_values.len() {
            match (row[j], row[levels.len() - 1]) {
                (Some(v), Some(r)) => {
                    per_t[j] = (v - r).abs();
                    gaps[j] = gaps[j].max(per_t[j]);
                }
                _ => report.flags.push(format!(
                    "optimizer did not converge at t = {}, N = {}; entry excluded",
                    t_values[i], levels[j]
                )),
            }
        }
        report.metrics.insert(format!("gap_t={}", t_values[i]), per_t);
        if let Some(r) = row[levels.len() - 1] {
            report.settings.insert(format!("reference_value_t={}", t_values[i]), r);
        }
        report
            .metrics
            .insert(format!("value_t={}", t_values[i]), row[..n_values.len()].iter().map(|v| v.unwrap_or(f64::NAN)).collect());
    }
    report.flags.extend(table_flags.iter().cloned());
    report.metrics.insert("max_gap".into(), gaps);
    report.seed = Some(options.seed);
    report.sample_count = options.random_starts + 1;
    report.settings.insert("dt".into(), options.optimizer.dt);
    report.settings.insert("tol".into(), options.optimizer.tol);
    Ok((report, ValueTable { t_values: t_values.to_vec(), values, disagreement_flags: table_flags }))
}
