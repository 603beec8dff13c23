//! Computable a priori bounds for Galerkin and reference trajectories, and
//! Lipschitz constants for the pointwise nonlinearity.

use super::control::ControlSignal;
use super::problem::SemilinearProblem;
use super::trajectory::Trajectory;
use crate::error::{Error, Result};
use crate::spectral;

/// Inflation applied to sampled Lipschitz slopes.
pub const LIPSCHITZ_SAFETY: f64 = 1.2;
/// Sampling half-width relative to the observed grid range.
pub const LIPSCHITZ_RANGE_FACTOR: f64 = 1.5;

const VALUE_SAMPLES: usize = 401;
const MAX_SAMPLED_NODES: usize = 96;
const TIME_SAMPLES_PER_INTERVAL: usize = 4;

/// Largest `|v|` over the grid values of every state.
pub fn grid_range(problem: &SemilinearProblem, trajectory: &Trajectory) -> f64 {
    let mut buf = vec![0.0; problem.basis.grid().len()];
    let mut r: f64 = 0.0;
    for s in &trajectory.states {
        problem.basis.synthesize_into(&s.coeffs, &mut buf);
        r = buf.iter().fold(r, |m, v| m.max(v.abs()));
    }
    r
}

fn sample_times(problem: &SemilinearProblem) -> Vec<f64> {
    let n = 8;
    (0..=n).map(|i| problem.start_time + problem.duration() * i as f64 / n as f64).collect()
}

/// Largest finite-difference slope of `v ↦ F(t, ξ, v)` over `[−r, r]`,
/// sampled on a node subset and a few times.
pub fn sampled_slope(problem: &SemilinearProblem, r: f64) -> f64 {
    if problem.nonlinearity.is_zero() {
        return 0.0;
    }
    let r = r.max(1e-12);
    let nodes = problem.basis.nodes();
    let stride = nodes.len().div_ceil(MAX_SAMPLED_NODES).max(1);
    let dv = 2.0 * r / (VALUE_SAMPLES - 1) as f64;
    let f = &problem.nonlinearity;
    let mut worst: f64 = 0.0;
    for t in sample_times(problem) {
        for node in nodes.iter().step_by(stride) {
            let mut prev = f.value(t, node, -r);
            for i in 1..VALUE_SAMPLES {
                let v = -r + i as f64 * dv;
                let cur = f.value(t, node, v);
                worst = worst.max(((cur - prev) / dv).abs()).max(f.derivative(t, node, v).abs());
                prev = cur;
            }
        }
    }
    worst
}

/// `Lip(F)` on the ball explored by `trajectory`: the declared constant when
/// present, otherwise the sampled surrogate over `[−1.5·range, 1.5·range]`
/// inflated by 1.2.
pub fn effective_lipschitz(problem: &SemilinearProblem, trajectory: &Trajectory) -> f64 {
    if let Some(l) = problem.nonlinearity.declared_lipschitz() {
        return l;
    }
    let r = LIPSCHITZ_RANGE_FACTOR * grid_range(problem, trajectory);
    LIPSCHITZ_SAFETY * sampled_slope(problem, r)
}

/// Checks a declared Lipschitz constant against sampled slopes over the
/// range visited by `trajectory`.
pub fn check_declared_lipschitz(problem: &SemilinearProblem, trajectory: &Trajectory) -> Result<()> {
    let Some(declared) = problem.nonlinearity.declared_lipschitz() else {
        return Ok(());
    };
    let r = LIPSCHITZ_RANGE_FACTOR * grid_range(problem, trajectory);
    let observed = sampled_slope(problem, r);
    if observed > declared * (1.0 + 1e-9) + 1e-12 {
        return Err(Error::Model(format!(
            "declared Lipschitz constant {declared} is below the sampled slope {observed}"
        )));
    }
    Ok(())
}

/// `sup_s ‖F(s, 0)‖_H` sampled on `[t0, T]`.
pub fn sup_nonlinearity_at_zero(problem: &SemilinearProblem) -> f64 {
    sample_times(problem)
        .into_iter()
        .map(|t| problem.nonlinearity_at_zero_norm(t))
        .fold(0.0, f64::max)
}

/// `g_i = max_{s ∈ I_i} ‖F(s,0)‖ + Lip(𝔠)‖u_i‖_V` per control interval.
fn forcing_levels(problem: &SemilinearProblem, u: &ControlSignal) -> Vec<f64> {
    let op = &problem.control_op;
    let h = u.interval_len();
    (0..u.n_intervals)
        .map(|i| {
            let a = u.interval_start(i);
            let f0 = (0..=TIME_SAMPLES_PER_INTERVAL)
                .map(|j| problem.nonlinearity_at_zero_norm(a + h * j as f64 / TIME_SAMPLES_PER_INTERVAL as f64))
                .fold(0.0, f64::max);
            f0 + op.lipschitz() * op.v_norm(u.interval(i))
        })
        .collect()
}

/// Gronwall bound on `‖y(t)‖` at each time in `times`:
/// `e^{Lt}‖x‖ + ∫₀ᵗ g + L∫₀ᵗ g(s)e^{L(t−s)} ds` with piecewise-constant `g`.
pub fn a_priori_bound(
    problem: &SemilinearProblem,
    u: &ControlSignal,
    lip_f: f64,
    times: &[f64],
) -> Result<Vec<f64>> {
    problem.check_control(u)?;
    let g = forcing_levels(problem, u);
    let x = problem.initial.norm();
    let h = u.interval_len();
    let l = lip_f;
    Ok(times
        .iter()
        .map(|t| {
            let tau = t - problem.start_time;
            let mut plain = 0.0;
            let mut weighted = 0.0;
            for (i, gi) in g.iter().enumerate() {
                let a = i as f64 * h;
                if a >= tau {
                    break;
                }
                let b = ((i + 1) as f64 * h).min(tau);
                plain += gi * (b - a);
                weighted += if l > 0.0 {
                    gi * ((l * (tau - a)).exp() - (l * (tau - b)).exp()) / l
                } else {
                    gi * (b - a)
                };
            }
            (l * tau).exp() * x + plain + l * weighted
        })
        .collect())
}

/// Constants entering [`tail_bound`].
#[derive(Debug, Clone, Copy)]
pub struct TailConstants {
    pub lip_f: f64,
    /// Radius `𝒞` of the ball containing the trajectory.
    pub state_radius: f64,
    pub f_zero: f64,
    pub lip_c: f64,
    pub control_radius: f64,
}

/// Bound on `‖Π_N^⊥ y(t)‖` at each time in `times` for any admissible control:
/// decay of the initial tail plus the forced contributions damped at rate
/// `λ_{N+1}`.
pub fn tail_bound(problem: &SemilinearProblem, n: usize, c: &TailConstants, times: &[f64]) -> Result<Vec<f64>> {
    if n >= problem.basis.len() {
        return Err(Error::Range(format!(
            "tail bound needs mode N+1 = {} within the basis of {}",
            n + 1,
            problem.basis.len()
        )));
    }
    let lam = problem.basis.eigenvalues()[n];
    if !(lam > 0.0) {
        return Err(Error::Argument(format!("λ_(N+1) = {lam} is not positive for N = {n}")));
    }
    let x_tail = spectral::tail_norm(&problem.initial.coeffs, n);
    // ‖F(y)‖ ≤ Lip·𝒞 + ‖F(0)‖, and the product form Lip·(𝒞 + ‖F(0)‖) when Lip ≥ 1
    let nonlinear = c.lip_f * c.state_radius + c.lip_f.max(1.0) * c.f_zero;
    let forced = nonlinear / lam + c.lip_c * c.control_radius * problem.duration().sqrt() / (2.0 * lam).sqrt();
    Ok(times
        .iter()
        .map(|t| (-lam * (t - problem.start_time)).exp() * x_tail + forced)
        .collect())
}
