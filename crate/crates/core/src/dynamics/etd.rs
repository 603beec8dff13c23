//! Second-order exponential time differencing (ETD2RK) for the Galerkin
//! systems `y_N' = L_N y_N + Π_N F(y_N) + Π_N 𝔠(u)`.
//!
//! The diagonal linear part is propagated exactly. With `F ≡ 0` and
//! piecewise-constant controls every step reproduces the variation-of-constants
//! formula exactly.

use super::control::ControlSignal;
use super::problem::SemilinearProblem;
use super::trajectory::Trajectory;
use crate::error::{Error, Result};
use crate::spectral::{self, SpectralField};

const PHI_TAYLOR_THRESHOLD: f64 = 1e-4;
const PHI2_TAYLOR_THRESHOLD: f64 = 1e-2;

/// `φ₁(z) = (e^z − 1)/z`.
pub fn phi1(z: f64) -> f64 {
    if z.abs() < PHI_TAYLOR_THRESHOLD {
        1.0 + z / 2.0 + z * z / 6.0 + z * z * z / 24.0
    } else {
        z.exp_m1() / z
    }
}

/// `φ₂(z) = (e^z − 1 − z)/z²`.
pub fn phi2(z: f64) -> f64 {
    if z.abs() < PHI2_TAYLOR_THRESHOLD {
        // error below z⁶/5040
        1.0 / 2.0 + z / 6.0 + z * z / 24.0 + z.powi(3) / 120.0 + z.powi(4) / 720.0
            + z.powi(5) / 5040.0
    } else {
        (z.exp_m1() - z) / (z * z)
    }
}

/// Per-mode factors `e^{−λh}`, `h·φ₁(−λh)`, `h·φ₂(−λh)`.
#[derive(Debug, Clone)]
pub(crate) struct StepFactors {
    pub decay: Vec<f64>,
    pub phi1: Vec<f64>,
    pub phi2: Vec<f64>,
}

impl StepFactors {
    pub fn new(eigenvalues: &[f64], h: f64) -> Self {
        let z: Vec<f64> = eigenvalues.iter().map(|l| -l * h).collect();
        Self {
            decay: z.iter().map(|z| z.exp()).collect(),
            phi1: z.iter().map(|z| h * phi1(*z)).collect(),
            phi2: z.iter().map(|z| h * phi2(*z)).collect(),
        }
    }
}

/// Number of steps of size `dt` per control interval.
pub fn steps_per_interval(u: &ControlSignal, dt: f64) -> Result<usize> {
    if !(dt > 0.0) {
        return Err(Error::Argument(format!("time step {dt} must be positive")));
    }
    let h = u.interval_len();
    let ratio = h / dt;
    let steps = ratio.round();
    if steps < 1.0 || (ratio - steps).abs() > 1e-9 * ratio.max(1.0) {
        return Err(Error::Argument(format!(
            "time step {dt} does not divide the control interval {h}"
        )));
    }
    Ok(steps as usize)
}

/// A forward solve, optionally with the nonlinearity derivatives needed by
/// the adjoint.
pub(crate) struct ForwardRun {
    pub trajectory: Trajectory,
    pub h: f64,
    pub steps_per_interval: usize,
    pub factors: StepFactors,
    /// `F'(t_n, S y_n)` on the grid, per step.
    pub deriv_state: Vec<Vec<f64>>,
    /// `F'(t_n + h, S a_n)` on the grid at the predictor, per step.
    pub deriv_stage: Vec<Vec<f64>>,
}

struct GalerkinEval<'a> {
    problem: &'a SemilinearProblem,
    n: usize,
    grid_buf: Vec<f64>,
}

impl<'a> GalerkinEval<'a> {
    fn new(problem: &'a SemilinearProblem, n: usize) -> Self {
        Self { problem, n, grid_buf: vec![0.0; problem.basis.grid().len()] }
    }

    /// `Π_N F(t, y) + forcing`, plus grid derivatives when requested.
    fn term(&mut self, t: f64, y: &[f64], forcing: &[f64], deriv: bool) -> (Vec<f64>, Option<Vec<f64>>) {
        let p = self.problem;
        if p.nonlinearity.is_zero() {
            let d = deriv.then(|| vec![0.0; self.grid_buf.len()]);
            return (forcing.to_vec(), d);
        }
        p.basis.synthesize_into(y, &mut self.grid_buf);
        let weights = &p.basis.grid().weights;
        let nodes = p.basis.nodes();
        let f = &p.nonlinearity;
        let weighted: Vec<f64> = nodes
            .iter()
            .zip(&self.grid_buf)
            .zip(weights)
            .map(|((node, v), w)| w * f.value(t, node, *v))
            .collect();
        let d = deriv.then(|| {
            nodes.iter().zip(&self.grid_buf).map(|(node, v)| f.derivative(t, node, *v)).collect()
        });
        let mut out = p.basis.analyze_weighted(&weighted, self.n);
        out.iter_mut().zip(forcing).for_each(|(o, b)| *o += b);
        (out, d)
    }
}

/// `Π_N 𝔠(u_i)` for every control interval.
pub(crate) fn interval_forcing(problem: &SemilinearProblem, n: usize, u: &ControlSignal) -> Vec<Vec<f64>> {
    (0..u.n_intervals)
        .map(|i| {
            if u.dofs == 0 {
                return vec![0.0; n];
            }
            let grid = problem.control_op.apply(u.interval(i));
            problem.basis.analyze_slice(&grid, n)
        })
        .collect()
}

pub(crate) fn run_forward(
    problem: &SemilinearProblem,
    n: usize,
    u: &ControlSignal,
    dt: f64,
    record: bool,
) -> Result<ForwardRun> {
    problem.check_truncation(n)?;
    problem.check_control(u)?;
    let spi = steps_per_interval(u, dt)?;
    let h = u.interval_len() / spi as f64;
    let factors = StepFactors::new(&problem.basis.eigenvalues()[..n], h);
    let forcing = interval_forcing(problem, n, u);
    let mut eval = GalerkinEval::new(problem, n);

    let total = spi * u.n_intervals;
    let id = problem.basis.id().to_string();
    let mut y: Vec<f64> = problem.initial.coeffs[..n].to_vec();
    let mut times = Vec::with_capacity(total + 1);
    let mut states = Vec::with_capacity(total + 1);
    times.push(problem.start_time);
    states.push(SpectralField { basis_id: id.clone(), coeffs: y.clone() });
    let mut deriv_state = Vec::new();
    let mut deriv_stage = Vec::new();

    for step in 0..total {
        let b = &forcing[step / spi];
        let t = problem.start_time + step as f64 * h;
        let (n0, d0) = eval.term(t, &y, b, record);
        let a: Vec<f64> = (0..n).map(|k| factors.decay[k] * y[k] + factors.phi1[k] * n0[k]).collect();
        let (n1, d1) = eval.term(t + h, &a, b, record);
        for k in 0..n {
            y[k] = a[k] + factors.phi2[k] * (n1[k] - n0[k]);
        }
        let t_next = problem.start_time + (step + 1) as f64 * h;
        let norm = spectral::norm(&y);
        if !norm.is_finite() || norm > problem.divergence_guard {
            return Err(Error::Divergence { norm, guard: problem.divergence_guard, time: t_next });
        }
        if let (Some(d0), Some(d1)) = (d0, d1) {
            deriv_state.push(d0);
            deriv_stage.push(d1);
        }
        times.push(t_next);
        states.push(SpectralField { basis_id: id.clone(), coeffs: y.clone() });
    }
    // land exactly on the horizon
    if let Some(t) = times.last_mut() {
        *t = u.end;
    }
    Ok(ForwardRun {
        trajectory: Trajectory { times, states },
        h,
        steps_per_interval: spi,
        factors,
        deriv_state,
        deriv_stage,
    })
}

/// Galerkin trajectory `y_N(·; Π_N x, u)` with ETD2RK steps of size `dt`.
pub fn integrate(problem: &SemilinearProblem, n: usize, u: &ControlSignal, dt: f64) -> Result<Trajectory> {
    Ok(run_forward(problem, n, u, dt, false)?.trajectory)
}

/// High-resolution surrogate for the mild solution: the Galerkin solution at
/// `n_ref` modes and step `dt_ref`.
pub fn solve_reference(
    problem: &SemilinearProblem,
    u: &ControlSignal,
    n_ref: usize,
    dt_ref: f64,
) -> Result<Trajectory> {
    integrate(problem, n_ref, u, dt_ref)
}

/// `L_N y + Π_N F(t, y) + Π_N 𝔠(u)` for a state supported on the first `n` modes.
pub fn galerkin_rhs(
    problem: &SemilinearProblem,
    n: usize,
    t: f64,
    state: &SpectralField,
    u_value: &[f64],
) -> Result<SpectralField> {
    problem.check_truncation(n)?;
    if u_value.len() != problem.control_op.dof_count() {
        return Err(Error::Dimension(format!(
            "control value has {} entries, operator expects {}",
            u_value.len(),
            problem.control_op.dof_count()
        )));
    }
    if state.len() > problem.basis.len() {
        return Err(Error::Dimension("state longer than the basis".into()));
    }
    if spectral::tail_norm(&state.coeffs, n) != 0.0 {
        return Err(Error::Argument(format!("state is not supported on the first {n} modes")));
    }
    let mut y = state.coeffs.clone();
    y.resize(n.max(y.len()), 0.0);
    let forcing = if u_value.is_empty() {
        vec![0.0; n]
    } else {
        problem.basis.analyze_slice(&problem.control_op.apply(u_value), n)
    };
    let mut eval = GalerkinEval::new(problem, n);
    let (nl, _) = eval.term(t, &y[..n], &forcing, false);
    let lambdas = problem.basis.eigenvalues();
    let mut out = vec![0.0; state.len().max(n)];
    for k in 0..n {
        out[k] = -lambdas[k] * y[k] + nl[k];
    }
    SpectralField::new(state.basis_id.clone(), out)
}
