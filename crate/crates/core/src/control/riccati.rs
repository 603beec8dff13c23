//! Linear-quadratic tracking via the matrix Riccati equation, used as an
//! independent oracle for the optimizer on linear problems.
//!
//! For `y' = Ay + Bu + f` and `J = ∫ ½(y−d)ᵀQ(y−d) + ½uᵀRu dt` the value is
//! `V(t, y) = ½yᵀP(t)y + q(t)ᵀy + r(t)` with
//! `−Ṗ = AᵀP + PA − PSP + Q`, `−q̇ = (A − SP)ᵀq − Qd + Pf`,
//! `−ṙ = ½dᵀQd − ½qᵀSq + qᵀf`, `S = BR⁻¹Bᵀ`, zero terminal data.

use nalgebra::{DMatrix, DVector};

use super::cost::CostFunctional;
use crate::dynamics::SemilinearProblem;
use crate::error::{Error, Result};
use crate::spectral;

const BLOW_UP: f64 = 1e12;

#[derive(Debug, Clone)]
pub struct RiccatiSolution {
    /// Increasing RK4 nodes from the start time to the horizon.
    pub times: Vec<f64>,
    pub p: Vec<DMatrix<f64>>,
    pub q: Vec<DVector<f64>>,
    pub r: Vec<f64>,
    gain: DMatrix<f64>,
}

impl RiccatiSolution {
    fn index(&self, t: f64) -> Result<usize> {
        let span = self.times.last().unwrap() - self.times[0];
        let i = self
            .times
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - t).abs().total_cmp(&(b.1 - t).abs()))
            .map(|(i, _)| i)
            .unwrap();
        if (self.times[i] - t).abs() > 1e-9 * span.max(1.0) {
            return Err(Error::Argument(format!("t = {t} is not a Riccati grid time")));
        }
        Ok(i)
    }

    /// `V(t, x)` at a grid time.
    pub fn value_at(&self, t: f64, x: &DVector<f64>) -> Result<f64> {
        let i = self.index(t)?;
        Ok(0.5 * x.dot(&(&self.p[i] * x)) + self.q[i].dot(x) + self.r[i])
    }

    pub fn value(&self, x: &DVector<f64>) -> f64 {
        0.5 * x.dot(&(&self.p[0] * x)) + self.q[0].dot(x) + self.r[0]
    }

    /// Optimal feedback `u = −R⁻¹Bᵀ(P(t)y + q(t))` at a grid time.
    pub fn feedback(&self, t: f64, y: &DVector<f64>) -> Result<DVector<f64>> {
        let i = self.index(t)?;
        Ok(-(&self.gain * (&self.p[i] * y + &self.q[i])))
    }
}

/// Solves the tracking Riccati system backward from `horizon` to `start`
/// with `steps` classical RK4 steps.
#[allow(clippy::too_many_arguments)]
pub fn lq_riccati_oracle(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    q_w: &DMatrix<f64>,
    r_w: &DMatrix<f64>,
    target: &DVector<f64>,
    drift: &DVector<f64>,
    start: f64,
    horizon: f64,
    steps: usize,
) -> Result<RiccatiSolution> {
    let n = a.nrows();
    if a.ncols() != n || b.nrows() != n || q_w.shape() != (n, n) || target.len() != n || drift.len() != n {
        return Err(Error::Dimension("inconsistent LQ matrix shapes".into()));
    }
    if r_w.shape() != (b.ncols(), b.ncols()) {
        return Err(Error::Dimension("R must be square with one row per control".into()));
    }
    if !(horizon > start) || steps == 0 {
        return Err(Error::Argument(format!("Riccati window [{start}, {horizon}] with {steps} steps")));
    }
    let chol = r_w
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Argument("R is not positive definite".into()))?;
    let gain = chol.solve(&b.transpose());
    let s = b * &gain;
    let qd = q_w * target;
    let dqd = 0.5 * target.dot(&qd);

    let rhs = |p: &DMatrix<f64>, q: &DVector<f64>| {
        let ap = a.transpose() * p;
        let dp = &ap + ap.transpose() - p * &s * p + q_w;
        let dq = (a - &s * p).transpose() * q - &qd + p * drift;
        let dr = dqd - 0.5 * q.dot(&(&s * q)) + q.dot(drift);
        (dp, dq, dr)
    };

    let h = (horizon - start) / steps as f64;
    let mut p = DMatrix::zeros(n, n);
    let mut q = DVector::zeros(n);
    let mut r = 0.0;
    let mut ps = vec![p.clone()];
    let mut qs = vec![q.clone()];
    let mut rs = vec![r];
    for step in 0..steps {
        let (k1p, k1q, k1r) = rhs(&p, &q);
        let (k2p, k2q, k2r) = rhs(&(&p + &k1p * (h / 2.0)), &(&q + &k1q * (h / 2.0)));
        let (k3p, k3q, k3r) = rhs(&(&p + &k2p * (h / 2.0)), &(&q + &k2q * (h / 2.0)));
        let (k4p, k4q, k4r) = rhs(&(&p + &k3p * h), &(&q + &k3q * h));
        p += (k1p + k2p * 2.0 + k3p * 2.0 + k4p) * (h / 6.0);
        q += (k1q + k2q * 2.0 + k3q * 2.0 + k4q) * (h / 6.0);
        r += (k1r + 2.0 * k2r + 2.0 * k3r + k4r) * (h / 6.0);
        // keep P symmetric against round-off drift
        p = (&p + p.transpose()) * 0.5;
        let size = p.amax().max(q.amax()).max(r.abs());
        if !size.is_finite() || size > BLOW_UP {
            return Err(Error::Numeric(format!(
                "Riccati solution blew up at t = {}",
                horizon - (step + 1) as f64 * h
            )));
        }
        ps.push(p.clone());
        qs.push(q.clone());
        rs.push(r);
    }
    ps.reverse();
    qs.reverse();
    rs.reverse();
    let times = (0..=steps).map(|i| start + i as f64 * h).collect();
    Ok(RiccatiSolution { times, p: ps, q: qs, r: rs, gain })
}

/// Matrices of the Galerkin system at `n` modes for an affine nonlinearity,
/// in the tracking form accepted by [`lq_riccati_oracle`].
#[derive(Debug, Clone)]
pub struct LqSystem {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub q_w: DMatrix<f64>,
    pub r_w: DMatrix<f64>,
    pub target: DVector<f64>,
    pub drift: DVector<f64>,
    /// `(w/2)‖Π_N^⊥ T_d‖²`, the part of `𝒢` no control can affect.
    pub tail_rate: f64,
}

impl LqSystem {
    pub fn from_problem(problem: &SemilinearProblem, n: usize, cost: &CostFunctional) -> Result<Self> {
        problem.check_truncation(n)?;
        cost.check_basis(problem)?;
        if !(cost.mu > 0.0) {
            return Err(Error::Precondition("the LQ oracle needs mu > 0".into()));
        }
        let basis = &problem.basis;
        let grid_len = basis.grid().len();
        let t = problem.start_time;
        let d0 = problem.eval_derivative(t, &vec![0.0; grid_len]);
        for probe in [1.0, -3.7] {
            let d = problem.eval_derivative(t, &vec![probe; grid_len]);
            if d.iter().zip(&d0).any(|(a, b)| (a - b).abs() > 1e-12 * (1.0 + b.abs())) {
                return Err(Error::Argument("nonlinearity is not affine".into()));
            }
        }
        let mut a = DMatrix::zeros(n, n);
        for k in 0..n {
            let col = basis.mode(k);
            let weighted: Vec<f64> = col
                .iter()
                .zip(&d0)
                .zip(&basis.grid().weights)
                .map(|((e, d), w)| e * d * w)
                .collect();
            let row = basis.analyze_weighted(&weighted, n);
            for (j, v) in row.into_iter().enumerate() {
                a[(j, k)] = v;
            }
            a[(k, k)] -= basis.eigenvalues()[k];
        }
        let op = &problem.control_op;
        let m = op.dof_count();
        let mut b = DMatrix::zeros(n, m);
        for d in 0..m {
            let mut e = vec![0.0; m];
            e[d] = 1.0;
            let col = basis.analyze_slice(&op.apply(&e), n);
            for (j, v) in col.into_iter().enumerate() {
                b[(j, d)] = v;
            }
        }
        let f0 = problem.eval_nonlinearity(t, &vec![0.0; grid_len]);
        let drift = DVector::from_vec(basis.analyze_slice(&f0, n));
        let mut target = DVector::zeros(n);
        for (k, v) in cost.target.coeffs.iter().take(n).enumerate() {
            target[k] = *v;
        }
        let w = cost.tracking_weight;
        Ok(Self {
            a,
            b,
            q_w: DMatrix::identity(n, n) * w,
            r_w: DMatrix::from_diagonal(&DVector::from_iterator(m, op.dof_masses().iter().map(|x| cost.mu * x))),
            target,
            drift,
            tail_rate: 0.5 * w * spectral::tail_norm(&cost.target.coeffs, n).powi(2),
        })
    }

    pub fn solve(&self, start: f64, horizon: f64, steps: usize) -> Result<RiccatiSolution> {
        lq_riccati_oracle(&self.a, &self.b, &self.q_w, &self.r_w, &self.target, &self.drift, start, horizon, steps)
    }
}

/// Continuous-time optimal value of the LQ Galerkin problem at `n` modes
/// from `(problem.start_time, Π_N x)`, with `steps` RK4 steps.
pub fn riccati_value(problem: &SemilinearProblem, n: usize, cost: &CostFunctional, steps: usize) -> Result<f64> {
    let sys = LqSystem::from_problem(problem, n, cost)?;
    let sol = sys.solve(problem.start_time, problem.horizon, steps)?;
    let x = DVector::from_column_slice(&problem.initial.coeffs[..n]);
    Ok(sol.value(&x) + sys.tail_rate * problem.duration())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(v: f64) -> DMatrix<f64> {
        DMatrix::from_element(1, 1, v)
    }

    #[test]
    fn uncontrolled_free_problem_has_zero_value() {
        let n = 3;
        let sol = lq_riccati_oracle(
            &DMatrix::zeros(n, n),
            &DMatrix::identity(n, n),
            &DMatrix::zeros(n, n),
            &(DMatrix::identity(n, n) * 0.5),
            &DVector::zeros(n),
            &DVector::zeros(n),
            0.0,
            2.0,
            100,
        )
        .unwrap();
        assert!(sol.p.iter().all(|p| p.amax() == 0.0));
        assert_eq!(sol.value(&DVector::from_element(n, 1.3)), 0.0);
    }

    #[test]
    fn long_horizon_approaches_algebraic_root() {
        let z = DVector::zeros(1);
        let sol = lq_riccati_oracle(&scalar(-1.0), &scalar(1.0), &scalar(1.0), &scalar(1.0), &z, &z, 0.0, 20.0, 4000)
            .unwrap();
        assert!((sol.p[0][(0, 0)] - (2f64.sqrt() - 1.0)).abs() < 1e-10);
    }

    #[test]
    fn value_is_resolved_in_the_step() {
        let a = DMatrix::from_row_slice(2, 2, &[-1.0, 0.3, 0.0, -2.0]);
        let b = DMatrix::from_row_slice(2, 1, &[1.0, 0.5]);
        let q = DMatrix::identity(2, 2);
        let r = scalar(0.2);
        let d = DVector::from_vec(vec![0.4, -0.2]);
        let f = DVector::from_vec(vec![0.1, 0.0]);
        let x = DVector::from_vec(vec![1.0, 1.0]);
        let v1 = lq_riccati_oracle(&a, &b, &q, &r, &d, &f, 0.0, 1.0, 500).unwrap().value(&x);
        let v2 = lq_riccati_oracle(&a, &b, &q, &r, &d, &f, 0.0, 1.0, 1000).unwrap().value(&x);
        assert!((v1 - v2).abs() < 1e-8);
    }

    #[test]
    fn indefinite_weight_is_rejected() {
        let z = DVector::zeros(1);
        let err = lq_riccati_oracle(&scalar(0.0), &scalar(1.0), &scalar(1.0), &scalar(-1.0), &z, &z, 0.0, 1.0, 10);
        assert!(err.is_err());
    }

    #[test]
    fn blow_up_is_reported() {
        // Q = −1 gives P(T − τ) = −tan τ, singular at τ = π/2
        let z = DVector::zeros(1);
        let err = lq_riccati_oracle(&scalar(0.0), &scalar(1.0), &scalar(-1.0), &scalar(1.0), &z, &z, 0.0, 2.0, 2000);
        assert!(matches!(err, Err(Error::Numeric(_))));
    }
}
