//! Lowest eigenpairs of a real symmetric tridiagonal matrix by Sturm-sequence
//! bisection followed by inverse iteration.

use crate::error::{Error, Result};

/// Symmetric tridiagonal matrix with diagonal `diag` and off-diagonal `off`
/// (`off[i]` couples rows `i` and `i + 1`).
pub(crate) struct SymTridiagonal {
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
}

impl SymTridiagonal {
    fn len(&self) -> usize {
        self.diag.len()
    }

    /// Number of eigenvalues strictly below `x`.
    fn count_below(&self, x: f64) -> usize {
        let tiny = f64::MIN_POSITIVE.sqrt();
        let mut count = 0;
        let mut q = self.diag[0] - x;
        if q < 0.0 {
            count += 1;
        }
        for i in 1..self.len() {
            let qp = if q.abs() < tiny { tiny.copysign(q) } else { q };
            q = self.diag[i] - x - self.off[i - 1] * self.off[i - 1] / qp;
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    fn gershgorin(&self) -> (f64, f64) {
        let n = self.len();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let r = if i > 0 { self.off[i - 1].abs() } else { 0.0 }
                + if i + 1 < n { self.off[i].abs() } else { 0.0 };
            lo = lo.min(self.diag[i] - r);
            hi = hi.max(self.diag[i] + r);
        }
        (lo, hi)
    }

    fn apply(&self, v: &[f64]) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut s = self.diag[i] * v[i];
                if i > 0 {
                    s += self.off[i - 1] * v[i - 1];
                }
                if i + 1 < n {
                    s += self.off[i] * v[i + 1];
                }
                s
            })
            .collect()
    }

    /// Solves `(A − σI) x = b` with partial pivoting.
    fn shifted_solve(&self, sigma: f64, b: &[f64]) -> Vec<f64> {
        let n = self.len();
        // Row i of the factor holds (u0, u1, u2): diagonal and two superdiagonals.
        let mut u0: Vec<f64> = self.diag.iter().map(|d| d - sigma).collect();
        let mut u1: Vec<f64> = (0..n).map(|i| if i + 1 < n { self.off[i] } else { 0.0 }).collect();
        let mut u2 = vec![0.0; n];
        let mut sub: Vec<f64> = (0..n).map(|i| if i > 0 { self.off[i - 1] } else { 0.0 }).collect();
        let mut rhs = b.to_vec();
        let eps = f64::EPSILON * self.gershgorin().1.abs().max(1.0);
        for i in 0..n.saturating_sub(1) {
            let below = sub[i + 1];
            if below.abs() > u0[i].abs() {
                // swap rows i and i + 1
                let (a0, a1, a2) = (u0[i], u1[i], u2[i]);
                u0[i] = below;
                u1[i] = u0[i + 1];
                u2[i] = u1[i + 1];
                let f = a0 / below;
                u0[i + 1] = a1 - f * u1[i];
                u1[i + 1] = a2 - f * u2[i];
                rhs.swap(i, i + 1);
                rhs[i + 1] -= f * rhs[i];
            } else {
                let piv = if u0[i] == 0.0 { eps } else { u0[i] };
                u0[i] = piv;
                let f = below / piv;
                u0[i + 1] -= f * u1[i];
                u1[i + 1] -= f * u2[i];
                rhs[i + 1] -= f * rhs[i];
            }
            sub[i + 1] = 0.0;
        }
        if u0[n - 1] == 0.0 {
            u0[n - 1] = eps;
        }
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let mut s = rhs[i];
            if i + 1 < n {
                s -= u1[i] * x[i + 1];
            }
            if i + 2 < n {
                s -= u2[i] * x[i + 2];
            }
            x[i] = s / u0[i];
        }
        x
    }

    /// The `count` smallest eigenvalues with Euclidean-orthonormal eigenvectors.
    pub fn lowest_eigenpairs(&self, count: usize) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
        let n = self.len();
        if count > n {
            return Err(Error::Argument(format!("{count} eigenpairs of a {n}x{n} matrix")));
        }
        let (glo, ghi) = self.gershgorin();
        let scale = glo.abs().max(ghi.abs()).max(1.0);
        let mut values = Vec::with_capacity(count);
        for k in 0..count {
            // smallest x with count_below(x) > k
            let (mut lo, mut hi) = (glo - 1e-12 * scale, ghi + 1e-12 * scale);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if self.count_below(mid) > k {
                    hi = mid;
                } else {
                    lo = mid;
                }
                if hi - lo <= 4.0 * f64::EPSILON * scale {
                    break;
                }
            }
            values.push(0.5 * (lo + hi));
        }

        let mut vectors: Vec<Vec<f64>> = Vec::with_capacity(count);
        for (k, &lambda) in values.iter().enumerate() {
            let mut v: Vec<f64> =
                (0..n).map(|i| 1.0 + 0.1 * ((i * 7 + k * 13) % 17) as f64 / 17.0).collect();
            for _ in 0..4 {
                v = self.shifted_solve(lambda, &v);
                for prev in &vectors {
                    let d: f64 = prev.iter().zip(&v).map(|(a, b)| a * b).sum();
                    v.iter_mut().zip(prev).for_each(|(x, p)| *x -= d * p);
                }
                let nv = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                if !(nv.is_finite() && nv > 0.0) {
                    return Err(Error::Numeric(format!("inverse iteration failed for mode {k}")));
                }
                v.iter_mut().for_each(|x| *x /= nv);
            }
            let av = self.apply(&v);
            let residual =
                av.iter().zip(&v).map(|(a, x)| (a - lambda * x).powi(2)).sum::<f64>().sqrt();
            if residual > 1e-6 * scale {
                return Err(Error::Numeric(format!(
                    "eigenvector {k} residual {residual:.3e} too large"
                )));
            }
            vectors.push(v);
        }
        Ok((values, vectors))
    }
}
