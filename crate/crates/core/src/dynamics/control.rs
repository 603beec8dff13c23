//! Region-structured control operators `𝔠(v)[ξ] = G(ṽ_1(ξ), …, ṽ_M(ξ))` and
//! piecewise-constant control signals.

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::QuadratureGrid;

/// Spatial degrees of freedom of one region.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegionDofs {
    /// One value applied uniformly over the region.
    Uniform,
    /// One value per grid node of the region.
    Nodal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub name: String,
    /// Indices of the grid nodes in `Ω_i`.
    pub nodes: Vec<usize>,
    pub dofs: RegionDofs,
}

/// The coupling `G` combining regional inputs into one forcing value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "type")]
pub enum Coupling {
    /// `G(ζ) = Σ ζ_i`.
    Sum,
    /// `G(ζ) = s·tanh(Σ ζ_i / s)`, a smooth saturating response.
    Saturating { scale: f64 },
}

impl Coupling {
    fn eval(&self, total: f64) -> f64 {
        match self {
            Coupling::Sum => total,
            Coupling::Saturating { scale } => scale * (total / scale).tanh(),
        }
    }

    /// `∂G/∂ζ_i`, identical for every region since both couplings act on the sum.
    fn slope(&self, total: f64) -> f64 {
        match self {
            Coupling::Sum => 1.0,
            Coupling::Saturating { scale } => {
                let c = (total / scale).cosh();
                1.0 / (c * c)
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct ControlOperator {
    regions: Vec<Region>,
    coupling: Coupling,
    /// First dof of each region.
    offsets: Vec<usize>,
    n_dofs: usize,
    /// For each grid node, the dofs acting on it.
    members: Vec<Vec<usize>>,
    /// `‖e_d‖²_V` for each unit dof vector.
    masses: Vec<f64>,
    weights: Vec<f64>,
    lipschitz: f64,
}

impl ControlOperator {
    pub fn new(regions: Vec<Region>, coupling: Coupling, grid: &QuadratureGrid) -> Result<Self> {
        if let Coupling::Saturating { scale } = coupling {
            if !(scale > 0.0) {
                return Err(Error::Model(format!("saturation scale {scale} must be positive")));
            }
        }
        let mut offsets = Vec::with_capacity(regions.len());
        let mut members = vec![Vec::new(); grid.len()];
        let mut masses = Vec::new();
        for r in &regions {
            if r.nodes.is_empty() {
                return Err(Error::Model(format!("control region '{}' is empty", r.name)));
            }
            if let Some(j) = r.nodes.iter().find(|j| **j >= grid.len()) {
                return Err(Error::Model(format!(
                    "region '{}' references node {j} outside the grid of {} nodes",
                    r.name,
                    grid.len()
                )));
            }
            offsets.push(masses.len());
            match r.dofs {
                RegionDofs::Uniform => {
                    let d = masses.len();
                    masses.push(r.nodes.iter().map(|j| grid.weights[*j]).sum());
                    r.nodes.iter().for_each(|j| members[*j].push(d));
                }
                RegionDofs::Nodal => {
                    for j in &r.nodes {
                        members[*j].push(masses.len());
                        masses.push(grid.weights[*j]);
                    }
                }
            }
        }
        let n_dofs = masses.len();
        let mut op = Self {
            regions,
            coupling,
            offsets,
            n_dofs,
            members,
            masses,
            weights: grid.weights.clone(),
            lipschitz: 0.0,
        };
        let zero = op.apply(&vec![0.0; n_dofs]);
        if zero.iter().any(|v| *v != 0.0) {
            return Err(Error::Model("control operator does not map 0 to 0".into()));
        }
        op.lipschitz = op.linear_operator_norm();
        Ok(op)
    }

    /// A control operator without any region (no control).
    pub fn none(grid: &QuadratureGrid) -> Self {
        Self::new(Vec::new(), Coupling::Sum, grid).expect("empty operator is valid")
    }

    pub fn regions(&self) -> &[Region] {
        &self.regions
    }

    pub fn coupling(&self) -> Coupling {
        self.coupling
    }

    pub fn dof_count(&self) -> usize {
        self.n_dofs
    }

    pub fn region_offset(&self, region: usize) -> usize {
        self.offsets[region]
    }

    /// Squared `V` norm of each unit dof vector.
    pub fn dof_masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn grid_len(&self) -> usize {
        self.members.len()
    }

    /// Lipschitz constant of `𝔠: V → H`. Exact operator norm for [`Coupling::Sum`];
    /// for the saturating coupling the same value bounds it since `|G'| ≤ 1`
    /// with equality at zero.
    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn v_norm(&self, values: &[f64]) -> f64 {
        values.iter().zip(&self.masses).map(|(v, m)| m * v * v).sum::<f64>().sqrt()
    }

    /// Grid values of `𝔠(v)` for one vector of dofs.
    pub fn apply(&self, dofs: &[f64]) -> Vec<f64> {
        debug_assert_eq!(dofs.len(), self.n_dofs);
        self.members
            .iter()
            .map(|m| {
                if m.is_empty() {
                    0.0
                } else {
                    self.coupling.eval(m.iter().map(|d| dofs[*d]).sum())
                }
            })
            .collect()
    }

    /// Euclidean gradient of `v ↦ ⟨z, 𝔠(v)⟩_H` at `dofs`, for grid values `z`.
    pub fn apply_adjoint(&self, dofs: &[f64], z: &[f64]) -> Vec<f64> {
        let mut grad = vec![0.0; self.n_dofs];
        for ((m, zj), wj) in self.members.iter().zip(z).zip(&self.weights) {
            if m.is_empty() {
                continue;
            }
            let slope = match self.coupling {
                Coupling::Sum => 1.0,
                c => c.slope(m.iter().map(|d| dofs[*d]).sum()),
            };
            let s = wj * zj * slope;
            m.iter().for_each(|d| grad[*d] += s);
        }
        grad
    }

    fn linear_operator_norm(&self) -> f64 {
        let n = self.n_dofs;
        if n == 0 {
            return 0.0;
        }
        // K = M^{-1/2} Cᵀ W C M^{-1/2}; ‖𝔠‖² = λ_max(K).
        let mut k = DMatrix::<f64>::zeros(n, n);
        for (m, w) in self.members.iter().zip(&self.weights) {
            for a in m {
                for b in m {
                    k[(*a, *b)] += w;
                }
            }
        }
        for a in 0..n {
            for b in 0..n {
                k[(a, b)] /= (self.masses[a] * self.masses[b]).sqrt();
            }
        }
        let eig = k.symmetric_eigenvalues();
        eig.iter().cloned().fold(0.0, f64::max).sqrt()
    }
}

/// Piecewise-constant control on a uniform partition of `[start, end]`,
/// constrained componentwise to the box `[lower, upper]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlSignal {
    pub start: f64,
    pub end: f64,
    pub n_intervals: usize,
    pub dofs: usize,
    /// Interval-major values: `values[i * dofs + d]`.
    pub values: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl ControlSignal {
    pub fn constant(
        start: f64,
        end: f64,
        n_intervals: usize,
        value: &[f64],
        lower: Vec<f64>,
        upper: Vec<f64>,
    ) -> Result<Self> {
        let values = (0..n_intervals).flat_map(|_| value.iter().copied()).collect();
        Self::new(start, end, n_intervals, values, lower, upper)
    }

    pub fn new(
        start: f64,
        end: f64,
        n_intervals: usize,
        values: Vec<f64>,
        lower: Vec<f64>,
        upper: Vec<f64>,
    ) -> Result<Self> {
        if !(end > start) || n_intervals == 0 {
            return Err(Error::Argument(format!(
                "control grid [{start}, {end}] with {n_intervals} intervals"
            )));
        }
        let dofs = lower.len();
        if upper.len() != dofs || values.len() != n_intervals * dofs {
            return Err(Error::Dimension(format!(
                "control with {dofs} dofs, {} upper bounds and {} values for {n_intervals} intervals",
                upper.len(),
                values.len()
            )));
        }
        if let Some(d) = (0..dofs).find(|d| !(lower[*d] <= upper[*d])) {
            return Err(Error::Argument(format!("empty bound box for dof {d}")));
        }
        let signal = Self { start, end, n_intervals, dofs, values, lower, upper };
        if !signal.is_admissible() {
            return Err(Error::Range("control values outside their bounds".into()));
        }
        Ok(signal)
    }

    /// Zero control clamped into the box.
    pub fn zero(
        start: f64,
        end: f64,
        n_intervals: usize,
        lower: Vec<f64>,
        upper: Vec<f64>,
    ) -> Result<Self> {
        let dofs = lower.len();
        let mut s = Self {
            start,
            end,
            n_intervals,
            dofs,
            values: vec![0.0; n_intervals * dofs],
            lower,
            upper,
        };
        s.clamp();
        Self::new(s.start, s.end, s.n_intervals, s.values, s.lower, s.upper)
    }

    /// Uniform random values in the box for every interval and dof.
    pub fn random<R: Rng>(&self, rng: &mut R) -> ControlSignal {
        let mut out = self.clone();
        for (i, v) in out.values.iter_mut().enumerate() {
            let d = i % self.dofs;
            let (lo, hi) = (self.lower[d], self.upper[d]);
            *v = if hi > lo { rng.random_range(lo..=hi) } else { lo };
        }
        out
    }

    pub fn interval_len(&self) -> f64 {
        (self.end - self.start) / self.n_intervals as f64
    }

    pub fn interval_start(&self, i: usize) -> f64 {
        self.start + i as f64 * self.interval_len()
    }

    pub fn interval(&self, i: usize) -> &[f64] {
        &self.values[i * self.dofs..(i + 1) * self.dofs]
    }

    pub fn is_admissible(&self) -> bool {
        self.values.iter().enumerate().all(|(i, v)| {
            let d = i % self.dofs.max(1);
            v.is_finite() && *v >= self.lower[d] && *v <= self.upper[d]
        })
    }

    /// Componentwise projection onto the bound box.
    pub fn clamp(&mut self) {
        let dofs = self.dofs.max(1);
        for (i, v) in self.values.iter_mut().enumerate() {
            let d = i % dofs;
            *v = v.clamp(self.lower[d], self.upper[d]);
        }
    }

    /// `sup_{w ∈ U} ‖w‖_V` for the dof masses of `op`.
    pub fn box_radius(&self, op: &ControlOperator) -> f64 {
        (0..self.dofs)
            .map(|d| op.dof_masses()[d] * self.lower[d].abs().max(self.upper[d].abs()).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    /// The same signal restricted to `[t, end]`; `t` must be an interval boundary.
    pub fn restrict_from(&self, t: f64) -> Result<ControlSignal> {
        let h = self.interval_len();
        let pos = (t - self.start) / h;
        let first = pos.round();
        if (pos - first).abs() > 1e-9 || first < 0.0 || first as usize >= self.n_intervals {
            return Err(Error::Argument(format!(
                "t = {t} is not an interior boundary of the control grid"
            )));
        }
        let first = first as usize;
        Ok(ControlSignal {
            start: self.interval_start(first),
            end: self.end,
            n_intervals: self.n_intervals - first,
            dofs: self.dofs,
            values: self.values[first * self.dofs..].to_vec(),
            lower: self.lower.clone(),
            upper: self.upper.clone(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bases::build_sphere_basis;

    fn grid() -> QuadratureGrid {
        build_sphere_basis(4, 1.0).unwrap().grid().clone()
    }

    #[test]
    fn whole_domain_identity_has_unit_norm() {
        let g = grid();
        let all = Region { name: "all".into(), nodes: (0..g.len()).collect(), dofs: RegionDofs::Nodal };
        let op = ControlOperator::new(vec![all.clone()], Coupling::Sum, &g).unwrap();
        assert!((op.lipschitz() - 1.0).abs() < 1e-12);
        let uni = Region { dofs: RegionDofs::Uniform, ..all };
        let op = ControlOperator::new(vec![uni], Coupling::Sum, &g).unwrap();
        assert!((op.lipschitz() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn extension_by_zero_and_superposition() {
        let g = grid();
        let a = Region { name: "a".into(), nodes: (0..20).collect(), dofs: RegionDofs::Uniform };
        let b = Region { name: "b".into(), nodes: (10..30).collect(), dofs: RegionDofs::Uniform };
        let op = ControlOperator::new(vec![a.clone()], Coupling::Sum, &g).unwrap();
        let field = op.apply(&[3.0]);
        assert!(field[20..].iter().all(|v| *v == 0.0));
        assert!(field[..20].iter().all(|v| *v == 3.0));

        let op = ControlOperator::new(vec![a, b], Coupling::Sum, &g).unwrap();
        let field = op.apply(&[1.0, 1.0]);
        assert!(field[10..20].iter().all(|v| *v == 2.0));
        assert!(field[..10].iter().all(|v| *v == 1.0));
        // overlapping regions push the norm above one
        assert!(op.lipschitz() > 1.0);
    }

    #[test]
    fn adjoint_matches_finite_differences() {
        let g = grid();
        let a = Region { name: "a".into(), nodes: (0..25).collect(), dofs: RegionDofs::Uniform };
        let b = Region { name: "b".into(), nodes: (15..40).collect(), dofs: RegionDofs::Nodal };
        let op = ControlOperator::new(vec![a, b], Coupling::Saturating { scale: 2.0 }, &g).unwrap();
        let dofs: Vec<f64> = (0..op.dof_count()).map(|d| 0.1 * (d as f64).sin()).collect();
        let z: Vec<f64> = (0..g.len()).map(|j| (j as f64 * 0.37).cos()).collect();
        let grad = op.apply_adjoint(&dofs, &z);
        let pairing = |v: &[f64]| g.inner(&z, &op.apply(v));
        for d in [0, 3, 12] {
            let mut p = dofs.clone();
            let mut m = dofs.clone();
            p[d] += 1e-6;
            m[d] -= 1e-6;
            let fd = (pairing(&p) - pairing(&m)) / 2e-6;
            assert!((fd - grad[d]).abs() < 1e-8 * (1.0 + fd.abs()));
        }
    }

    #[test]
    fn empty_region_is_a_model_error() {
        let g = grid();
        let r = Region { name: "x".into(), nodes: vec![], dofs: RegionDofs::Uniform };
        assert!(matches!(ControlOperator::new(vec![r], Coupling::Sum, &g), Err(Error::Model(_))));
    }

    #[test]
    fn signal_clamp_and_restrict() {
        let mut s =
            ControlSignal::constant(0.0, 1.0, 4, &[0.5], vec![-1.0], vec![1.0]).unwrap();
        s.values[2] = 3.0;
        assert!(!s.is_admissible());
        s.clamp();
        assert_eq!(s.values[2], 1.0);
        let r = s.restrict_from(0.5).unwrap();
        assert_eq!(r.n_intervals, 2);
        assert_eq!(r.values, vec![1.0, 0.5]);
        assert!(s.restrict_from(0.3).is_err());
        assert!(ControlSignal::constant(0.0, 1.0, 2, &[2.0], vec![-1.0], vec![1.0]).is_err());
    }
}
