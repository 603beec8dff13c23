//! Ready-made problem instances shared by tests, benchmarks and the CLI.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::bases::{build_circle_basis, EigenBasis};
use crate::control::CostFunctional;
use crate::dynamics::{
    AffineMap, ControlOperator, ControlSignal, Coupling, CubicMap, PointwiseMap, Region, RegionDofs,
    SemilinearProblem,
};
use crate::error::Result;
use crate::spectral::SpectralField;

/// A controlled problem together with the numerical settings of its experiments.
#[derive(Debug, Clone)]
pub struct Fixture {
    pub name: String,
    pub problem: SemilinearProblem,
    pub cost: CostFunctional,
    /// Control grid and bounds on the full horizon.
    pub template: ControlSignal,
    pub dt: f64,
    pub dt_ref: f64,
    pub n_values: Vec<usize>,
    pub n_ref: usize,
    pub t_values: Vec<f64>,
}

/// Nodes of a circle grid whose angle lies in `[from, to)`.
pub fn arc_nodes(basis: &EigenBasis, from: f64, to: f64) -> Vec<usize> {
    basis.nodes().iter().enumerate().filter(|(_, n)| n.lon >= from && n.lon < to).map(|(j, _)| j).collect()
}

/// Fourier coefficients `c_0` and `(a_j, b_j)/(1 + j)^p` for `j ≥ 1`, signs alternating.
pub fn algebraic_field(basis: &EigenBasis, c0: f64, a: f64, b: f64, p: f64) -> Result<SpectralField> {
    let mut coeffs = vec![0.0; basis.len()];
    coeffs[0] = c0;
    for j in 1..=(basis.len() - 1) / 2 {
        let s = if j % 2 == 0 { 1.0 } else { -1.0 };
        let decay = (1.0 + j as f64).powf(-p);
        coeffs[2 * j - 1] = s * a * decay;
        coeffs[2 * j] = b * decay;
    }
    basis.field(coeffs)
}

fn arcs(basis: &EigenBasis, arcs: &[(&str, f64, f64)]) -> Vec<Region> {
    arcs.iter()
        .map(|(name, a, b)| Region { name: name.to_string(), nodes: arc_nodes(basis, *a, *b), dofs: RegionDofs::Uniform })
        .collect()
}

/// `y' = 0.05 y_θθ + y − y³` on the circle with algebraically decaying data,
/// one uniform control on a third of the circle, `N_ref = 128`.
pub fn cubic_circle() -> Result<Fixture> {
    let basis = Arc::new(build_circle_basis(64, 0.05)?);
    let x = algebraic_field(&basis, 0.2, 0.8, 0.5, 3.0)?;
    let op = ControlOperator::new(arcs(&basis, &[("arc", 0.0, 2.0 * PI / 3.0)]), Coupling::Sum, basis.grid())?;
    let map: Arc<dyn PointwiseMap> = Arc::new(CubicMap::default());
    let mut target = vec![0.0; basis.len()];
    target[0] = 0.5;
    let target = basis.field(target)?;
    let problem = SemilinearProblem::new(basis, map, Arc::new(op), x, 1.0)?;
    let template = ControlSignal::zero(0.0, 1.0, 10, vec![-1.0], vec![1.0])?;
    Ok(Fixture {
        name: "cubic-circle".into(),
        cost: CostFunctional::tracking(target, 0.1)?,
        problem,
        template,
        dt: 2.5e-3,
        dt_ref: 2.5e-3 / 4.0,
        n_values: vec![4, 8, 16, 32],
        n_ref: 128,
        t_values: vec![0.0, 0.5],
    })
}

/// Linear-quadratic tracking on the circle: `F(v) = 0.2 v`, two uniform arc
/// controls with inactive bounds, `μ = 0.1`.
pub fn lq_circle() -> Result<Fixture> {
    let basis = Arc::new(build_circle_basis(16, 0.1)?);
    let x = algebraic_field(&basis, 0.3, 1.0, 0.6, 2.0)?;
    let regions = arcs(&basis, &[("west", 0.0, 2.0 * PI / 3.0), ("east", PI, 5.0 * PI / 3.0)]);
    let op = ControlOperator::new(regions, Coupling::Sum, basis.grid())?;
    let map: Arc<dyn PointwiseMap> = Arc::new(AffineMap { slope: 0.2, offset: 0.0 });
    let target = algebraic_field(&basis, -0.2, 0.5, -0.4, 2.5)?;
    let problem = SemilinearProblem::new(basis, map, Arc::new(op), x, 1.0)?;
    let template = ControlSignal::zero(0.0, 1.0, 100, vec![-5.0; 2], vec![5.0; 2])?;
    Ok(Fixture {
        name: "lq-circle".into(),
        cost: CostFunctional::tracking(target, 0.1)?,
        problem,
        template,
        dt: 2e-3,
        dt_ref: 2e-3,
        n_values: vec![4, 8, 16],
        n_ref: 32,
        t_values: vec![0.0, 0.5],
    })
}
