//! Energy balance climate model `∂_t T = ∇·(D∇T) + Q·S(x,t)(1 − α(T)) − (a + bT) + E(ξ,t) + 𝔠(u)`
//! on the sphere (constant `D`) or as a zonal average on `x = sin(latitude)`.

mod emissions;
mod physics;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use emissions::{EmissionField, EmissionScenario};
pub use physics::{AlbedoRamp, Insolation};

use crate::bases::{build_sphere_basis, build_zonal_sl_basis, DiffusivityProfile, EigenBasis, ModeLabel};
use crate::control::{CostFunctional, OptimizerOptions, ValueOptions};
use crate::dynamics::{
    galerkin_rhs, integrate, ControlOperator, ControlSignal, Coupling, PointwiseMap, Region, RegionDofs,
    SemilinearProblem,
};
use crate::error::{Error, Result};
use crate::fixtures::Fixture;
use crate::spectral::{Node, SpectralField};

/// Node selection of a control region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum RegionMask {
    Nodes { nodes: Vec<usize> },
    /// Latitude/longitude box in degrees; `lon_min > lon_max` wraps through
    /// 360°. Longitude is ignored for zonal geometry.
    LatLonBox { lat_min: f64, lat_max: f64, lon_min: f64, lon_max: f64 },
}

impl RegionMask {
    pub fn select(&self, nodes: &[Node], zonal: bool) -> Vec<usize> {
        match self {
            RegionMask::Nodes { nodes: list } => list.clone(),
            RegionMask::LatLonBox { lat_min, lat_max, lon_min, lon_max } => nodes
                .iter()
                .enumerate()
                .filter(|(_, n)| {
                    let lat = n.x.clamp(-1.0, 1.0).asin().to_degrees();
                    let lon = n.lon.to_degrees();
                    let in_lon = zonal
                        || if lon_min <= lon_max {
                            lon >= *lon_min && lon <= *lon_max
                        } else {
                            lon >= *lon_min || lon <= *lon_max
                        };
                    lat >= *lat_min && lat <= *lat_max && in_lon
                })
                .map(|(j, _)| j)
                .collect(),
        }
    }
}

fn default_dofs() -> RegionDofs {
    RegionDofs::Uniform
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionSpec {
    pub name: String,
    pub mask: RegionMask,
    #[serde(default = "default_dofs")]
    pub dofs: RegionDofs,
    /// Bounds on the regional forcing, W·m⁻².
    pub lower: f64,
    pub upper: f64,
}

/// Physical parameters; temperatures in °C, fluxes in W·m⁻², time in units
/// where the heat capacity is one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EbmModel {
    pub solar_constant: f64,
    pub insolation: Insolation,
    pub albedo: AlbedoRamp,
    pub a: f64,
    pub b: f64,
    pub diffusivity: DiffusivityProfile,
    pub emissions: EmissionScenario,
    pub regions: Vec<RegionSpec>,
    pub coupling: Coupling,
}

impl Default for EbmModel {
    fn default() -> Self {
        Self {
            solar_constant: 340.0,
            insolation: Insolation::default(),
            albedo: AlbedoRamp::default(),
            a: 210.0,
            b: 1.9,
            diffusivity: DiffusivityProfile::constant(0.6),
            emissions: EmissionScenario::None,
            regions: Vec::new(),
            coupling: Coupling::Sum,
        }
    }
}

impl EbmModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.solar_constant > 0.0) {
            return Err(Error::Model(format!("solar_constant {} must be positive", self.solar_constant)));
        }
        if !(self.b > 0.0) {
            return Err(Error::Model(format!("b = {} must be positive", self.b)));
        }
        if !self.a.is_finite() {
            return Err(Error::Model("a must be finite".into()));
        }
        self.albedo.validate()?;
        self.insolation.validate()?;
        self.diffusivity.validate()?;
        for r in &self.regions {
            if !(r.lower <= r.upper) {
                return Err(Error::Model(format!("region '{}' has lower > upper", r.name)));
            }
        }
        Ok(())
    }

    /// `b + Q·sup S·(α_max − α_min)/(T_hi − T_lo)`.
    pub fn lipschitz(&self) -> f64 {
        self.b + self.solar_constant * self.insolation.sup() * self.albedo.slope()
    }
}

/// `F(t, ξ, T) = Q·S(x,t)(1 − α(T)) − (a + bT) + E(ξ,t)`.
#[derive(Debug, Clone)]
pub struct EbmNonlinearity {
    q: f64,
    insolation: Insolation,
    albedo: AlbedoRamp,
    a: f64,
    b: f64,
    emissions: EmissionField,
    lipschitz: f64,
}

impl PointwiseMap for EbmNonlinearity {
    fn value(&self, t: f64, node: &Node, v: f64) -> f64 {
        let absorbed = self.q * self.insolation.eval(node.x, t) * (1.0 - self.albedo.eval(v));
        let e = if self.emissions.is_zero() { 0.0 } else { self.emissions.eval(t, node) };
        absorbed - (self.a + self.b * v) + e
    }

    fn derivative(&self, t: f64, node: &Node, v: f64) -> f64 {
        -self.q * self.insolation.eval(node.x, t) * self.albedo.derivative(v) - self.b
    }

    fn declared_lipschitz(&self) -> Option<f64> {
        Some(self.lipschitz)
    }
}

pub fn ebm_nonlinearity(model: &EbmModel, basis: &EigenBasis) -> Result<EbmNonlinearity> {
    model.validate()?;
    Ok(EbmNonlinearity {
        q: model.solar_constant,
        insolation: model.insolation,
        albedo: model.albedo,
        a: model.a,
        b: model.b,
        emissions: EmissionField::resolve(&model.emissions, basis)?,
        lipschitz: model.lipschitz(),
    })
}

fn is_zonal(basis: &EigenBasis) -> bool {
    matches!(basis.labels().first(), Some(ModeLabel::Zonal { .. }))
}

/// Region-structured forcing operator with the model's coupling.
pub fn ebm_control_operator(model: &EbmModel, basis: &EigenBasis) -> Result<ControlOperator> {
    regional_operator(&model.regions, model.coupling, basis)
}

/// Control operator for masked regions on any basis; circle nodes sit at
/// latitude 0 with longitude equal to the angle.
pub fn regional_operator(regions: &[RegionSpec], coupling: Coupling, basis: &EigenBasis) -> Result<ControlOperator> {
    let zonal = is_zonal(basis);
    let regions = regions
        .iter()
        .map(|r| Region { name: r.name.clone(), nodes: r.mask.select(basis.nodes(), zonal), dofs: r.dofs })
        .collect();
    ControlOperator::new(regions, coupling, basis.grid())
}

/// Per-dof bounds from the region specifications.
pub fn region_bounds(regions: &[RegionSpec], op: &ControlOperator) -> (Vec<f64>, Vec<f64>) {
    let mut lower = Vec::with_capacity(op.dof_count());
    let mut upper = Vec::with_capacity(op.dof_count());
    for (r, spec) in regions.iter().enumerate() {
        let count = match op.regions()[r].dofs {
            RegionDofs::Uniform => 1,
            RegionDofs::Nodal => op.regions()[r].nodes.len(),
        };
        lower.extend(std::iter::repeat_n(spec.lower, count));
        upper.extend(std::iter::repeat_n(spec.upper, count));
    }
    (lower, upper)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Geometry {
    Sphere,
    Zonal,
}

/// A spherical-harmonic bump `amplitude·Y_l^m` added to a profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Harmonic {
    pub l: usize,
    pub m: i64,
    pub amplitude: f64,
}

/// Gaussian bump `amplitude·exp(−(θ/width)²)` in the great-circle angle `θ`
/// from its centre; angles in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Anomaly {
    pub lat: f64,
    pub lon: f64,
    pub amplitude: f64,
    pub width: f64,
}

impl Anomaly {
    fn eval(&self, node: &Node) -> f64 {
        let (lat, lon) = (self.lat.to_radians(), self.lon.to_radians());
        let r = (1.0 - node.x * node.x).max(0.0).sqrt();
        let cos = r * lat.cos() * (node.lon - lon).cos() + node.x * lat.sin();
        let theta = cos.clamp(-1.0, 1.0).acos();
        self.amplitude * (-(theta / self.width.to_radians()).powi(2)).exp()
    }
}

/// Temperature field specification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum FieldSpec {
    /// `Σ c_i x^i` in sine-latitude, plus optional harmonics and anomalies on
    /// the sphere.
    Profile {
        coeffs: Vec<f64>,
        #[serde(default)]
        harmonics: Vec<Harmonic>,
        #[serde(default)]
        anomalies: Vec<Anomaly>,
    },
    /// The uncontrolled steady state shifted uniformly by `offset` °C.
    SteadyState { offset: f64 },
    /// Raw basis coefficients.
    Coefficients { coeffs: Vec<f64> },
}

/// Discretization of an EBM run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EbmDiscretization {
    pub geometry: Geometry,
    /// `L_max` on the sphere, number of modes for the zonal basis.
    pub band_limit: usize,
    #[serde(default = "default_m_grid")]
    pub m_grid: usize,
}

fn default_m_grid() -> usize {
    2000
}

pub fn build_ebm_basis(model: &EbmModel, disc: &EbmDiscretization) -> Result<EigenBasis> {
    match disc.geometry {
        Geometry::Sphere => match &model.diffusivity {
            DiffusivityProfile::Constant { value } => build_sphere_basis(disc.band_limit, *value),
            DiffusivityProfile::Sampled { .. } => Err(Error::Unsupported(
                "variable diffusivity is only available with the zonal geometry".into(),
            )),
        },
        Geometry::Zonal => build_zonal_sl_basis(&model.diffusivity, disc.band_limit, disc.m_grid),
    }
}

/// A controlled EBM with its tracking cost and control grid.
#[derive(Debug, Clone)]
pub struct EbmInstance {
    pub problem: SemilinearProblem,
    pub cost: CostFunctional,
    pub template: ControlSignal,
}

/// Settings of [`build_ebm_problem`] beyond the model physics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EbmScenario {
    pub discretization: EbmDiscretization,
    pub horizon: f64,
    pub initial: FieldSpec,
    pub target: FieldSpec,
    pub mu: f64,
    pub control_intervals: usize,
    /// Step used when a steady state has to be computed.
    #[serde(default = "default_steady_dt")]
    pub steady_dt: f64,
}

fn default_steady_dt() -> f64 {
    0.02
}

pub fn build_ebm_problem(model: &EbmModel, scenario: &EbmScenario) -> Result<EbmInstance> {
    model.validate()?;
    let basis = Arc::new(build_ebm_basis(model, &scenario.discretization)?);
    let map: Arc<dyn PointwiseMap> = Arc::new(ebm_nonlinearity(model, &basis)?);
    let op = ebm_control_operator(model, &basis)?;
    let (lower, upper) = region_bounds(&model.regions, &op);
    let op = Arc::new(op);
    let resolve = |spec: &FieldSpec| resolve_field(spec, &basis, &map, scenario.steady_dt);
    let initial = resolve(&scenario.initial)?;
    let target = resolve(&scenario.target)?;
    let problem = SemilinearProblem::new(basis.clone(), map.clone(), op, initial, scenario.horizon)?;
    let template = ControlSignal::zero(0.0, scenario.horizon, scenario.control_intervals, lower, upper)?;
    let cost = CostFunctional::tracking(target, scenario.mu)?;
    Ok(EbmInstance { problem, cost, template })
}

/// Coefficients of a field specification; steady states are computed with
/// `map` and no control.
pub fn resolve_field(
    spec: &FieldSpec,
    basis: &Arc<EigenBasis>,
    map: &Arc<dyn PointwiseMap>,
    steady_dt: f64,
) -> Result<SpectralField> {
    match spec {
        FieldSpec::Coefficients { coeffs } => {
            if coeffs.len() > basis.len() {
                return Err(Error::Dimension(format!("{} coefficients for {} modes", coeffs.len(), basis.len())));
            }
            basis.field(coeffs.clone())
        }
        FieldSpec::Profile { coeffs, harmonics, anomalies } => {
            if is_zonal(basis) && !anomalies.is_empty() {
                return Err(Error::Model("anomalies need the sphere geometry".into()));
            }
            let values: Vec<f64> = basis
                .nodes()
                .iter()
                .map(|n| {
                    coeffs.iter().rev().fold(0.0, |acc, c| acc * n.x + c)
                        + anomalies.iter().map(|a| a.eval(n)).sum::<f64>()
                })
                .collect();
            let mut field = basis.analyze_slice(&values, basis.len());
            for h in harmonics {
                let k = basis
                    .labels()
                    .iter()
                    .position(|label| *label == ModeLabel::Harmonic { l: h.l, m: h.m })
                    .ok_or_else(|| Error::Model(format!("harmonic ({}, {}) not in the basis", h.l, h.m)))?;
                field[k] += h.amplitude;
            }
            basis.field(field)
        }
        FieldSpec::SteadyState { offset } => {
            let uncontrolled = Arc::new(ControlOperator::none(basis.grid()));
            let start = basis.zero_field();
            let p = SemilinearProblem::new(basis.clone(), map.clone(), uncontrolled, start, 1.0)?;
            let steady = steady_state(&p, basis.len(), steady_dt, STEADY_TOL, STEADY_MAX_TIME)?;
            let mut c = steady.coeffs;
            // a uniform shift only moves the constant mode
            let constant = basis.analyze_slice(&vec![*offset; basis.grid().len()], basis.len());
            c.iter_mut().zip(&constant).for_each(|(a, b)| *a += b);
            basis.field(c)
        }
    }
}

pub const STEADY_TOL: f64 = 1e-6;
pub const STEADY_MAX_TIME: f64 = 200.0;

/// `F` with its time argument frozen.
#[derive(Debug)]
struct Frozen {
    inner: Arc<dyn PointwiseMap>,
    t: f64,
}

impl PointwiseMap for Frozen {
    fn value(&self, _: f64, node: &Node, v: f64) -> f64 {
        self.inner.value(self.t, node, v)
    }
    fn derivative(&self, _: f64, node: &Node, v: f64) -> f64 {
        self.inner.derivative(self.t, node, v)
    }
    fn declared_lipschitz(&self) -> Option<f64> {
        self.inner.declared_lipschitz()
    }
}

/// Integrates the uncontrolled Galerkin system, with the forcing frozen at
/// `problem.start_time`, from `problem.initial` in unit-time chunks until
/// `‖dy/dt‖ < tol`.
pub fn steady_state(problem: &SemilinearProblem, n: usize, dt: f64, tol: f64, max_time: f64) -> Result<SpectralField> {
    let uncontrolled = Arc::new(ControlOperator::none(problem.basis.grid()));
    let mut p = problem.clone();
    p.control_op = uncontrolled;
    p.nonlinearity = Arc::new(Frozen { inner: problem.nonlinearity.clone(), t: problem.start_time });
    p.start_time = 0.0;
    p.horizon = 1.0;
    let u = ControlSignal::zero(0.0, 1.0, 1, vec![], vec![])?;
    let mut state = p.initial.resized(n);
    let mut elapsed = 0.0;
    loop {
        let rate = galerkin_rhs(&p, n, 0.0, &state, &[])?.norm();
        if rate < tol {
            return Ok(state.resized(problem.basis.len()));
        }
        if elapsed >= max_time {
            return Err(Error::NonConvergence(format!(
                "no steady state within t = {max_time} (rate {rate:.3e})"
            )));
        }
        p.initial = state.resized(problem.basis.len());
        state = integrate(&p, n, &u, dt)?.last().clone();
        elapsed += 1.0;
    }
}

/// `(4𝒞 + 4‖T_d‖)/μ`, the control-error prefactor for the EBM tracking cost.
pub fn ebm_error_prefactor(radius: f64, target_norm: f64, mu: f64) -> Result<f64> {
    if !(mu > 0.0) {
        return Err(Error::Precondition("the control error prefactor needs mu > 0".into()));
    }
    Ok((4.0 * radius + 4.0 * target_norm) / mu)
}

/// EBM on the sphere at `L_ref = 16` with one polar control region, used for
/// the value-function and estimate experiments at `L ∈ {2, 4, 8}`.
///
/// The albedo transition is wider and weaker than the default one. Inside the
/// default ramp the ice-albedo feedback `Q·S·α'` is about six times `b`, the
/// ice line is locally unstable, and coarse truncations err with either sign.
pub fn ebm_sphere_fixture() -> Result<Fixture> {
    let model = EbmModel {
        albedo: AlbedoRamp { alpha_max: 0.5, alpha_min: 0.3, t_lo: -20.0, t_hi: 0.0 },
        regions: vec![RegionSpec {
            name: "arctic".into(),
            mask: RegionMask::LatLonBox { lat_min: 45.0, lat_max: 90.0, lon_min: 0.0, lon_max: 360.0 },
            dofs: RegionDofs::Uniform,
            lower: -20.0,
            upper: 20.0,
        }],
        ..EbmModel::default()
    };
    let scenario = EbmScenario {
        discretization: EbmDiscretization { geometry: Geometry::Sphere, band_limit: 16, m_grid: default_m_grid() },
        horizon: 1.0,
        initial: FieldSpec::Profile {
            coeffs: vec![12.0, 0.0, -30.0],
            harmonics: vec![],
            anomalies: vec![Anomaly { lat: 50.0, lon: 30.0, amplitude: 8.0, width: 17.0 }],
        },
        target: FieldSpec::Profile { coeffs: vec![10.0, 0.0, -32.0], harmonics: vec![], anomalies: vec![] },
        mu: 0.1,
        control_intervals: 4,
        steady_dt: default_steady_dt(),
    };
    let inst = build_ebm_problem(&model, &scenario)?;
    let sq = |l: usize| (l + 1) * (l + 1);
    Ok(Fixture {
        name: "ebm-sphere".into(),
        problem: inst.problem,
        cost: inst.cost,
        template: inst.template,
        dt: 0.025,
        dt_ref: 0.025,
        n_values: vec![sq(2), sq(4), sq(8)],
        n_ref: sq(16),
        t_values: vec![0.0, 0.5],
    })
}

/// Optimizer settings for EBM experiments. The ramp makes the cost only
/// piecewise smooth, so a stalled cost also counts as converged.
pub fn ebm_value_options(dt: f64) -> ValueOptions {
    ValueOptions {
        optimizer: OptimizerOptions { dt, rel_tol: 1e-6, stall_tol: 1e-12, ..OptimizerOptions::default() },
        ..ValueOptions::default()
    }
}
