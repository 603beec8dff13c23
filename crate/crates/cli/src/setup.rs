//! Turns a [`RunConfig`] into a problem, cost, control template and numerics.

use std::sync::Arc;

use specgal_core::control::{CostFunctional, OptimizerOptions, ValueOptions};
use specgal_core::dynamics::{ControlSignal, SemilinearProblem};
use specgal_core::ebm::{build_ebm_problem, ebm_value_options, region_bounds, regional_operator, resolve_field};
use specgal_core::fixtures::{cubic_circle, lq_circle, Fixture};
use specgal_core::lab::{sample_control, ErrorPrefactor};

use crate::config::{ControlChoice, FixtureName, ProblemSpec, RunConfig};
use crate::failure::Failure;

pub struct Setup {
    pub label: String,
    pub problem: SemilinearProblem,
    pub cost: CostFunctional,
    pub template: ControlSignal,
    pub dt: f64,
    pub dt_ref: f64,
    pub n: usize,
    pub n_values: Vec<usize>,
    pub n_ref: usize,
    pub t_values: Vec<f64>,
    pub samples: usize,
    pub value_options: ValueOptions,
    pub prefactor: ErrorPrefactor,
    pub control: ControlSignal,
}

struct Defaults {
    dt: Option<f64>,
    dt_ref: Option<f64>,
    n_values: Option<Vec<usize>>,
    n_ref: Option<usize>,
    t_values: Option<Vec<f64>>,
    optimizer: OptimizerOptions,
    prefactor: ErrorPrefactor,
}

fn from_fixture(f: &Fixture) -> Defaults {
    Defaults {
        dt: Some(f.dt),
        dt_ref: Some(f.dt_ref),
        n_values: Some(f.n_values.clone()),
        n_ref: Some(f.n_ref),
        t_values: Some(f.t_values.clone()),
        optimizer: OptimizerOptions::default(),
        prefactor: ErrorPrefactor::Lipschitz,
    }
}

fn bare() -> Defaults {
    Defaults {
        dt: None,
        dt_ref: None,
        n_values: None,
        n_ref: None,
        t_values: None,
        optimizer: OptimizerOptions::default(),
        prefactor: ErrorPrefactor::Lipschitz,
    }
}

fn required<T>(value: Option<T>, key: &str) -> Result<T, Failure> {
    value.ok_or_else(|| Failure::Config(format!("missing `{key}` (no default for this problem kind)")))
}

pub fn build(config: &RunConfig) -> Result<Setup, Failure> {
    let (label, problem, cost, template, defaults) = match &config.problem {
        ProblemSpec::Fixture { name } => {
            let f = match name {
                FixtureName::CubicCircle => cubic_circle()?,
                FixtureName::LqCircle => lq_circle()?,
                FixtureName::EbmSphere => specgal_core::ebm::ebm_sphere_fixture()?,
            };
            let mut d = from_fixture(&f);
            if *name == FixtureName::EbmSphere {
                d.optimizer = ebm_value_options(f.dt).optimizer;
                d.prefactor = ErrorPrefactor::TrackingBall;
            }
            (f.name.clone(), f.problem, f.cost, f.template, d)
        }
        ProblemSpec::Semilinear {
            basis,
            nonlinearity,
            regions,
            coupling,
            initial,
            target,
            horizon,
            mu,
            tracking_weight,
            control_intervals,
        } => {
            let basis = Arc::new(basis.build()?);
            let map = nonlinearity.build();
            let steady_dt = config.numerics.dt.unwrap_or(0.01);
            let op = regional_operator(regions, *coupling, &basis)?;
            let (lower, upper) = region_bounds(regions, &op);
            let x = resolve_field(initial, &basis, &map, steady_dt)?;
            let target = resolve_field(target, &basis, &map, steady_dt)?;
            let problem = SemilinearProblem::new(basis, map, Arc::new(op), x, *horizon)?;
            let mut cost = CostFunctional::tracking(target, *mu)?;
            cost.tracking_weight = *tracking_weight;
            cost.validate()?;
            let template = ControlSignal::zero(0.0, *horizon, *control_intervals, lower, upper)?;
            ("semilinear".to_string(), problem, cost, template, bare())
        }
        ProblemSpec::Ebm { model, scenario } => {
            let inst = build_ebm_problem(model, scenario)?;
            let mut d = bare();
            d.optimizer = ebm_value_options(1.0).optimizer;
            d.prefactor = ErrorPrefactor::TrackingBall;
            ("ebm".to_string(), inst.problem, inst.cost, inst.template, d)
        }
    };
    let num = &config.numerics;
    let dt = required(num.dt.or(defaults.dt), "numerics.dt")?;
    let dt_ref = num.dt_ref.or(defaults.dt_ref).unwrap_or(dt);
    let n_ref = num.n_ref.or(defaults.n_ref).unwrap_or(problem.basis.len());
    let n_values = num.n_values.clone().or(defaults.n_values).unwrap_or_default();
    let t_values = num.t_values.clone().or(defaults.t_values).unwrap_or_else(|| vec![problem.start_time]);
    let mut optimizer = num.optimizer.clone().unwrap_or(defaults.optimizer);
    optimizer.dt = dt;
    let base = ValueOptions::default();
    let value_options = ValueOptions {
        optimizer,
        random_starts: num.random_starts.unwrap_or(base.random_starts),
        seed: config.seed,
        disagreement_tol: num.disagreement_tol.unwrap_or(base.disagreement_tol),
    };
    let control = match num.control.as_ref().unwrap_or(&ControlChoice::Zero) {
        ControlChoice::Zero => template.clone(),
        ControlChoice::Random => sample_control(&template, config.seed, 0),
        ControlChoice::Values { values } => ControlSignal::new(
            template.start,
            template.end,
            template.n_intervals,
            values.clone(),
            template.lower.clone(),
            template.upper.clone(),
        )
        .map_err(|e| Failure::Config(format!("numerics.control: {e}")))?,
    };
    if !control.is_admissible() {
        return Err(Failure::Config("numerics.control: values outside the control bounds".into()));
    }
    Ok(Setup {
        label,
        n: num.n.unwrap_or(n_ref),
        problem,
        cost,
        template,
        dt,
        dt_ref,
        n_values,
        n_ref,
        t_values,
        samples: num.samples.unwrap_or(8),
        value_options,
        prefactor: num.error_prefactor.unwrap_or(defaults.prefactor),
        control,
    })
}
