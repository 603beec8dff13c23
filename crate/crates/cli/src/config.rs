//! JSON run configuration. Unknown keys are rejected everywhere.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use specgal_core::bases::BasisDescriptor;
use specgal_core::control::OptimizerOptions;
use specgal_core::dynamics::{Coupling, NonlinearitySpec};
use specgal_core::ebm::{EbmModel, EbmScenario, FieldSpec, RegionSpec};
use specgal_core::lab::ErrorPrefactor;

use crate::failure::Failure;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Simulate,
    Optimize,
    TrajSweep,
    UniformSweep,
    ValueSweep,
    VerifyBounds,
    TransformTest,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Simulate => "simulate",
            Experiment::Optimize => "optimize",
            Experiment::TrajSweep => "traj-sweep",
            Experiment::UniformSweep => "uniform-sweep",
            Experiment::ValueSweep => "value-sweep",
            Experiment::VerifyBounds => "verify-bounds",
            Experiment::TransformTest => "transform-test",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// When present it must match the subcommand.
    #[serde(default)]
    pub experiment: Option<Experiment>,
    #[serde(default)]
    pub seed: u64,
    pub problem: ProblemSpec,
    #[serde(default)]
    pub numerics: Numerics,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FixtureName {
    CubicCircle,
    LqCircle,
    EbmSphere,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProblemSpec {
    /// One of the built-in problems, with its default numerics.
    Fixture { name: FixtureName },
    Semilinear {
        basis: BasisDescriptor,
        nonlinearity: NonlinearitySpec,
        #[serde(default)]
        regions: Vec<RegionSpec>,
        #[serde(default = "sum")]
        coupling: Coupling,
        initial: FieldSpec,
        target: FieldSpec,
        horizon: f64,
        mu: f64,
        #[serde(default = "one")]
        tracking_weight: f64,
        control_intervals: usize,
    },
    Ebm {
        #[serde(default)]
        model: EbmModel,
        scenario: EbmScenario,
    },
}

fn sum() -> Coupling {
    Coupling::Sum
}

fn one() -> f64 {
    1.0
}

/// Which control a simulation or estimate uses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ControlChoice {
    Zero,
    /// Uniform draw in the box from the run seed.
    Random,
    /// Interval-major dof values.
    Values { values: Vec<f64> },
}

/// Numerical settings; anything absent falls back to the fixture's defaults
/// or to the values documented on each field.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Numerics {
    pub dt: Option<f64>,
    /// Defaults to `dt`.
    pub dt_ref: Option<f64>,
    /// Truncation for simulate and optimize; defaults to `n_ref`.
    pub n: Option<usize>,
    pub n_values: Option<Vec<usize>>,
    /// Defaults to the number of basis modes.
    pub n_ref: Option<usize>,
    /// Defaults to the start time.
    pub t_values: Option<Vec<f64>>,
    /// Random controls in the uniform sweep (default 8).
    pub samples: Option<usize>,
    /// Its `dt` is replaced by `numerics.dt`.
    pub optimizer: Option<OptimizerOptions>,
    pub random_starts: Option<usize>,
    pub disagreement_tol: Option<f64>,
    pub error_prefactor: Option<ErrorPrefactor>,
    pub control: Option<ControlChoice>,
}

pub fn load(path: &Path) -> Result<(RunConfig, Vec<u8>), Failure> {
    let bytes = std::fs::read(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    let mut de = serde_json::Deserializer::from_slice(&bytes);
    let config: RunConfig = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let at = e.path().to_string();
        let at = if at == "." { String::new() } else { format!(" at `{at}`") };
        Failure::Config(format!("{}{at}: {}", path.display(), e.inner()))
    })?;
    Ok((config, bytes))
}
