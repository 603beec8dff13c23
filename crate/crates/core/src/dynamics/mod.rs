//! Semilinear problems, their Galerkin systems and time integration.

mod bounds;
mod control;
mod etd;
mod maps;
mod problem;
mod trajectory;

pub use bounds::{
    a_priori_bound, check_declared_lipschitz, effective_lipschitz, grid_range, sampled_slope,
    sup_nonlinearity_at_zero, tail_bound, TailConstants, LIPSCHITZ_RANGE_FACTOR, LIPSCHITZ_SAFETY,
};
pub use control::{ControlOperator, ControlSignal, Coupling, Region, RegionDofs};
pub use etd::{galerkin_rhs, integrate, phi1, phi2, solve_reference, steps_per_interval};
pub(crate) use etd::{run_forward, ForwardRun};
pub use maps::{AffineMap, CubicMap, NonlinearitySpec, PointwiseMap, SmoothReaction, ZeroMap};
pub use problem::{SemilinearProblem, DIVERGENCE_GUARD};
pub(crate) use trajectory::trapezoid;
pub use trajectory::Trajectory;
