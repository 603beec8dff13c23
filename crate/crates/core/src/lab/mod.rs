//! Convergence experiments over Galerkin truncations and checks of the
//! computable error estimates.

mod bounds;
mod report;
mod sweeps;

pub use bounds::{
    control_error_bound_check, gamma_constant, j_gap_bound_check, value_gap_bound_check, BoundConstants, ErrorPrefactor,
    CONTROL_ERROR_ID, J_GAP_ID, RADIUS_SAFETY, VALUE_GAP_ID,
};
pub use report::{margin_passes, write_bound_csv, BoundCheckReport, ConvergenceReport, MARGIN_TOL};
pub use sweeps::{
    sample_control, trajectory_convergence_sweep, uniform_convergence_estimate, value_convergence_sweep, Steps,
    ValueTable,
};
