//! Cost functionals, adjoint gradients, projected-gradient optimization,
//! value functions and a Riccati oracle for linear-quadratic instances.

mod adjoint;
mod cost;
mod optimize;
mod riccati;
mod value;

pub use adjoint::{adjoint_solve, gradient, GradientEvaluation};
pub use cost::{control_inner, control_norm, evaluate_cost, trajectory_cost, CostFunctional};
pub use optimize::{optimize, project_control, write_control_csv, OcpSolution, OptimizerOptions};
pub use riccati::{lq_riccati_oracle, riccati_value, LqSystem, RiccatiSolution};
pub use value::{multistart_controls, value_function, StartOutcome, ValueEstimate, ValueOptions};
