//! Spectral-Galerkin approximation of optimal control problems for
//! semilinear evolution equations `y' = Ly + F(y) + 𝔠(u)`, with experiments
//! that measure Galerkin convergence and check the associated error bounds.

pub mod bases;
pub mod control;
pub mod dynamics;
pub mod ebm;
pub mod error;
pub mod fixtures;
pub mod lab;
pub mod spectral;

pub use bases::{BasisDescriptor, DomainKind, EigenBasis, ModeLabel};
pub use error::{Error, Result};
pub use spectral::{analyze, project, residual_energy, synthesize, Node, QuadratureGrid, SpectralField};
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
