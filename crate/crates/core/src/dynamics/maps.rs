//! Pointwise nonlinearities `F(t, ξ, v)` lifted to Nemytskii operators through
//! grid evaluation.

use std::fmt::Debug;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::spectral::Node;

pub trait PointwiseMap: Send + Sync + Debug {
    fn value(&self, t: f64, node: &Node, v: f64) -> f64;

    /// `∂F/∂v`; one-sided at kinks.
    fn derivative(&self, t: f64, node: &Node, v: f64) -> f64;

    /// Global Lipschitz constant in `v`, when known analytically.
    fn declared_lipschitz(&self) -> Option<f64> {
        None
    }

    fn is_zero(&self) -> bool {
        false
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroMap;

impl PointwiseMap for ZeroMap {
    fn value(&self, _: f64, _: &Node, _: f64) -> f64 {
        0.0
    }
    fn derivative(&self, _: f64, _: &Node, _: f64) -> f64 {
        0.0
    }
    fn declared_lipschitz(&self) -> Option<f64> {
        Some(0.0)
    }
    fn is_zero(&self) -> bool {
        true
    }
}

/// `F(v) = slope·v + offset`.
#[derive(Debug, Clone, Copy)]
pub struct AffineMap {
    pub slope: f64,
    pub offset: f64,
}

impl PointwiseMap for AffineMap {
    fn value(&self, _: f64, _: &Node, v: f64) -> f64 {
        self.slope * v + self.offset
    }
    fn derivative(&self, _: f64, _: &Node, _: f64) -> f64 {
        self.slope
    }
    fn declared_lipschitz(&self) -> Option<f64> {
        Some(self.slope.abs())
    }
}

/// `F(v) = linear·v − cubic·v³` (Allen–Cahn type for `linear = cubic = 1`).
#[derive(Debug, Clone, Copy)]
pub struct CubicMap {
    pub linear: f64,
    pub cubic: f64,
}

impl Default for CubicMap {
    fn default() -> Self {
        Self { linear: 1.0, cubic: 1.0 }
    }
}

impl PointwiseMap for CubicMap {
    fn value(&self, _: f64, _: &Node, v: f64) -> f64 {
        self.linear * v - self.cubic * v * v * v
    }
    fn derivative(&self, _: f64, _: &Node, v: f64) -> f64 {
        self.linear - 3.0 * self.cubic * v * v
    }
}

/// Smooth, globally Lipschitz reaction term
/// `F(ξ, v) = amplitude·tanh(v) − damping·v + forcing·x(ξ)`.
#[derive(Debug, Clone, Copy)]
pub struct SmoothReaction {
    pub amplitude: f64,
    pub damping: f64,
    pub forcing: f64,
}

impl PointwiseMap for SmoothReaction {
    fn value(&self, _: f64, node: &Node, v: f64) -> f64 {
        self.amplitude * v.tanh() - self.damping * v + self.forcing * node.x
    }
    fn derivative(&self, _: f64, _: &Node, v: f64) -> f64 {
        let c = v.cosh();
        self.amplitude / (c * c) - self.damping
    }
    fn declared_lipschitz(&self) -> Option<f64> {
        Some(self.damping.abs() + self.amplitude.abs())
    }
}

/// Configuration form of the built-in maps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum NonlinearitySpec {
    Zero,
    Affine { slope: f64, offset: f64 },
    Cubic { linear: f64, cubic: f64 },
    SmoothReaction { amplitude: f64, damping: f64, forcing: f64 },
}

impl NonlinearitySpec {
    pub fn build(&self) -> Arc<dyn PointwiseMap> {
        match *self {
            NonlinearitySpec::Zero => Arc::new(ZeroMap),
            NonlinearitySpec::Affine { slope, offset } => Arc::new(AffineMap { slope, offset }),
            NonlinearitySpec::Cubic { linear, cubic } => Arc::new(CubicMap { linear, cubic }),
            NonlinearitySpec::SmoothReaction { amplitude, damping, forcing } => {
                Arc::new(SmoothReaction { amplitude, damping, forcing })
            }
        }
    }
}
