//! States as coefficient vectors against an orthonormal eigenbasis.
//!
//! A [`SpectralField`] stores the coefficients `a_1..a_K` of a state `y` in
//! the basis `e_k`; the `H` norm is the Euclidean norm of the coefficients.
//! Grid values are obtained with [`synthesize`] and mapped back with
//! [`analyze`], which uses the quadrature inner product of the basis grid.

use serde::{Deserialize, Serialize};

use crate::bases::EigenBasis;
use crate::error::{Error, Result};

/// Tolerance for `analyze(synthesize(f)) == project(f, K)` on band-limited data.
pub const ROUNDTRIP_TOL: f64 = 1e-10;
/// Relative tolerance between the coefficient norm and a quadrature norm.
pub const PARSEVAL_TOL: f64 = 1e-12;

/// A point of the spatial domain.
///
/// `x` is the sine of latitude on the sphere, the coordinate on the zonal
/// interval `[-1, 1]`, and unused (zero) on the circle. `lon` is the
/// longitude on the sphere or the angle on the circle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub x: f64,
    pub lon: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QuadratureGrid {
    pub nodes: Vec<Node>,
    pub weights: Vec<f64>,
    /// Polynomial (or trigonometric) degree integrated exactly.
    pub exactness_degree: usize,
}

impl QuadratureGrid {
    pub fn new(nodes: Vec<Node>, weights: Vec<f64>, exactness_degree: usize) -> Result<Self> {
        if nodes.len() != weights.len() {
            return Err(Error::Dimension(format!(
                "{} nodes but {} weights",
                nodes.len(),
                weights.len()
            )));
        }
        if let Some(w) = weights.iter().find(|w| !(**w > 0.0) || !w.is_finite()) {
            return Err(Error::Argument(format!("quadrature weight {w} is not positive")));
        }
        Ok(Self { nodes, weights, exactness_degree })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Total measure of the domain.
    pub fn measure(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Quadrature inner product of two grid functions.
    pub fn inner(&self, a: &[f64], b: &[f64]) -> f64 {
        self.weights.iter().zip(a).zip(b).map(|((w, x), y)| w * x * y).sum()
    }

    pub fn norm(&self, values: &[f64]) -> f64 {
        self.inner(values, values).sqrt()
    }

    pub fn integrate(&self, values: &[f64]) -> f64 {
        self.weights.iter().zip(values).map(|(w, v)| w * v).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralField {
    pub basis_id: String,
    pub coeffs: Vec<f64>,
}

impl SpectralField {
    pub fn new(basis_id: impl Into<String>, coeffs: Vec<f64>) -> Result<Self> {
        if let Some((k, c)) = coeffs.iter().enumerate().find(|(_, c)| !c.is_finite()) {
            return Err(Error::Numeric(format!("coefficient {k} is not finite ({c})")));
        }
        Ok(Self { basis_id: basis_id.into(), coeffs })
    }

    pub fn zeros(basis_id: impl Into<String>, len: usize) -> Self {
        Self { basis_id: basis_id.into(), coeffs: vec![0.0; len] }
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn norm(&self) -> f64 {
        norm(&self.coeffs)
    }

    pub fn dot(&self, other: &SpectralField) -> f64 {
        dot(&self.coeffs, &other.coeffs)
    }

    /// Norm of `self - other`, padding the shorter vector with zeros.
    pub fn distance(&self, other: &SpectralField) -> f64 {
        distance(&self.coeffs, &other.coeffs)
    }

    /// Copy with the coefficient vector resized to `len` (zero padded or cut).
    pub fn resized(&self, len: usize) -> SpectralField {
        let mut coeffs = self.coeffs.clone();
        coeffs.resize(len, 0.0);
        SpectralField { basis_id: self.basis_id.clone(), coeffs }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let field: SpectralField = serde_json::from_str(text)?;
        SpectralField::new(field.basis_id, field.coeffs)
    }
}

/// Orthogonal projection onto the span of the first `n` modes.
pub fn project(field: &SpectralField, n: usize) -> Result<SpectralField> {
    check_truncation(field, n)?;
    let mut out = field.clone();
    out.coeffs[n..].iter_mut().for_each(|c| *c = 0.0);
    Ok(out)
}

/// `‖(Id − Π_N) y‖`, the energy left in the modes beyond `n`.
pub fn residual_energy(field: &SpectralField, n: usize) -> Result<f64> {
    check_truncation(field, n)?;
    Ok(tail_norm(&field.coeffs, n))
}

/// Grid values of `field` at the quadrature nodes of `basis`.
pub fn synthesize(field: &SpectralField, basis: &EigenBasis) -> Result<Vec<f64>> {
    if field.len() > basis.len() {
        return Err(Error::Dimension(format!(
            "field has {} coefficients, basis only {} modes",
            field.len(),
            basis.len()
        )));
    }
    Ok(basis.synthesize_slice(&field.coeffs))
}

/// Quadrature projection of grid values onto the first `k` modes of `basis`.
pub fn analyze(values: &[f64], basis: &EigenBasis, k: usize) -> Result<SpectralField> {
    if values.len() != basis.grid().len() {
        return Err(Error::Dimension(format!(
            "{} grid values for a grid of {} nodes",
            values.len(),
            basis.grid().len()
        )));
    }
    if k > basis.len() {
        return Err(Error::Dimension(format!("{k} modes requested, basis has {}", basis.len())));
    }
    SpectralField::new(basis.id(), basis.analyze_slice(values, k))
}

fn check_truncation(field: &SpectralField, n: usize) -> Result<()> {
    if n > field.len() {
        return Err(Error::Range(format!(
            "truncation N = {n} exceeds the {} stored coefficients",
            field.len()
        )));
    }
    Ok(())
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn tail_norm(a: &[f64], n: usize) -> f64 {
    a.get(n..).map(norm).unwrap_or(0.0)
}

pub(crate) fn distance(a: &[f64], b: &[f64]) -> f64 {
    let common = a.len().min(b.len());
    let head: f64 = a[..common].iter().zip(&b[..common]).map(|(x, y)| (x - y).powi(2)).sum();
    let tail: f64 = a[common..].iter().chain(&b[common..]).map(|x| x * x).sum();
    (head + tail).sqrt()
}
