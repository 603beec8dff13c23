//! Concrete orthonormal eigenbases of nonnegative self-adjoint operators.
//!
//! Every basis stores its eigenvalues `λ_k ≥ 0` of `𝓛 = −L` (nondecreasing)
//! and a table of eigenfunction values at the nodes of a quadrature grid. The
//! generator eigenvalues are `β_k = −λ_k`, so each truncated linear flow
//! `e^{L_N t}` is a contraction.

mod circle;
mod sphere;
mod tridiagonal;
mod zonal;

pub use circle::{build_circle_basis, build_circle_basis_with_nodes};
pub use sphere::{
    build_sphere_basis, build_sphere_basis_with_grid, gauss_legendre, sphere_mode_index,
};
pub use zonal::{build_zonal_sl_basis, DiffusivityProfile};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::spectral::{Node, QuadratureGrid, SpectralField};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainKind {
    Circle,
    Sphere,
    ZonalInterval,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ModeLabel {
    /// Fourier mode: `freq = 0` is the constant, otherwise cosine or sine.
    Fourier { freq: usize, sine: bool },
    /// Real spherical harmonic of degree `l` and order `m`.
    Harmonic { l: usize, m: i64 },
    /// `index`-th Sturm–Liouville eigenvector.
    Zonal { index: usize },
}

/// Parameters from which a basis is rebuilt; eigenfunction tables are never
/// serialized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", deny_unknown_fields)]
pub enum BasisDescriptor {
    Circle {
        max_freq: usize,
        diffusivity: f64,
        nodes: usize,
    },
    Sphere {
        l_max: usize,
        diffusivity: f64,
        n_lat: usize,
        n_lon: usize,
    },
    ZonalInterval {
        diffusivity: DiffusivityProfile,
        modes: usize,
        m_grid: usize,
    },
}

impl BasisDescriptor {
    pub fn build(&self) -> Result<EigenBasis> {
        match self {
            BasisDescriptor::Circle { max_freq, diffusivity, nodes } => {
                build_circle_basis_with_nodes(*max_freq, *diffusivity, *nodes)
            }
            BasisDescriptor::Sphere { l_max, diffusivity, n_lat, n_lon } => {
                build_sphere_basis_with_grid(*l_max, *diffusivity, *n_lat, *n_lon)
            }
            BasisDescriptor::ZonalInterval { diffusivity, modes, m_grid } => {
                build_zonal_sl_basis(diffusivity, *modes, *m_grid)
            }
        }
    }

    /// Short identifier stored in every [`SpectralField`] of the basis.
    pub fn id(&self) -> String {
        match self {
            BasisDescriptor::Circle { max_freq, diffusivity, nodes } => {
                format!("circle:K={max_freq}:D={diffusivity}:n={nodes}")
            }
            BasisDescriptor::Sphere { l_max, diffusivity, n_lat, n_lon } => {
                format!("sphere:L={l_max}:D={diffusivity}:grid={n_lat}x{n_lon}")
            }
            BasisDescriptor::ZonalInterval { diffusivity, modes, m_grid } => {
                format!("zonal:K={modes}:M={m_grid}:D={}", diffusivity.tag())
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct EigenBasis {
    kind: DomainKind,
    descriptor: BasisDescriptor,
    id: String,
    eigenvalues: Vec<f64>,
    labels: Vec<ModeLabel>,
    /// Mode-major: `table[k * n_nodes + j] = e_k(node_j)`.
    table: Vec<f64>,
    grid: QuadratureGrid,
    band_limit: usize,
}

impl EigenBasis {
    pub(crate) fn from_parts(
        kind: DomainKind,
        descriptor: BasisDescriptor,
        eigenvalues: Vec<f64>,
        labels: Vec<ModeLabel>,
        table: Vec<f64>,
        grid: QuadratureGrid,
        band_limit: usize,
    ) -> Self {
        debug_assert_eq!(table.len(), eigenvalues.len() * grid.len());
        debug_assert_eq!(labels.len(), eigenvalues.len());
        let id = descriptor.id();
        Self { kind, descriptor, id, eigenvalues, labels, table, grid, band_limit }
    }

    pub fn kind(&self) -> DomainKind {
        self.kind
    }

    pub fn descriptor(&self) -> &BasisDescriptor {
        &self.descriptor
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    /// Number of modes.
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// Maximum frequency / degree / mode count the basis was built for.
    pub fn band_limit(&self) -> usize {
        self.band_limit
    }

    /// Eigenvalues `λ_k ≥ 0` of `−L`.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn labels(&self) -> &[ModeLabel] {
        &self.labels
    }

    pub fn grid(&self) -> &QuadratureGrid {
        &self.grid
    }

    pub fn nodes(&self) -> &[Node] {
        &self.grid.nodes
    }

    /// Values of `e_k` at the grid nodes.
    pub fn mode(&self, k: usize) -> &[f64] {
        let n = self.grid.len();
        &self.table[k * n..(k + 1) * n]
    }

    pub fn zero_field(&self) -> SpectralField {
        SpectralField::zeros(self.id.clone(), self.len())
    }

    pub fn field(&self, coeffs: Vec<f64>) -> Result<SpectralField> {
        SpectralField::new(self.id.clone(), coeffs)
    }

    /// Grid values of `Σ_k c_k e_k` over the first `coeffs.len()` modes.
    pub fn synthesize_slice(&self, coeffs: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.grid.len()];
        self.synthesize_into(coeffs, &mut out);
        out
    }

    pub fn synthesize_into(&self, coeffs: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        for (k, &c) in coeffs.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            for (o, e) in out.iter_mut().zip(self.mode(k)) {
                *o += c * e;
            }
        }
    }

    /// Quadrature coefficients `⟨values, e_k⟩` for `k < n`.
    pub fn analyze_slice(&self, values: &[f64], n: usize) -> Vec<f64> {
        let weighted: Vec<f64> =
            values.iter().zip(&self.grid.weights).map(|(v, w)| v * w).collect();
        self.analyze_weighted(&weighted, n)
    }

    /// Like [`Self::analyze_slice`] for values already multiplied by the weights.
    pub fn analyze_weighted(&self, weighted: &[f64], n: usize) -> Vec<f64> {
        (0..n)
            .map(|k| self.mode(k).iter().zip(weighted).map(|(e, w)| e * w).sum())
            .collect()
    }

    /// Largest entry of `|G − I|` for the quadrature Gram matrix of the modes.
    pub fn gram_error(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for j in 0..self.len() {
            let wj: Vec<f64> =
                self.mode(j).iter().zip(&self.grid.weights).map(|(e, w)| e * w).collect();
            for k in j..self.len() {
                let g: f64 = wj.iter().zip(self.mode(k)).map(|(a, b)| a * b).sum();
                let target = if j == k { 1.0 } else { 0.0 };
                worst = worst.max((g - target).abs());
            }
        }
        worst
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn descriptor_roundtrip_rebuilds_same_basis() {
        let d = BasisDescriptor::Sphere { l_max: 3, diffusivity: 0.5, n_lat: 6, n_lon: 10 };
        let text = serde_json::to_string(&d).unwrap();
        let back: BasisDescriptor = serde_json::from_str(&text).unwrap();
        let a = d.build().unwrap();
        let b = back.build().unwrap();
        assert_eq!(a.id(), b.id());
        assert_eq!(a.eigenvalues(), b.eigenvalues());
        assert_eq!(a.mode(5), b.mode(5));
    }

    #[test]
    fn descriptor_rejects_unknown_keys() {
        let text = r#"{"kind":"circle","max_freq":3,"diffusivity":1.0,"nodes":13,"extra":1}"#;
        assert!(serde_json::from_str::<BasisDescriptor>(text).is_err());
    }
}
