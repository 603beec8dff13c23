use serde::{Deserialize, Serialize};

use super::tridiagonal::SymTridiagonal;
use super::{BasisDescriptor, DomainKind, EigenBasis, ModeLabel};
use crate::error::{Error, Result};
use crate::spectral::{Node, QuadratureGrid};

/// Zonally averaged heat diffusivity `D(x)`, `x` the sine of latitude.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "type", deny_unknown_fields)]
pub enum DiffusivityProfile {
    Constant { value: f64 },
    /// Piecewise-linear interpolation of samples at increasing `x`.
    Sampled { x: Vec<f64>, d: Vec<f64> },
}

impl DiffusivityProfile {
    pub fn constant(value: f64) -> Self {
        DiffusivityProfile::Constant { value }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            DiffusivityProfile::Constant { value } => *value,
            DiffusivityProfile::Sampled { x: xs, d } => {
                if x <= xs[0] {
                    return d[0];
                }
                let last = xs.len() - 1;
                if x >= xs[last] {
                    return d[last];
                }
                let i = xs.partition_point(|&s| s <= x) - 1;
                let t = (x - xs[i]) / (xs[i + 1] - xs[i]);
                d[i] + t * (d[i + 1] - d[i])
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            DiffusivityProfile::Constant { value } if !(*value > 0.0) => {
                Err(Error::Model(format!("diffusivity {value} is not strictly positive")))
            }
            DiffusivityProfile::Sampled { x, d } => {
                if x.len() != d.len() || x.is_empty() {
                    return Err(Error::Model("diffusivity samples: x and d lengths differ".into()));
                }
                if !x.windows(2).all(|p| p[0] < p[1]) {
                    return Err(Error::Model("diffusivity sample points must increase".into()));
                }
                match d.iter().find(|v| !(**v > 0.0)) {
                    Some(v) => Err(Error::Model(format!(
                        "diffusivity sample {v} is not strictly positive"
                    ))),
                    None => Ok(()),
                }
            }
            _ => Ok(()),
        }
    }

    pub(crate) fn tag(&self) -> String {
        match self {
            DiffusivityProfile::Constant { value } => value.to_string(),
            DiffusivityProfile::Sampled { x, .. } => format!("sampled{}", x.len()),
        }
    }
}

/// First `modes` eigenpairs of `−d/dx[D(x)(1 − x²) d/dx]` on `[-1, 1]`.
///
/// Cell-centred finite volumes on `m_grid` uniform cells; the flux
/// `D(1 − x²)` is evaluated at cell faces and vanishes at `x = ±1`, so no
/// boundary condition is imposed. The grid quadrature is the midpoint rule
/// and eigenvectors are orthonormal under it. Eigenvectors are signed to be
/// positive in the cell nearest `x = 1`.
pub fn build_zonal_sl_basis(
    diffusivity: &DiffusivityProfile,
    modes: usize,
    m_grid: usize,
) -> Result<EigenBasis> {
    diffusivity.validate()?;
    if modes == 0 || 4 * modes > m_grid {
        return Err(Error::Argument(format!(
            "zonal basis needs 1 <= K <= M_grid/4, got K = {modes}, M_grid = {m_grid}"
        )));
    }
    let h = 2.0 / m_grid as f64;
    let centres: Vec<f64> = (0..m_grid).map(|i| -1.0 + (i as f64 + 0.5) * h).collect();
    if let Some(x) = centres.iter().find(|x| !(diffusivity.eval(**x) > 0.0)) {
        return Err(Error::Model(format!("diffusivity not positive at x = {x}")));
    }
    let flux: Vec<f64> = (0..=m_grid)
        .map(|i| {
            let x = -1.0 + i as f64 * h;
            diffusivity.eval(x) * (1.0 - x * x).max(0.0)
        })
        .collect();

    let h2 = h * h;
    let matrix = SymTridiagonal {
        diag: (0..m_grid).map(|i| (flux[i] + flux[i + 1]) / h2).collect(),
        off: (1..m_grid).map(|i| -flux[i] / h2).collect(),
    };
    let (values, vectors) = matrix.lowest_eigenpairs(modes)?;

    let grid = QuadratureGrid::new(
        centres.iter().map(|&x| Node { x, lon: 0.0 }).collect(),
        vec![h; m_grid],
        1,
    )?;
    let scale = h.sqrt().recip();
    let mut table = Vec::with_capacity(modes * m_grid);
    let mut eigenvalues = Vec::with_capacity(modes);
    let mut prev: f64 = 0.0;
    for (lambda, v) in values.iter().zip(&vectors) {
        // Rayleigh quotient is more accurate than the bisection bracket near zero.
        let av = (0..m_grid)
            .map(|i| {
                let mut s = matrix.diag[i] * v[i];
                if i > 0 {
                    s += matrix.off[i - 1] * v[i - 1];
                }
                if i + 1 < m_grid {
                    s += matrix.off[i] * v[i + 1];
                }
                s * v[i]
            })
            .sum::<f64>();
        let rq = if (av - lambda).abs() < 1e-6 * lambda.abs().max(1.0) { av } else { *lambda };
        let value = rq.max(0.0).max(prev);
        prev = value;
        eigenvalues.push(value);
        let sign = if v[m_grid - 1] < 0.0 { -1.0 } else { 1.0 };
        table.extend(v.iter().map(|a| sign * scale * a));
    }
    let labels = (0..modes).map(|index| ModeLabel::Zonal { index }).collect();

    let descriptor =
        BasisDescriptor::ZonalInterval { diffusivity: diffusivity.clone(), modes, m_grid };
    Ok(EigenBasis::from_parts(
        DomainKind::ZonalInterval,
        descriptor,
        eigenvalues,
        labels,
        table,
        grid,
        modes,
    ))
}
