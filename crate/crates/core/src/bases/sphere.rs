use std::f64::consts::PI;

use super::{BasisDescriptor, DomainKind, EigenBasis, ModeLabel};
use crate::error::{Error, Result};
use crate::spectral::{Node, QuadratureGrid};

/// Real spherical harmonics `Y_l^m`, `l ≤ l_max`, ordered by `(l, m)` with
/// `m = −l..=l`, on a Gauss–Legendre × uniform-longitude grid.
///
/// The default grid uses about 3/2 of the minimal resolution in each
/// direction so that grid-evaluated nonlinearities alias less.
pub fn build_sphere_basis(l_max: usize, diffusivity: f64) -> Result<EigenBasis> {
    let n_lat = (3 * (l_max + 1)).div_ceil(2);
    let n_lon = 3 * l_max + 1;
    build_sphere_basis_with_grid(l_max, diffusivity, n_lat, n_lon)
}

pub fn build_sphere_basis_with_grid(
    l_max: usize,
    diffusivity: f64,
    n_lat: usize,
    n_lon: usize,
) -> Result<EigenBasis> {
    if !(diffusivity > 0.0) {
        return Err(Error::Argument(format!("diffusivity must be positive, got {diffusivity}")));
    }
    if n_lat < l_max + 1 || n_lon < 2 * l_max + 1 {
        return Err(Error::Argument(format!(
            "grid {n_lat}x{n_lon} too coarse for degree {l_max} (need {}x{})",
            l_max + 1,
            2 * l_max + 1
        )));
    }

    let (mu, gl_w) = gauss_legendre(n_lat);
    let dlon = 2.0 * PI / n_lon as f64;
    let mut nodes = Vec::with_capacity(n_lat * n_lon);
    let mut weights = Vec::with_capacity(n_lat * n_lon);
    for (x, w) in mu.iter().zip(&gl_w) {
        for j in 0..n_lon {
            nodes.push(Node { x: *x, lon: j as f64 * dlon });
            weights.push(w * dlon);
        }
    }
    let exactness = (2 * n_lat - 1).min(n_lon - 1);
    let grid = QuadratureGrid::new(nodes, weights, exactness)?;

    let modes = (l_max + 1) * (l_max + 1);
    let n_nodes = grid.len();
    let plm: Vec<Vec<f64>> = mu.iter().map(|&x| normalized_legendre(l_max, x)).collect();

    let mut eigenvalues = Vec::with_capacity(modes);
    let mut labels = Vec::with_capacity(modes);
    let mut table = vec![0.0; modes * n_nodes];
    for l in 0..=l_max {
        for m in -(l as i64)..=(l as i64) {
            let k = eigenvalues.len();
            eigenvalues.push(diffusivity * (l * (l + 1)) as f64);
            labels.push(ModeLabel::Harmonic { l, m });
            let am = m.unsigned_abs() as usize;
            let row = &mut table[k * n_nodes..(k + 1) * n_nodes];
            for (i, p) in plm.iter().enumerate() {
                let p = p[l * (l + 1) / 2 + am];
                for j in 0..n_lon {
                    let phi = j as f64 * dlon;
                    row[i * n_lon + j] = match m {
                        0 => p,
                        m if m > 0 => 2f64.sqrt() * p * (am as f64 * phi).cos(),
                        _ => 2f64.sqrt() * p * (am as f64 * phi).sin(),
                    };
                }
            }
        }
    }

    let descriptor = BasisDescriptor::Sphere { l_max, diffusivity, n_lat, n_lon };
    Ok(EigenBasis::from_parts(
        DomainKind::Sphere,
        descriptor,
        eigenvalues,
        labels,
        table,
        grid,
        l_max,
    ))
}

/// Position of `(l, m)` in the `(l, m)` lexicographic mode ordering.
pub fn sphere_mode_index(l: usize, m: i64) -> usize {
    debug_assert!(m.unsigned_abs() as usize <= l);
    (l * l) as usize + (m + l as i64) as usize
}

/// Orthonormal associated Legendre functions `P̄_l^m(x)` for `0 ≤ m ≤ l ≤ l_max`,
/// stored at `l(l+1)/2 + m`, normalized so that `P̄_l^0 = Y_l^0`.
fn normalized_legendre(l_max: usize, x: f64) -> Vec<f64> {
    let mut p = vec![0.0; (l_max + 1) * (l_max + 2) / 2];
    let idx = |l: usize, m: usize| l * (l + 1) / 2 + m;
    let s = (1.0 - x * x).max(0.0).sqrt();
    let mut pmm = (4.0 * PI).sqrt().recip();
    for m in 0..=l_max {
        if m > 0 {
            pmm *= ((2 * m + 1) as f64 / (2 * m) as f64).sqrt() * s;
        }
        p[idx(m, m)] = pmm;
        if m < l_max {
            p[idx(m + 1, m)] = ((2 * m + 3) as f64).sqrt() * x * pmm;
        }
        for l in (m + 2)..=l_max {
            let (lf, mf) = (l as f64, m as f64);
            let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
            let b = (((lf - 1.0).powi(2) - mf * mf) / (4.0 * (lf - 1.0).powi(2) - 1.0)).sqrt();
            p[idx(l, m)] = a * (x * p[idx(l - 1, m)] - b * p[idx(l - 2, m)]);
        }
    }
    p
}

/// Gauss–Legendre nodes (ascending) and weights on `[-1, 1]`, by Newton
/// iteration on `P_n` to a residual below `1e-14`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if p.abs() < 1e-14 && dz.abs() < 1e-15 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, z);
        if d.is_finite() {
            dp = d;
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, z);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{analyze, synthesize};

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(7);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
        for deg in 0..=13 {
            let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg)).sum();
            let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
            assert!((q - exact).abs() < 1e-14, "degree {deg}: {q} vs {exact}");
        }
        assert!(x.windows(2).all(|p| p[0] < p[1]));
    }

    #[test]
    fn spectrum_and_ordering() {
        let b = build_sphere_basis(3, 2.0).unwrap();
        assert_eq!(b.len(), 16);
        assert_eq!(b.eigenvalues()[0], 0.0);
        let l2: Vec<f64> = b.eigenvalues()[4..9].to_vec();
        assert_eq!(l2, vec![12.0; 5]);
        assert_eq!(b.labels()[sphere_mode_index(2, -1)], ModeLabel::Harmonic { l: 2, m: -1 });
        assert!(b.eigenvalues().windows(2).all(|p| p[0] <= p[1]));
    }

    #[test]
    fn gram_is_identity_on_minimal_and_default_grids() {
        assert!(build_sphere_basis_with_grid(8, 1.0, 9, 17).unwrap().gram_error() < 1e-8);
        assert!(build_sphere_basis(12, 1.0).unwrap().gram_error() < 1e-8);
    }

    #[test]
    fn weights_sum_to_sphere_area() {
        let b = build_sphere_basis(5, 1.0).unwrap();
        assert!((b.grid().measure() - 4.0 * PI).abs() < 1e-12 * 4.0 * PI);
    }

    #[test]
    fn cos_latitude_profile_is_single_mode() {
        // sin(latitude) = x is proportional to Y_1^0.
        let b = build_sphere_basis(6, 1.0).unwrap();
        let values: Vec<f64> = b.nodes().iter().map(|n| n.x).collect();
        let c = analyze(&values, &b, b.len()).unwrap();
        let k = sphere_mode_index(1, 0);
        let expected = (4.0 * PI / 3.0).sqrt();
        assert!((c.coeffs[k].abs() - expected).abs() < 1e-12);
        for (i, a) in c.coeffs.iter().enumerate() {
            if i != k {
                assert!(a.abs() < 1e-12);
            }
        }
        let back = synthesize(&c, &b).unwrap();
        assert!(back.iter().zip(&values).all(|(a, b)| (a - b).abs() < 1e-12));
    }

    #[test]
    fn rejects_coarse_grid() {
        assert!(build_sphere_basis_with_grid(4, 1.0, 4, 9).is_err());
        assert!(build_sphere_basis_with_grid(4, 1.0, 5, 8).is_err());
        assert!(build_sphere_basis(0, 1.0).is_ok());
    }
}
