use std::f64::consts::PI;

use super::{BasisDescriptor, DomainKind, EigenBasis, ModeLabel};
use crate::error::{Error, Result};
use crate::spectral::{Node, QuadratureGrid};

/// Fourier basis `{1, cos jθ, sin jθ}` for `j ≤ max_freq` on the circle.
///
/// The default grid has `4·max_freq + 1` nodes, enough to project cubic
/// nonlinearities of band-limited fields without aliasing.
pub fn build_circle_basis(max_freq: usize, diffusivity: f64) -> Result<EigenBasis> {
    build_circle_basis_with_nodes(max_freq, diffusivity, 4 * max_freq + 1)
}

pub fn build_circle_basis_with_nodes(
    max_freq: usize,
    diffusivity: f64,
    nodes: usize,
) -> Result<EigenBasis> {
    if max_freq < 1 {
        return Err(Error::Argument("circle basis needs K >= 1".into()));
    }
    if !(diffusivity > 0.0) {
        return Err(Error::Argument(format!("diffusivity must be positive, got {diffusivity}")));
    }
    if nodes < 2 * max_freq + 1 {
        return Err(Error::Argument(format!(
            "{nodes} nodes cannot resolve frequency {max_freq} (need {})",
            2 * max_freq + 1
        )));
    }

    let h = 2.0 * PI / nodes as f64;
    let grid_nodes: Vec<Node> = (0..nodes).map(|j| Node { x: 0.0, lon: j as f64 * h }).collect();
    let grid = QuadratureGrid::new(grid_nodes, vec![h; nodes], nodes - 1)?;

    let modes = 2 * max_freq + 1;
    let mut eigenvalues = Vec::with_capacity(modes);
    let mut labels = Vec::with_capacity(modes);
    let mut table = Vec::with_capacity(modes * nodes);

    eigenvalues.push(0.0);
    labels.push(ModeLabel::Fourier { freq: 0, sine: false });
    table.extend(std::iter::repeat((2.0 * PI).sqrt().recip()).take(nodes));

    let amp = PI.sqrt().recip();
    for j in 1..=max_freq {
        let lambda = diffusivity * (j * j) as f64;
        for sine in [false, true] {
            eigenvalues.push(lambda);
            labels.push(ModeLabel::Fourier { freq: j, sine });
            table.extend(grid.nodes.iter().map(|n| {
                let arg = j as f64 * n.lon;
                amp * if sine { arg.sin() } else { arg.cos() }
            }));
        }
    }

    let descriptor = BasisDescriptor::Circle { max_freq, diffusivity, nodes };
    Ok(EigenBasis::from_parts(
        DomainKind::Circle,
        descriptor,
        eigenvalues,
        labels,
        table,
        grid,
        max_freq,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{analyze, synthesize};

    #[test]
    fn spectrum_of_second_derivative() {
        let b = build_circle_basis(3, 1.0).unwrap();
        assert_eq!(b.eigenvalues(), &[0.0, 1.0, 1.0, 4.0, 4.0, 9.0, 9.0]);
        let b = build_circle_basis(2, 0.5).unwrap();
        assert_eq!(b.eigenvalues(), &[0.0, 0.5, 0.5, 2.0, 2.0]);
    }

    #[test]
    fn constant_function_is_first_mode() {
        let b = build_circle_basis(4, 1.0).unwrap();
        let c = analyze(&vec![2.5; b.grid().len()], &b, b.len()).unwrap();
        assert!((c.coeffs[0] - 2.5 * (2.0 * PI).sqrt()).abs() < 1e-12);
        assert!(c.coeffs[1..].iter().all(|a| a.abs() < 1e-13));
    }

    #[test]
    fn gram_matrix_is_identity() {
        for k in [1, 5, 17] {
            assert!(build_circle_basis(k, 1.0).unwrap().gram_error() < 1e-10);
        }
        // minimal admissible grid is still exact
        assert!(build_circle_basis_with_nodes(6, 1.0, 13).unwrap().gram_error() < 1e-10);
    }

    #[test]
    fn pure_mode_roundtrip() {
        let b = build_circle_basis(5, 1.0).unwrap();
        let mut f = b.zero_field();
        f.coeffs[2] = 1.0;
        let v = synthesize(&f, &b).unwrap();
        assert_eq!(v, b.mode(2));
        let back = analyze(&v, &b, b.len()).unwrap();
        assert!(back.distance(&f) < 1e-13);
    }

    #[test]
    fn argument_validation() {
        assert!(build_circle_basis(0, 1.0).is_err());
        assert!(build_circle_basis(3, 0.0).is_err());
        assert!(build_circle_basis_with_nodes(3, 1.0, 6).is_err());
    }
}
