use std::f64::consts::PI;

use super::basis::max_degree;
use super::legendre::gauss_legendre;
use super::{ManifoldKind, ManifoldSpec, Point, DEFAULT_QUADRATURE_CAP};
use crate::error::{Error, Result};

/// Positive-weight rule used as the integration oracle.
#[derive(Clone, Debug)]
pub struct Quadrature {
    pub nodes: Vec<Point>,
    pub weights: Vec<f64>,
    /// Polynomial degree integrated exactly.
    pub degree: usize,
}

impl Quadrature {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(&Point) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(x, w)| w * f(x)).sum()
    }
}

/// Rule exact for products of two members of `E_ω`: equispaced grids on the
/// circle and torus, Gauss–Legendre in colatitude times equispaced longitude
/// on the sphere.
pub fn reference_quadrature(m: &ManifoldSpec, omega: f64) -> Result<Quadrature> {
    if omega.is_nan() || omega < 0.0 {
        return Err(Error::InvalidParameter(format!("omega = {omega} must be >= 0")));
    }
    quadrature_for_degree(m, 2 * max_degree(m, omega))
}

/// Rule exact for trigonometric (circle, per axis on the torus) or spherical
/// polynomials of degree `<= degree`.
pub fn quadrature_for_degree(m: &ManifoldSpec, degree: usize) -> Result<Quadrature> {
    let cap = DEFAULT_QUADRATURE_CAP;
    match m.kind {
        ManifoldKind::Circle => {
            let n = (degree + 1).next_power_of_two().max(2);
            if n > cap {
                return Err(Error::QuadratureTooLarge { nodes: n, cap });
            }
            let h = 2.0 * PI / n as f64;
            Ok(Quadrature {
                nodes: (0..n).map(|i| Point::Circle(i as f64 * h)).collect(),
                weights: vec![h; n],
                degree,
            })
        }
        ManifoldKind::Torus2 => {
            let n = (degree + 1).next_power_of_two().max(2);
            if n.saturating_mul(n) > cap {
                return Err(Error::QuadratureTooLarge { nodes: n.saturating_mul(n), cap });
            }
            let h = 2.0 * PI / n as f64;
            let mut nodes = Vec::with_capacity(n * n);
            for i in 0..n {
                for j in 0..n {
                    nodes.push(Point::Torus(i as f64 * h, j as f64 * h));
                }
            }
            Ok(Quadrature { nodes, weights: vec![h * h; n * n], degree })
        }
        ManifoldKind::Sphere2 => {
            let n_theta = degree / 2 + 1;
            let n_phi = degree + 1;
            if n_theta.saturating_mul(n_phi) > cap {
                return Err(Error::QuadratureTooLarge { nodes: n_theta.saturating_mul(n_phi), cap });
            }
            let (zs, ws) = gauss_legendre(n_theta);
            let h = 2.0 * PI / n_phi as f64;
            let mut nodes = Vec::with_capacity(n_theta * n_phi);
            let mut weights = Vec::with_capacity(n_theta * n_phi);
            for (z, w) in zs.iter().zip(&ws) {
                let s = (1.0 - z * z).max(0.0).sqrt();
                for k in 0..n_phi {
                    let (sp, cp) = (k as f64 * h).sin_cos();
                    nodes.push(Point::Sphere([s * cp, s * sp, *z]));
                    weights.push(w * h);
                }
            }
            Ok(Quadrature { nodes, weights, degree })
        }
    }
}
