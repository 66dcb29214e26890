//! Homogeneous model manifolds with closed-form geometry and spectra.
//!
//! Three models are supported: the circle `S¹`, the flat torus `T²` and the
//! round sphere `S²`. Each carries its invariant measure, geodesic distance and
//! an explicit real orthonormal eigenbasis of the Laplace operator
//! `L = -Σ D_j²` built from an orthonormal basis of the Lie algebra of the
//! acting group. On all three models `L` coincides with the Laplace–Beltrami
//! operator (proportionality constant fixed to 1).

mod basis;
mod legendre;
mod quadrature;

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub use basis::{eigen_basis, eigen_basis_with_cap, weyl_count, BasisEntry, BasisLabel, SpectralBasis, Trig};
pub use legendre::gauss_legendre;
pub use quadrature::{quadrature_for_degree, reference_quadrature, Quadrature};

/// Default ceiling on the number of basis entries.
pub const DEFAULT_BASIS_CAP: usize = 20_000;

/// Default ceiling on the number of quadrature nodes.
pub const DEFAULT_QUADRATURE_CAP: usize = 8_000_000;

const TAU: f64 = 2.0 * PI;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ManifoldKind {
    Circle,
    Torus2,
    Sphere2,
}

impl ManifoldKind {
    pub const ALL: [ManifoldKind; 3] = [ManifoldKind::Circle, ManifoldKind::Torus2, ManifoldKind::Sphere2];

    pub fn as_str(self) -> &'static str {
        match self {
            ManifoldKind::Circle => "circle",
            ManifoldKind::Torus2 => "torus2",
            ManifoldKind::Sphere2 => "sphere2",
        }
    }
}

impl fmt::Display for ManifoldKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ManifoldKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "circle" => Ok(ManifoldKind::Circle),
            "torus2" => Ok(ManifoldKind::Torus2),
            "sphere2" => Ok(ManifoldKind::Sphere2),
            other => Err(Error::UnsupportedManifold(other.to_string())),
        }
    }
}

/// Constant table of a model manifold.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ManifoldSpec {
    pub kind: ManifoldKind,
    /// Dimension of the manifold.
    pub n: usize,
    /// Dimension of the acting group.
    pub d: usize,
    /// Total invariant measure.
    pub volume: f64,
    /// Smallest nonzero eigenvalue of the Laplace operator.
    pub lambda1: f64,
}

pub fn make_manifold(kind: ManifoldKind) -> ManifoldSpec {
    match kind {
        ManifoldKind::Circle => ManifoldSpec { kind, n: 1, d: 1, volume: TAU, lambda1: 1.0 },
        ManifoldKind::Torus2 => ManifoldSpec { kind, n: 2, d: 2, volume: TAU * TAU, lambda1: 1.0 },
        // SO(3) acts through three rotation generators.
        ManifoldKind::Sphere2 => ManifoldSpec { kind, n: 2, d: 3, volume: 4.0 * PI, lambda1: 2.0 },
    }
}

impl ManifoldSpec {
    pub fn from_name(name: &str) -> Result<Self> {
        Ok(make_manifold(name.parse()?))
    }

    /// Largest admissible lattice radius.
    pub fn rho_cap(&self) -> f64 {
        match self.kind {
            ManifoldKind::Sphere2 => PI / 2.0,
            _ => PI,
        }
    }

    pub fn diameter(&self) -> f64 {
        match self.kind {
            ManifoldKind::Circle | ManifoldKind::Sphere2 => PI,
            ManifoldKind::Torus2 => PI * 2f64.sqrt(),
        }
    }

    pub fn distance(&self, x: &Point, y: &Point) -> f64 {
        geodesic_distance(self, x, y)
    }

    /// Checks that `p` is a valid point of this manifold.
    pub fn check_point(&self, p: &Point) -> Result<()> {
        match (self.kind, p) {
            (ManifoldKind::Circle, Point::Circle(_)) | (ManifoldKind::Torus2, Point::Torus(_, _)) => Ok(()),
            (ManifoldKind::Sphere2, Point::Sphere(v)) => {
                let norm = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
                if (norm - 1.0).abs() <= 1e-12 {
                    Ok(())
                } else {
                    Err(Error::InvalidParameter(format!("sphere point has norm {norm}")))
                }
            }
            _ => Err(Error::ManifoldMismatch(format!("point {p:?} is not on {}", self.kind))),
        }
    }
}

/// A point in intrinsic coordinates: an angle, an angle pair, or a unit 3-vector.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Point {
    Circle(f64),
    Torus(f64, f64),
    Sphere([f64; 3]),
}

impl Point {
    /// Circle point, angle reduced to `[0, 2π)`.
    pub fn circle(x: f64) -> Self {
        Point::Circle(wrap_angle(x))
    }

    pub fn torus(x: f64, y: f64) -> Self {
        Point::Torus(wrap_angle(x), wrap_angle(y))
    }

    /// Sphere point from colatitude and longitude.
    pub fn sphere(theta: f64, phi: f64) -> Self {
        let (st, ct) = theta.sin_cos();
        let (sp, cp) = phi.sin_cos();
        Point::Sphere([st * cp, st * sp, ct])
    }

    /// Sphere point from an arbitrary nonzero vector.
    pub fn sphere_from_vec(v: [f64; 3]) -> Self {
        let norm = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        Point::Sphere([v[0] / norm, v[1] / norm, v[2] / norm])
    }

    pub fn north_pole() -> Self {
        Point::Sphere([0.0, 0.0, 1.0])
    }

    pub fn south_pole() -> Self {
        Point::Sphere([0.0, 0.0, -1.0])
    }

    pub fn coords(&self) -> Vec<f64> {
        match *self {
            Point::Circle(x) => vec![x],
            Point::Torus(x, y) => vec![x, y],
            Point::Sphere(v) => v.to_vec(),
        }
    }

    pub fn from_coords(c: &[f64]) -> Result<Self> {
        match *c {
            [x] => Ok(Point::circle(x)),
            [x, y] => Ok(Point::torus(x, y)),
            [x, y, z] => Ok(Point::Sphere([x, y, z])),
            _ => Err(Error::InvalidParameter(format!("point with {} coordinates", c.len()))),
        }
    }

    pub fn kind(&self) -> ManifoldKind {
        match self {
            Point::Circle(_) => ManifoldKind::Circle,
            Point::Torus(..) => ManifoldKind::Torus2,
            Point::Sphere(_) => ManifoldKind::Sphere2,
        }
    }

    /// Colatitude and longitude of a sphere point.
    pub fn sphere_angles(&self) -> (f64, f64) {
        match *self {
            Point::Sphere([x, y, z]) => {
                let theta = z.clamp(-1.0, 1.0).acos();
                let phi = if x == 0.0 && y == 0.0 { 0.0 } else { wrap_angle(y.atan2(x)) };
                (theta, phi)
            }
            _ => panic!("sphere_angles on a non-sphere point"),
        }
    }
}

impl Serialize for Point {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.coords().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Point {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let c = Vec::<f64>::deserialize(d)?;
        Point::from_coords(&c).map_err(serde::de::Error::custom)
    }
}

pub(crate) fn wrap_angle(x: f64) -> f64 {
    let r = x.rem_euclid(TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Periodic difference of two angles, in `[0, π]`.
#[inline]
pub(crate) fn angle_gap(a: f64, b: f64) -> f64 {
    let d = (a - b).abs().rem_euclid(TAU);
    d.min(TAU - d)
}

/// Geodesic distance: arc length on the circle, flat wrap-around distance on
/// the torus, great-circle distance on the sphere.
///
/// Panics if the points do not belong to `m`.
pub fn geodesic_distance(m: &ManifoldSpec, x: &Point, y: &Point) -> f64 {
    match (m.kind, x, y) {
        (ManifoldKind::Circle, Point::Circle(a), Point::Circle(b)) => angle_gap(*a, *b),
        (ManifoldKind::Torus2, Point::Torus(a1, a2), Point::Torus(b1, b2)) => {
            angle_gap(*a1, *b1).hypot(angle_gap(*a2, *b2))
        }
        (ManifoldKind::Sphere2, Point::Sphere(u), Point::Sphere(v)) => sphere_distance(u, v),
        _ => panic!("points {x:?}, {y:?} do not belong to {}", m.kind),
    }
}

#[inline]
pub(crate) fn sphere_distance(u: &[f64; 3], v: &[f64; 3]) -> f64 {
    let dot = u[0] * v[0] + u[1] * v[1] + u[2] * v[2];
    dot.clamp(-1.0, 1.0).acos()
}
