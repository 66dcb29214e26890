use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::manifold::{ManifoldKind, ManifoldSpec, Point};

const TAU: f64 = 2.0 * PI;
const NODE_CAP: usize = 8_000_000;

/// Dense weighted grid shared by lattice construction, Voronoi measures and
/// covering-radius certification.
///
/// Circle and torus grids are uniform with a power-of-two resolution; the
/// sphere grid is a set of colatitude rings with near-uniform arc spacing and
/// exact band areas as weights. Seed `s != 0` applies a rigid motion derived
/// from `s` (translation, or a random rotation on the sphere).
pub(crate) struct DenseGrid {
    pub nodes: Vec<Point>,
    pub weights: Vec<f64>,
    /// Largest spacing between neighbouring nodes along a coordinate.
    pub spacing: f64,
}

impl DenseGrid {
    /// Grid resolved finely enough for lattices of radius `rho`.
    pub(crate) fn for_rho(m: &ManifoldSpec, rho: f64, seed: u64) -> Result<Self> {
        Self::new(m, rho / 9.0, seed)
    }

    pub(crate) fn new(m: &ManifoldSpec, h: f64, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = h.min(1.0);
        match m.kind {
            ManifoldKind::Circle => {
                let g = ((TAU / h).ceil() as usize).next_power_of_two();
                if g > NODE_CAP {
                    return Err(Error::QuadratureTooLarge { nodes: g, cap: NODE_CAP });
                }
                let step = TAU / g as f64;
                let off = if seed == 0 { 0.0 } else { rng.random::<f64>() * step };
                Ok(Self {
                    nodes: (0..g).map(|i| Point::circle(i as f64 * step + off)).collect(),
                    weights: vec![step; g],
                    spacing: step,
                })
            }
            ManifoldKind::Torus2 => {
                let g = ((TAU / h).ceil() as usize).next_power_of_two();
                if g.saturating_mul(g) > NODE_CAP {
                    return Err(Error::QuadratureTooLarge { nodes: g.saturating_mul(g), cap: NODE_CAP });
                }
                let step = TAU / g as f64;
                let (ox, oy) = if seed == 0 {
                    (0.0, 0.0)
                } else {
                    (rng.random::<f64>() * step, rng.random::<f64>() * step)
                };
                let mut nodes = Vec::with_capacity(g * g);
                for i in 0..g {
                    for j in 0..g {
                        nodes.push(Point::torus(i as f64 * step + ox, j as f64 * step + oy));
                    }
                }
                Ok(Self { nodes, weights: vec![step * step; g * g], spacing: step })
            }
            ManifoldKind::Sphere2 => {
                let n_theta = (PI / h).ceil() as usize;
                let dt = PI / n_theta as f64;
                let estimate = (4.0 * PI / (h * dt)) as usize + n_theta;
                if estimate > NODE_CAP {
                    return Err(Error::QuadratureTooLarge { nodes: estimate, cap: NODE_CAP });
                }
                let rot = if seed == 0 { None } else { Some(random_rotation(&mut rng)) };
                let mut nodes = Vec::with_capacity(estimate);
                let mut weights = Vec::with_capacity(estimate);
                let mut spacing = dt;
                for i in 0..n_theta {
                    let t0 = i as f64 * dt;
                    let t1 = t0 + dt;
                    let theta = t0 + 0.5 * dt;
                    let n_phi = ((TAU * theta.sin() / h).ceil() as usize).max(1);
                    let area = TAU * (t0.cos() - t1.cos()) / n_phi as f64;
                    let dphi = TAU / n_phi as f64;
                    spacing = spacing.max(dphi * theta.sin());
                    for k in 0..n_phi {
                        let p = Point::sphere(theta, (k as f64 + 0.5) * dphi);
                        nodes.push(match (&rot, p) {
                            (Some(r), Point::Sphere(v)) => Point::sphere_from_vec(apply(r, &v)),
                            _ => p,
                        });
                        weights.push(area);
                    }
                }
                Ok(Self { nodes, weights, spacing })
            }
        }
    }

    pub(crate) fn len(&self) -> usize {
        self.nodes.len()
    }
}

fn random_rotation(rng: &mut ChaCha8Rng) -> [[f64; 3]; 3] {
    let mut q = [0.0f64; 4];
    for v in &mut q {
        *v = rng.sample(StandardNormal);
    }
    let n = q.iter().map(|v| v * v).sum::<f64>().sqrt();
    let [w, x, y, z] = q.map(|v| v / n);
    [
        [1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y)],
        [2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x)],
        [2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y)],
    ]
}

fn apply(r: &[[f64; 3]; 3], v: &[f64; 3]) -> [f64; 3] {
    [
        r[0][0] * v[0] + r[0][1] * v[1] + r[0][2] * v[2],
        r[1][0] * v[0] + r[1][1] * v[1] + r[1][2] * v[2],
        r[2][0] * v[0] + r[2][1] * v[1] + r[2][2] * v[2],
    ]
}
