//! Banded range index for fixed-radius neighbour queries.
//!
//! Points are bucketed into bands of one coordinate (nothing on the circle,
//! the second angle on the torus, colatitude on the sphere) and sorted by the
//! periodic coordinate inside each band, so a ball query touches only a few
//! contiguous runs.

use std::f64::consts::PI;

use crate::manifold::{angle_gap, sphere_distance, ManifoldKind, Point};

const TAU: f64 = 2.0 * PI;

pub(crate) struct SpatialIndex<'a> {
    kind: ManifoldKind,
    points: &'a [Point],
    band_h: f64,
    // Per band: (periodic key, point index), sorted by key.
    bands: Vec<Vec<(f64, u32)>>,
}

impl<'a> SpatialIndex<'a> {
    /// `band_h` should be comparable to the typical query radius.
    pub(crate) fn new(kind: ManifoldKind, points: &'a [Point], band_h: f64) -> Self {
        let (n_bands, band_h) = match kind {
            ManifoldKind::Circle => (1, TAU),
            ManifoldKind::Torus2 => {
                let n = ((TAU / band_h).floor() as usize).clamp(1, 1 << 16);
                (n, TAU / n as f64)
            }
            ManifoldKind::Sphere2 => {
                let n = ((PI / band_h).floor() as usize).clamp(1, 1 << 16);
                (n, PI / n as f64)
            }
        };
        let mut bands = vec![Vec::new(); n_bands];
        for (i, p) in points.iter().enumerate() {
            let (band, key) = match *p {
                Point::Circle(x) => (0, x),
                Point::Torus(x, y) => (((y / band_h) as usize).min(n_bands - 1), x),
                Point::Sphere(_) => {
                    let (theta, phi) = p.sphere_angles();
                    (((theta / band_h) as usize).min(n_bands - 1), phi)
                }
            };
            bands[band].push((key, i as u32));
        }
        for b in &mut bands {
            b.sort_by(|a, c| a.0.total_cmp(&c.0).then(a.1.cmp(&c.1)));
        }
        Self { kind, points, band_h, bands }
    }

    /// Calls `f(index, distance)` for every point with `distance <= r`.
    pub(crate) fn for_each_within(&self, q: &Point, r: f64, mut f: impl FnMut(usize, f64)) {
        match (self.kind, q) {
            (ManifoldKind::Circle, Point::Circle(x)) => {
                self.scan_band(0, *x, r, |i| {
                    if let Point::Circle(y) = self.points[i] {
                        let d = angle_gap(*x, y);
                        if d <= r {
                            f(i, d);
                        }
                    }
                });
            }
            (ManifoldKind::Torus2, Point::Torus(x, y)) => {
                let n = self.bands.len();
                let lo = ((y - r) / self.band_h).floor() as i64;
                let hi = ((y + r) / self.band_h).floor() as i64;
                let span = if hi - lo + 1 >= n as i64 { n as i64 } else { hi - lo + 1 };
                for s in 0..span {
                    let b = (lo + s).rem_euclid(n as i64) as usize;
                    self.scan_band(b, *x, r, |i| {
                        if let Point::Torus(a, c) = self.points[i] {
                            let d = angle_gap(*x, a).hypot(angle_gap(*y, c));
                            if d <= r {
                                f(i, d);
                            }
                        }
                    });
                }
            }
            (ManifoldKind::Sphere2, Point::Sphere(v)) => {
                let (theta, phi) = q.sphere_angles();
                let n = self.bands.len();
                let t_lo = theta - r;
                let t_hi = theta + r;
                let b_lo = (t_lo.max(0.0) / self.band_h).floor() as usize;
                let b_hi = ((t_hi.min(PI) / self.band_h).floor() as usize).min(n - 1);
                // Longitude half-width of the cap, unless it reaches a pole.
                let half = if r >= PI / 2.0 || t_lo <= 0.0 || t_hi >= PI {
                    PI
                } else {
                    let s = r.sin() / theta.sin();
                    if s >= 1.0 {
                        PI
                    } else {
                        s.asin() * (1.0 + 1e-9) + 1e-12
                    }
                };
                let cos_r = r.min(PI).cos();
                for b in b_lo..=b_hi {
                    self.scan_band(b, phi, half, |i| {
                        if let Point::Sphere(w) = &self.points[i] {
                            let dot = v[0] * w[0] + v[1] * w[1] + v[2] * w[2];
                            if dot >= cos_r - 1e-15 {
                                let d = sphere_distance(v, w);
                                if d <= r {
                                    f(i, d);
                                }
                            }
                        }
                    });
                }
            }
            _ => panic!("query point {q:?} does not match index of {}", self.kind),
        }
    }

    /// Visits entries of band `b` with periodic key in `[c - half, c + half]`.
    fn scan_band(&self, b: usize, c: f64, half: f64, mut f: impl FnMut(usize)) {
        let band = &self.bands[b];
        if band.is_empty() {
            return;
        }
        if half >= PI {
            for &(_, i) in band {
                f(i as usize);
            }
            return;
        }
        let lo = (c - half).rem_euclid(TAU);
        let hi = lo + 2.0 * half;
        let start = band.partition_point(|e| e.0 < lo);
        if hi < TAU {
            let end = band.partition_point(|e| e.0 <= hi);
            for &(_, i) in &band[start..end] {
                f(i as usize);
            }
        } else {
            for &(_, i) in &band[start..] {
                f(i as usize);
            }
            let end = band.partition_point(|e| e.0 <= hi - TAU);
            for &(_, i) in &band[..end] {
                f(i as usize);
            }
        }
    }
}
