//! Metric ρ-lattices and their Voronoi partitions.
//!
//! A lattice is a ρ/2-separated set whose ρ/2-balls cover the manifold. It is
//! built by greedy farthest-point selection over a dense weighted grid; the
//! same grid assigns every node to its nearest lattice point, which yields the
//! cell measures `μ(M_k)`.

mod grid;
mod heap;
mod index;

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::manifold::{make_manifold, weyl_count, ManifoldKind, ManifoldSpec, Point};

pub(crate) use grid::DenseGrid;
use heap::IndexedMaxHeap;
pub(crate) use index::SpatialIndex;

/// Relative slack on the ρ/2 separation and covering tests.
pub const SLACK: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct Lattice {
    manifold: ManifoldSpec,
    rho: f64,
    seed: u64,
    points: Vec<Point>,
    measures: Vec<f64>,
}

/// JSON record `{manifold, rho, seed, points, measures}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeRecord {
    pub manifold: ManifoldKind,
    pub rho: f64,
    pub seed: u64,
    pub points: Vec<Point>,
    pub measures: Vec<f64>,
}

impl Lattice {
    /// Wraps an arbitrary point set, computing its Voronoi measures.
    pub fn from_points(m: &ManifoldSpec, rho: f64, seed: u64, points: Vec<Point>) -> Result<Self> {
        if !(rho > 0.0) {
            return Err(Error::InvalidParameter(format!("rho = {rho} must be positive")));
        }
        if points.is_empty() {
            return Err(Error::InvalidParameter("empty lattice".into()));
        }
        for p in &points {
            m.check_point(p)?;
        }
        let grid = DenseGrid::for_rho(m, rho, seed)?;
        let measures = voronoi_on(m, &grid, &points, rho)?.measures;
        Ok(Self { manifold: *m, rho, seed, points, measures })
    }

    pub fn manifold(&self) -> &ManifoldSpec {
        &self.manifold
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn measures(&self) -> &[f64] {
        &self.measures
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn to_record(&self) -> LatticeRecord {
        LatticeRecord {
            manifold: self.manifold.kind,
            rho: self.rho,
            seed: self.seed,
            points: self.points.clone(),
            measures: self.measures.clone(),
        }
    }

    /// Restores a lattice from its record; measures are taken as stored.
    pub fn from_record(rec: &LatticeRecord) -> Result<Self> {
        let m = make_manifold(rec.manifold);
        if rec.points.len() != rec.measures.len() {
            return Err(Error::LengthMismatch { expected: rec.points.len(), got: rec.measures.len() });
        }
        for p in &rec.points {
            m.check_point(p)?;
        }
        Ok(Self { manifold: m, rho: rec.rho, seed: rec.seed, points: rec.points.clone(), measures: rec.measures.clone() })
    }
}

/// Greedy farthest-point ρ-lattice.
///
/// The seed picks the starting grid node and a rigid motion of the candidate
/// grid; seed 0 starts at node 0 of the unmoved grid. Selection stops once
/// every grid node lies within ρ/2 of the lattice.
pub fn build_lattice(m: &ManifoldSpec, rho: f64, seed: u64) -> Result<Lattice> {
    let cap = m.rho_cap();
    if !(rho > 0.0 && rho < cap) {
        return Err(Error::RhoOutOfRange { rho, max: cap });
    }
    let grid = DenseGrid::for_rho(m, rho, seed)?;
    let index = SpatialIndex::new(m.kind, &grid.nodes, rho);
    let n = grid.len();
    let start = if seed == 0 { 0 } else { ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15).random_range(0..n) };

    let mut dist = vec![f64::INFINITY; n];
    for (i, p) in grid.nodes.iter().enumerate() {
        dist[i] = m.distance(&grid.nodes[start], p);
    }
    let mut selected = vec![start];
    let mut heap = IndexedMaxHeap::new(dist);
    let stop = 0.5 * rho * (1.0 + SLACK);
    while let Some((top, dmax)) = heap.peek() {
        if dmax <= stop {
            break;
        }
        selected.push(top);
        let centre = grid.nodes[top];
        index.for_each_within(&centre, dmax, |i, d| {
            if d < heap.key(i) {
                heap.decrease(i, d);
            }
        });
    }
    let points: Vec<Point> = selected.iter().map(|&i| grid.nodes[i]).collect();
    let measures = voronoi_on(m, &grid, &points, rho)?.measures;
    Ok(Lattice { manifold: *m, rho, seed, points, measures })
}

struct VoronoiPass {
    measures: Vec<f64>,
    covering_radius: f64,
}

fn voronoi_on(m: &ManifoldSpec, grid: &DenseGrid, points: &[Point], rho: f64) -> Result<VoronoiPass> {
    if grid.spacing >= rho / 8.0 {
        return Err(Error::GridTooCoarse { spacing: grid.spacing, rho });
    }
    let n = grid.len();
    let index = SpatialIndex::new(m.kind, &grid.nodes, rho);
    let mut best = vec![f64::INFINITY; n];
    let mut owner = vec![u32::MAX; n];
    let mut radius = 0.5 * rho * (1.0 + 1e-9) + grid.spacing;
    loop {
        for (k, p) in points.iter().enumerate() {
            index.for_each_within(p, radius, |i, d| {
                // Strict comparison keeps the lowest index on ties.
                if d < best[i] {
                    best[i] = d;
                    owner[i] = k as u32;
                }
            });
        }
        if owner.iter().all(|&o| o != u32::MAX) || radius > m.diameter() {
            break;
        }
        radius *= 2.0;
    }
    let covering_radius = best.iter().cloned().fold(0.0, f64::max);
    let measures = if m.kind == ManifoldKind::Circle {
        circle_arc_measures(points)
    } else {
        let mut mu = vec![0.0; points.len()];
        for (o, w) in owner.iter().zip(&grid.weights) {
            mu[*o as usize] += w;
        }
        mu
    };
    Ok(VoronoiPass { measures, covering_radius })
}

/// Exact Voronoi arcs on the circle; coincident points hand their cell to the
/// lowest index.
fn circle_arc_measures(points: &[Point]) -> Vec<f64> {
    let n = points.len();
    let angle = |i: usize| match points[i] {
        Point::Circle(x) => x,
        _ => unreachable!(),
    };
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| angle(a).total_cmp(&angle(b)).then(a.cmp(&b)));
    // Groups of coincident angles.
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for &i in &order {
        match groups.last_mut() {
            Some(g) if angle(i) - angle(g[0]) <= 1e-15 => g.push(i),
            _ => groups.push(vec![i]),
        }
    }
    let g = groups.len();
    let mut mu = vec![0.0; n];
    if g == 1 {
        mu[*groups[0].iter().min().unwrap()] = 2.0 * PI;
        return mu;
    }
    for (gi, group) in groups.iter().enumerate() {
        let prev = &groups[(gi + g - 1) % g];
        let next = &groups[(gi + 1) % g];
        let a = angle(group[0]);
        let gap_prev = (a - angle(prev[0])).rem_euclid(2.0 * PI);
        let gap_next = (angle(next[0]) - a).rem_euclid(2.0 * PI);
        mu[*group.iter().min().unwrap()] = 0.5 * (gap_prev + gap_next);
    }
    mu
}

/// Voronoi cell measures of `lattice` recomputed on its dense grid.
pub fn voronoi_measures(m: &ManifoldSpec, lattice: &Lattice) -> Result<Vec<f64>> {
    let grid = DenseGrid::for_rho(m, lattice.rho, lattice.seed)?;
    Ok(voronoi_on(m, &grid, &lattice.points, lattice.rho)?.measures)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LatticeReport {
    pub cardinality: usize,
    pub rho: f64,
    /// `None` for a single point.
    pub min_separation: Option<f64>,
    pub covering_radius: f64,
    /// Largest number of closed ρ-balls containing a grid node.
    pub multiplicity: usize,
    pub measure_sum: f64,
    /// `min_k μ_k / ρⁿ` and `max_k μ_k / ρⁿ`.
    pub measure_ratio_min: f64,
    pub measure_ratio_max: f64,
    pub separation_ok: bool,
    pub covering_ok: bool,
    pub measures_ok: bool,
    pub pass: bool,
}

pub fn validate_lattice(m: &ManifoldSpec, lattice: &Lattice) -> Result<LatticeReport> {
    let rho = lattice.rho;
    let points = &lattice.points;
    let grid = DenseGrid::for_rho(m, rho, lattice.seed)?;
    let pass_v = voronoi_on(m, &grid, points, rho)?;

    let min_separation = min_pair_distance(m, points, rho);

    let index = SpatialIndex::new(m.kind, &grid.nodes, rho);
    let mut count = vec![0u32; grid.len()];
    for p in points {
        index.for_each_within(p, rho * (1.0 + 1e-9), |i, _| count[i] += 1);
    }
    let multiplicity = count.iter().cloned().max().unwrap_or(0) as usize;

    let measure_sum: f64 = lattice.measures.iter().sum();
    let rn = rho.powi(m.n as i32);
    let measure_ratio_min = lattice.measures.iter().cloned().fold(f64::INFINITY, f64::min) / rn;
    let measure_ratio_max = lattice.measures.iter().cloned().fold(0.0, f64::max) / rn;

    let separation_ok = min_separation.is_none_or(|s| s >= 0.5 * rho * (1.0 - SLACK));
    let covering_ok = pass_v.covering_radius <= 0.5 * rho * (1.0 + SLACK);
    let measures_ok = (measure_sum - m.volume).abs() <= 1e-10 * m.volume.max(1.0);
    Ok(LatticeReport {
        cardinality: points.len(),
        rho,
        min_separation,
        covering_radius: pass_v.covering_radius,
        multiplicity,
        measure_sum,
        measure_ratio_min,
        measure_ratio_max,
        separation_ok,
        covering_ok,
        measures_ok,
        pass: separation_ok && covering_ok && measures_ok,
    })
}

fn min_pair_distance(m: &ManifoldSpec, points: &[Point], rho: f64) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let index = SpatialIndex::new(m.kind, points, rho);
    let mut r = rho;
    loop {
        let mut best = f64::INFINITY;
        for (k, p) in points.iter().enumerate() {
            index.for_each_within(p, r, |i, d| {
                if i != k && d < best {
                    best = d;
                }
            });
        }
        if best.is_finite() {
            return Some(best);
        }
        r *= 2.0;
    }
}

/// Lattice size at the bandwidth-adapted radius `ρ = a₀ (ω+1)^{-1/2}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CardinalityReport {
    pub omega: f64,
    pub rho: f64,
    pub a0: f64,
    pub count: usize,
    /// `count / ω^{n/2}`.
    pub ratio: f64,
    /// `weyl_count(ω) / ω^{n/2}`.
    pub weyl_ratio: f64,
}

pub fn cardinality_bounds(m: &ManifoldSpec, omega: f64) -> Result<CardinalityReport> {
    if !(omega > 0.0) {
        return Err(Error::InvalidParameter(format!("omega = {omega} must be positive")));
    }
    let cub = crate::cubature::auto_cubature(m, omega, 0)?;
    let scale = omega.powf(m.n as f64 / 2.0);
    Ok(CardinalityReport {
        omega,
        rho: cub.rho(),
        a0: cub.a0(),
        count: cub.lattice().len(),
        ratio: cub.lattice().len() as f64 / scale,
        weyl_ratio: weyl_count(m, omega) as f64 / scale,
    })
}
