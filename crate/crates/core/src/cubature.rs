//! Sampling matrices, Plancherel–Polya constants, Riemann sums over Voronoi
//! cells, and exact positive-weight cubature on `E_ω`.
//!
//! The cubature starts from the Voronoi measures `w` and adds the smallest
//! correction `z = A (AᵀA)⁻¹ (c - Aᵀw)` that makes the rule exact, where
//! `A[k][i] = u_i(x_k)` and `c_i = ∫ u_i`. When the lattice is fine relative
//! to `ω^{-1/2}` the correction is small and every weight stays positive.

use nalgebra::{Cholesky, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{build_lattice, Lattice};
use crate::manifold::{eigen_basis, make_manifold, reference_quadrature, ManifoldKind, ManifoldSpec, Point, SpectralBasis};
use crate::spectral::BandlimitedFunction;

/// Condition number of `AᵀA` above which the lattice is not a sampling set.
pub const CONDITION_LIMIT: f64 = 1e12;

/// Rows evaluated per streamed block.
const BLOCK: usize = 256;

/// `A[k][i] = u_i(x_k)`, lattice points by basis entries.
#[derive(Clone, Debug)]
pub struct SamplingMatrix {
    matrix: DMatrix<f64>,
}

pub fn sampling_matrix(basis: &SpectralBasis, lattice: &Lattice) -> Result<SamplingMatrix> {
    if basis.manifold().kind != lattice.manifold().kind {
        return Err(Error::ManifoldMismatch(format!("{} vs {}", basis.manifold().kind, lattice.manifold().kind)));
    }
    Ok(SamplingMatrix { matrix: assemble(basis, lattice.points()) })
}

fn assemble(basis: &SpectralBasis, points: &[Point]) -> DMatrix<f64> {
    let mut a = DMatrix::zeros(points.len(), basis.len());
    let mut row = vec![0.0; basis.len()];
    for (k, p) in points.iter().enumerate() {
        basis.eval_all(p, &mut row);
        for (i, v) in row.iter().enumerate() {
            a[(k, i)] = *v;
        }
    }
    a
}

impl SamplingMatrix {
    pub fn from_points(basis: &SpectralBasis, points: &[Point]) -> Self {
        SamplingMatrix { matrix: assemble(basis, points) }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn nrows(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn gram(&self) -> DMatrix<f64> {
        self.matrix.tr_mul(&self.matrix)
    }
}

/// Extreme singular values of `A` and the induced constants
/// `c₁ = ρ^{-n/2}/σ_max`, `c₂ = ρ^{-n/2}/σ_min`.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct PlancherelPolya {
    pub c1: f64,
    pub c2: f64,
    pub sigma_min: f64,
    pub sigma_max: f64,
}

impl PlancherelPolya {
    fn from_sigmas(sigma_min: f64, sigma_max: f64, rho: f64, n: usize) -> Self {
        let s = rho.powf(-(n as f64) / 2.0);
        PlancherelPolya { c1: s / sigma_max, c2: s / sigma_min, sigma_min, sigma_max }
    }
}

pub fn plancherel_polya_bounds(a: &SamplingMatrix, rho: f64, n: usize) -> Result<PlancherelPolya> {
    if a.matrix.iter().all(|v| *v == 0.0) {
        return Err(Error::InvalidParameter("zero sampling matrix".into()));
    }
    let (lmin, lmax) = extreme_eigenvalues(a.gram());
    if !(lmin > 0.0) || lmax / lmin > CONDITION_LIMIT {
        return Err(Error::NotSamplingSet { condition: if lmin > 0.0 { lmax / lmin } else { f64::INFINITY } });
    }
    Ok(PlancherelPolya::from_sigmas(lmin.sqrt(), lmax.sqrt(), rho, n))
}

fn extreme_eigenvalues(g: DMatrix<f64>) -> (f64, f64) {
    let ev = g.symmetric_eigenvalues();
    let lmin = ev.iter().cloned().fold(f64::INFINITY, f64::min);
    let lmax = ev.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    (lmin, lmax)
}

/// `|Σ_k μ_k f(x_k) - ∫ f|` with the integral taken by the reference quadrature.
pub fn riemann_error(f: &BandlimitedFunction, lattice: &Lattice) -> Result<f64> {
    if f.manifold().kind != lattice.manifold().kind {
        return Err(Error::ManifoldMismatch(format!("{} vs {}", f.manifold().kind, lattice.manifold().kind)));
    }
    let q = reference_quadrature(f.manifold(), f.omega())?;
    let exact = q.integrate(|x| f.evaluate(x));
    let sum: f64 = f.evaluate_many(lattice.points()).iter().zip(lattice.measures()).map(|(v, mu)| v * mu).sum();
    Ok((sum - exact).abs())
}

/// Diagnostics recorded while building a cubature.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct CubatureStats {
    /// `‖Aᵀλ - c‖_∞`.
    pub exactness_residual: f64,
    /// Condition number of `AᵀA`.
    pub condition: f64,
    pub sigma_min: f64,
    pub sigma_max: f64,
    /// `‖z‖₂ = ‖λ - w‖₂`.
    pub z_norm: f64,
    /// `‖w‖₂`.
    pub w_norm: f64,
    /// `min λ_k / ρⁿ`, `max λ_k / ρⁿ`.
    pub weight_ratio_min: f64,
    pub weight_ratio_max: f64,
    pub median_weight: f64,
}

/// Positive weights on a lattice integrating `E_ω` exactly.
#[derive(Clone, Debug)]
pub struct Cubature {
    lattice: Lattice,
    omega: f64,
    weights: Vec<f64>,
    a0: f64,
    stats: CubatureStats,
}

/// JSON record `{manifold, omega, rho, a0, points, weights}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CubatureRecord {
    pub manifold: ManifoldKind,
    pub omega: f64,
    pub rho: f64,
    pub a0: f64,
    pub points: Vec<Point>,
    pub weights: Vec<f64>,
}

impl Cubature {
    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn rho(&self) -> f64 {
        self.lattice.rho()
    }

    pub fn a0(&self) -> f64 {
        self.a0
    }

    pub fn points(&self) -> &[Point] {
        self.lattice.points()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn stats(&self) -> &CubatureStats {
        &self.stats
    }

    pub fn plancherel_polya(&self) -> PlancherelPolya {
        PlancherelPolya::from_sigmas(self.stats.sigma_min, self.stats.sigma_max, self.rho(), self.lattice.manifold().n)
    }

    /// `min λ_k >= 0.1 · median λ_k`.
    pub fn margin_ok(&self) -> bool {
        self.weights.iter().cloned().fold(f64::INFINITY, f64::min) >= 0.1 * self.stats.median_weight
    }

    /// `Σ_k λ_k s_k`.
    pub fn integrate(&self, samples: &[f64]) -> Result<f64> {
        if samples.len() != self.weights.len() {
            return Err(Error::LengthMismatch { expected: self.weights.len(), got: samples.len() });
        }
        Ok(self.weights.iter().zip(samples).map(|(w, s)| w * s).sum())
    }

    pub fn to_record(&self) -> CubatureRecord {
        CubatureRecord {
            manifold: self.lattice.manifold().kind,
            omega: self.omega,
            rho: self.rho(),
            a0: self.a0,
            points: self.points().to_vec(),
            weights: self.weights.clone(),
        }
    }
}

/// Per-manifold size of `∫ u_i`: only the constant has a nonzero integral.
fn moments(m: &ManifoldSpec, len: usize) -> Vec<f64> {
    let mut c = vec![0.0; len];
    c[0] = m.volume.sqrt();
    c
}

/// Streams `A` in row blocks, accumulating `AᵀA` and `Aᵀv`.
fn normal_equations(basis: &SpectralBasis, points: &[Point], v: &[f64]) -> (DMatrix<f64>, Vec<f64>) {
    let mc = basis.len();
    // Row-major accumulator; symmetric, so it is also column-major.
    let mut gram = vec![0.0; mc * mc];
    let mut atv = vec![0.0; mc];
    let mut block = vec![0.0; BLOCK * mc];
    for (chunk_pts, chunk_v) in points.chunks(BLOCK).zip(v.chunks(BLOCK)) {
        let rows = chunk_pts.len();
        for (r, p) in chunk_pts.iter().enumerate() {
            basis.eval_all(p, &mut block[r * mc..(r + 1) * mc]);
        }
        // SAFETY: slices hold rows×mc and mc×mc elements with the strides given.
        unsafe {
            matrixmultiply::dgemm(
                mc, rows, mc, 1.0,
                block.as_ptr(), 1, mc as isize,
                block.as_ptr(), mc as isize, 1,
                1.0,
                gram.as_mut_ptr(), mc as isize, 1,
            );
        }
        for (r, vr) in chunk_v.iter().enumerate() {
            let row = &block[r * mc..(r + 1) * mc];
            for (a, u) in atv.iter_mut().zip(row) {
                *a += vr * u;
            }
        }
    }
    (DMatrix::from_vec(mc, mc, gram), atv)
}

/// `w + A y`, and `Aᵀ(w + A y)`.
fn apply_correction(basis: &SpectralBasis, points: &[Point], w: &[f64], y: &DVector<f64>) -> (Vec<f64>, Vec<f64>) {
    let mc = basis.len();
    let mut row = vec![0.0; mc];
    let mut lambda = Vec::with_capacity(points.len());
    let mut at_lambda = vec![0.0; mc];
    for (p, wk) in points.iter().zip(w) {
        basis.eval_all(p, &mut row);
        let z: f64 = row.iter().zip(y.iter()).map(|(a, b)| a * b).sum();
        let l = wk + z;
        for (a, u) in at_lambda.iter_mut().zip(&row) {
            *a += l * u;
        }
        lambda.push(l);
    }
    (lambda, at_lambda)
}

/// Exact positive cubature on `E_ω` over `lattice`.
pub fn build_cubature(m: &ManifoldSpec, omega: f64, lattice: &Lattice) -> Result<Cubature> {
    if m.kind != lattice.manifold().kind {
        return Err(Error::ManifoldMismatch(format!("{} vs {}", m.kind, lattice.manifold().kind)));
    }
    let basis = eigen_basis(m, omega)?;
    let points = lattice.points();
    let w = lattice.measures();
    let c = moments(m, basis.len());

    let (gram, atw) = normal_equations(&basis, points, w);
    let (lmin, lmax) = extreme_eigenvalues(gram.clone());
    let condition = if lmin > 0.0 { lmax / lmin } else { f64::INFINITY };
    if !(condition <= CONDITION_LIMIT) {
        return Err(Error::NotSamplingSet { condition });
    }
    let chol = Cholesky::new(gram).ok_or(Error::NotSamplingSet { condition })?;
    let rhs = DVector::from_iterator(c.len(), c.iter().zip(&atw).map(|(ci, ai)| ci - ai));
    let mut y = chol.solve(&rhs);
    let (mut lambda, mut at_lambda) = apply_correction(&basis, points, w, &y);
    let residual = |at: &[f64]| at.iter().zip(&c).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    if residual(&at_lambda) > 1e-12 {
        // One step of iterative refinement.
        let r = DVector::from_iterator(c.len(), c.iter().zip(&at_lambda).map(|(ci, ai)| ci - ai));
        y += chol.solve(&r);
        (lambda, at_lambda) = apply_correction(&basis, points, w, &y);
    }
    let exactness_residual = residual(&at_lambda);

    let min_weight = lambda.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(min_weight > 0.0) {
        return Err(Error::RhoTooLarge { min_weight });
    }
    let rn = lattice.rho().powi(m.n as i32);
    let mut sorted = lambda.clone();
    sorted.sort_by(f64::total_cmp);
    let median_weight = sorted[sorted.len() / 2];
    let stats = CubatureStats {
        exactness_residual,
        condition,
        sigma_min: lmin.sqrt(),
        sigma_max: lmax.sqrt(),
        z_norm: lambda.iter().zip(w).map(|(l, w)| (l - w) * (l - w)).sum::<f64>().sqrt(),
        w_norm: w.iter().map(|v| v * v).sum::<f64>().sqrt(),
        weight_ratio_min: min_weight / rn,
        weight_ratio_max: sorted[sorted.len() - 1] / rn,
        median_weight,
    };
    Ok(Cubature { lattice: lattice.clone(), omega, weights: lambda, a0: lattice.rho() * (omega + 1.0).sqrt(), stats })
}

/// Lattice radius search: `ρ = ρ_start · 0.8^t` from `ρ_start = (ω+1)^{-1/2}`
/// until the cubature exists with `min λ >= 0.1 · median λ`.
pub fn auto_cubature(m: &ManifoldSpec, omega: f64, seed: u64) -> Result<Cubature> {
    if !(omega > 0.0) {
        return Err(Error::InvalidParameter(format!("omega = {omega} must be positive")));
    }
    let rho_start = (omega + 1.0).powf(-0.5);
    let mut rho = rho_start;
    while rho >= 1e-3 * rho_start {
        if rho < m.rho_cap() {
            let lattice = build_lattice(m, rho, seed)?;
            match build_cubature(m, omega, &lattice) {
                Ok(c) if c.margin_ok() => return Ok(c),
                Ok(_) | Err(Error::NotSamplingSet { .. }) | Err(Error::RhoTooLarge { .. }) => {}
                Err(e) => return Err(e),
            }
        }
        rho *= 0.8;
    }
    Err(Error::SearchExhausted { rho })
}

/// Cubature at the radius `ρ = a₀ (ω+1)^{-1/2}`.
pub fn cubature_with_a0(m: &ManifoldSpec, omega: f64, a0: f64, seed: u64) -> Result<Cubature> {
    let rho = a0 * (omega + 1.0).powf(-0.5);
    let lattice = build_lattice(m, rho, seed)?;
    build_cubature(m, omega, &lattice)
}

/// Returns `(ρ, a₀)` with `a₀ = ρ √(ω+1)`.
pub fn auto_rho(m: &ManifoldSpec, omega: f64) -> Result<(f64, f64)> {
    let c = auto_cubature(m, omega, 0)?;
    Ok((c.rho(), c.a0()))
}

/// `‖Aᵀλ - c‖_∞` for arbitrary points and weights, streamed point by point.
pub fn exactness_residual(m: &ManifoldSpec, omega: f64, points: &[Point], weights: &[f64]) -> Result<f64> {
    if points.len() != weights.len() {
        return Err(Error::LengthMismatch { expected: points.len(), got: weights.len() });
    }
    let basis = eigen_basis(m, omega)?;
    let mut row = vec![0.0; basis.len()];
    let mut acc = vec![0.0; basis.len()];
    for (p, w) in points.iter().zip(weights) {
        m.check_point(p)?;
        basis.eval_all(p, &mut row);
        for (a, u) in acc.iter_mut().zip(&row) {
            *a += w * u;
        }
    }
    let c = moments(m, basis.len());
    Ok(acc.iter().zip(&c).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
}

/// Restores a cubature from its record, re-deriving diagnostics.
pub fn cubature_from_record(rec: &CubatureRecord) -> Result<Cubature> {
    let m = make_manifold(rec.manifold);
    let lattice = Lattice::from_points(&m, rec.rho, 0, rec.points.clone())?;
    let exactness_residual = exactness_residual(&m, rec.omega, &rec.points, &rec.weights)?;
    let basis = eigen_basis(&m, rec.omega)?;
    let a = SamplingMatrix::from_points(&basis, &rec.points);
    let (lmin, lmax) = extreme_eigenvalues(a.gram());
    let rn = rec.rho.powi(m.n as i32);
    let mut sorted = rec.weights.clone();
    sorted.sort_by(f64::total_cmp);
    let stats = CubatureStats {
        exactness_residual,
        condition: lmax / lmin,
        sigma_min: lmin.max(0.0).sqrt(),
        sigma_max: lmax.sqrt(),
        z_norm: f64::NAN,
        w_norm: f64::NAN,
        weight_ratio_min: sorted[0] / rn,
        weight_ratio_max: sorted[sorted.len() - 1] / rn,
        median_weight: sorted[sorted.len() / 2],
    };
    Ok(Cubature { lattice, omega: rec.omega, weights: rec.weights.clone(), a0: rec.a0, stats })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::ManifoldKind;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;
    use std::sync::Arc;

    fn equispaced(n: usize) -> Vec<Point> {
        (0..n).map(|k| Point::circle(2.0 * PI * k as f64 / n as f64)).collect()
    }

    #[test]
    fn sampling_matrix_shape_and_first_column() {
        let s = make_manifold(ManifoldKind::Sphere2);
        let lat = build_lattice(&s, 0.6, 0).unwrap();
        let b = eigen_basis(&s, 6.0).unwrap();
        let a = sampling_matrix(&b, &lat).unwrap();
        assert_eq!(a.nrows(), lat.len());
        assert_eq!(a.ncols(), crate::manifold::weyl_count(&s, 6.0));
        for k in 0..a.nrows() {
            assert_abs_diff_eq!(a.matrix()[(k, 0)], (4.0 * PI).powf(-0.5), epsilon = 1e-15);
        }
    }

    #[test]
    fn circle_gram_is_scaled_identity() {
        let c = make_manifold(ManifoldKind::Circle);
        let lat = Lattice::from_points(&c, 2.0 * PI / 16.0, 0, equispaced(16)).unwrap();
        let b = eigen_basis(&c, 4.0).unwrap();
        let a = sampling_matrix(&b, &lat).unwrap();
        let g = a.gram();
        for i in 0..b.len() {
            for j in 0..b.len() {
                let want = if i == j { 16.0 / (2.0 * PI) } else { 0.0 };
                assert_abs_diff_eq!(g[(i, j)], want, epsilon = 1e-13);
            }
        }
        let pp = plancherel_polya_bounds(&a, lat.rho(), 1).unwrap();
        assert_abs_diff_eq!(pp.sigma_min, pp.sigma_max, epsilon = 1e-12);
        assert_abs_diff_eq!(pp.c1, pp.c2, epsilon = 1e-10);
    }

    #[test]
    fn duplicate_row_keeps_sampling_set() {
        let s = make_manifold(ManifoldKind::Sphere2);
        let lat = build_lattice(&s, 0.5, 0).unwrap();
        let b = eigen_basis(&s, 12.0).unwrap();
        let before = plancherel_polya_bounds(&sampling_matrix(&b, &lat).unwrap(), 0.5, 2).unwrap();
        let mut pts = lat.points().to_vec();
        pts.push(pts[0]);
        let after = plancherel_polya_bounds(&SamplingMatrix::from_points(&b, &pts), 0.5, 2).unwrap();
        assert!(after.sigma_min >= before.sigma_min - 1e-12);
        assert!(after.c2.is_finite() && after.c1 > 0.0);
    }

    #[test]
    fn riemann_error_vanishes_on_constants() {
        for (kind, rho) in [(ManifoldKind::Circle, 0.2), (ManifoldKind::Torus2, 0.5), (ManifoldKind::Sphere2, 0.4)] {
            let m = make_manifold(kind);
            let lat = build_lattice(&m, rho, 1).unwrap();
            let f = BandlimitedFunction::constant(Arc::new(eigen_basis(&m, 4.0).unwrap()), 3.0);
            assert!(riemann_error(&f, &lat).unwrap() < 1e-12 * m.volume * 3.0);
        }
    }

    #[test]
    fn equispaced_circle_needs_no_correction() {
        let c = make_manifold(ManifoldKind::Circle);
        for l in [2usize, 5, 9] {
            let n = 2 * l + 2;
            let lat = Lattice::from_points(&c, 2.0 * PI / n as f64, 0, equispaced(n)).unwrap();
            let cub = build_cubature(&c, (l * l) as f64, &lat).unwrap();
            for w in cub.weights() {
                assert_abs_diff_eq!(*w, 2.0 * PI / n as f64, epsilon = 1e-13);
            }
            assert!(cub.stats().z_norm < 1e-13);
        }
    }

    #[test]
    fn integrate_is_exact_on_band() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for (kind, omega) in [(ManifoldKind::Circle, 36.0), (ManifoldKind::Torus2, 20.0), (ManifoldKind::Sphere2, 12.0)] {
            let m = make_manifold(kind);
            let cub = auto_cubature(&m, omega, 0).unwrap();
            assert!(cub.stats().exactness_residual <= 1e-9);
            assert!(cub.weights().iter().all(|w| *w > 0.0));
            let basis = Arc::new(eigen_basis(&m, omega).unwrap());
            let one = vec![1.0; cub.points().len()];
            assert_abs_diff_eq!(cub.integrate(&one).unwrap(), m.volume, epsilon = 1e-9);
            for i in 1..basis.len() {
                let u = BandlimitedFunction::unit(basis.clone(), i).unwrap();
                assert!(cub.integrate(&u.evaluate_many(cub.points())).unwrap().abs() < 1e-9);
            }
            let f = BandlimitedFunction::random(basis, &mut rng);
            let q = reference_quadrature(&m, omega).unwrap();
            let oracle = q.integrate(|x| f.evaluate(x));
            assert_abs_diff_eq!(cub.integrate(&f.evaluate_many(cub.points())).unwrap(), oracle, epsilon = 1e-9);
            assert!(cub.integrate(&[1.0]).is_err());
        }
    }

    #[test]
    fn circle_auto_rho() {
        let c = make_manifold(ManifoldKind::Circle);
        let (rho, a0) = auto_rho(&c, 16.0).unwrap();
        assert!((0.5..=1.0).contains(&a0), "a0 = {a0}");
        assert_abs_diff_eq!(rho * 17f64.sqrt(), a0, epsilon = 1e-14);
    }

    #[test]
    fn oversized_rho_is_rejected() {
        let s = make_manifold(ManifoldKind::Sphere2);
        let lat = build_lattice(&s, 1.5, 0).unwrap();
        let err = build_cubature(&s, 110.0, &lat).unwrap_err();
        assert!(matches!(err, Error::NotSamplingSet { .. } | Error::RhoTooLarge { .. }), "{err}");
    }

    #[test]
    fn record_round_trip() {
        let s = make_manifold(ManifoldKind::Sphere2);
        let cub = auto_cubature(&s, 6.0, 0).unwrap();
        let rec = cub.to_record();
        let back = cubature_from_record(&serde_json::from_str(&serde_json::to_string(&rec).unwrap()).unwrap()).unwrap();
        assert_eq!(back.weights(), cub.weights());
        assert!(back.stats().exactness_residual < 1e-9);
    }
}
