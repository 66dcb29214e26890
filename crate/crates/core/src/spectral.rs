//! Band-limited functions stored as coefficient vectors over the canonical
//! eigenbasis.

use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::manifold::{
    eigen_basis, quadrature_for_degree, reference_quadrature, ManifoldKind, ManifoldSpec, Point, Quadrature,
    SpectralBasis,
};

/// `f = Σ_m c_m u_m` with all `λ_m <= ω`.
#[derive(Clone, Debug)]
pub struct BandlimitedFunction {
    basis: Arc<SpectralBasis>,
    coeffs: Vec<f64>,
}

/// Result of [`BandlimitedFunction::multiply`].
#[derive(Clone, Debug)]
pub struct Product {
    pub function: BandlimitedFunction,
    /// L² norm of the part of `fg` not captured by the projection.
    pub residual_l2: f64,
}

/// JSON record `{manifold, omega, coeffs}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionRecord {
    pub manifold: ManifoldKind,
    pub omega: f64,
    pub coeffs: Vec<f64>,
}

impl BandlimitedFunction {
    pub fn new(basis: Arc<SpectralBasis>, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != basis.len() {
            return Err(Error::LengthMismatch { expected: basis.len(), got: coeffs.len() });
        }
        Ok(Self { basis, coeffs })
    }

    pub fn zeros(basis: Arc<SpectralBasis>) -> Self {
        let n = basis.len();
        Self { basis, coeffs: vec![0.0; n] }
    }

    /// The basis function `u_m`.
    pub fn unit(basis: Arc<SpectralBasis>, m: usize) -> Result<Self> {
        if m >= basis.len() {
            return Err(Error::IndexOutOfRange { index: m, len: basis.len() });
        }
        let mut f = Self::zeros(basis);
        f.coeffs[m] = 1.0;
        Ok(f)
    }

    /// The constant function with value `c`.
    pub fn constant(basis: Arc<SpectralBasis>, c: f64) -> Self {
        let vol = basis.manifold().volume;
        let mut f = Self::zeros(basis);
        f.coeffs[0] = c * vol.sqrt();
        f
    }

    /// Gaussian random coefficients.
    pub fn random<R: Rng + ?Sized>(basis: Arc<SpectralBasis>, rng: &mut R) -> Self {
        let coeffs = (0..basis.len()).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        Self { basis, coeffs }
    }

    pub fn basis(&self) -> &Arc<SpectralBasis> {
        &self.basis
    }

    pub fn manifold(&self) -> &ManifoldSpec {
        self.basis.manifold()
    }

    pub fn omega(&self) -> f64 {
        self.basis.omega()
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    /// Largest eigenvalue carrying a nonzero coefficient.
    pub fn spectral_support(&self) -> f64 {
        self.coeffs
            .iter()
            .rposition(|c| *c != 0.0)
            .map_or(0.0, |i| self.basis.eigenvalue(i))
    }

    pub fn evaluate(&self, x: &Point) -> f64 {
        let row = self.basis.eval_all_vec(x);
        dot(&row, &self.coeffs)
    }

    pub fn evaluate_many(&self, xs: &[Point]) -> Vec<f64> {
        let mut row = vec![0.0; self.basis.len()];
        xs.iter()
            .map(|x| {
                self.basis.eval_all(x, &mut row);
                dot(&row, &self.coeffs)
            })
            .collect()
    }

    /// Mean value `(1/μ(M)) ∫ f`.
    pub fn mean(&self) -> f64 {
        self.coeffs[0] / self.manifold().volume.sqrt()
    }

    /// `∫ f` from the constant coefficient.
    pub fn integral(&self) -> f64 {
        self.coeffs[0] * self.manifold().volume.sqrt()
    }

    /// `(I - P) f`.
    pub fn zero_mean(&self) -> Self {
        let mut g = self.clone();
        g.coeffs[0] = 0.0;
        g
    }

    pub fn scale(&self, c: f64) -> Self {
        Self { basis: self.basis.clone(), coeffs: self.coeffs.iter().map(|v| c * v).collect() }
    }

    /// `self + other`, both expressed in the larger of the two bases.
    pub fn add(&self, other: &Self) -> Result<Self> {
        let (big, small) = if self.basis.len() >= other.basis.len() { (self, other) } else { (other, self) };
        let mut out = small.embed(big.basis.clone())?;
        for (o, v) in out.coeffs.iter_mut().zip(&big.coeffs) {
            *o += v;
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(-1.0))
    }

    /// Re-expresses `f` in a basis whose enumeration extends this one.
    pub fn embed(&self, target: Arc<SpectralBasis>) -> Result<Self> {
        if target.manifold().kind != self.manifold().kind {
            return Err(Error::ManifoldMismatch(format!("{} vs {}", target.manifold().kind, self.manifold().kind)));
        }
        if target.len() < self.basis.len() {
            // Allowed only if the dropped tail is zero.
            if self.coeffs[target.len()..].iter().any(|c| *c != 0.0) {
                return Err(Error::ShapeMismatch(format!(
                    "cannot embed {} coefficients into a basis of {}",
                    self.basis.len(),
                    target.len()
                )));
            }
            let coeffs = self.coeffs[..target.len()].to_vec();
            return Ok(Self { basis: target, coeffs });
        }
        let mut coeffs = self.coeffs.clone();
        coeffs.resize(target.len(), 0.0);
        Ok(Self { basis: target, coeffs })
    }

    /// Applies a spectral multiplier `c_m <- h(λ_m) c_m`.
    pub fn apply_multiplier(&self, h: impl Fn(f64) -> f64) -> Self {
        let coeffs = self.coeffs.iter().zip(self.basis.eigenvalues()).map(|(c, l)| h(l) * c).collect();
        Self { basis: self.basis.clone(), coeffs }
    }

    /// `L^k f`.
    pub fn apply_l_power(&self, k: u32) -> Self {
        if k == 0 {
            return self.clone();
        }
        self.apply_multiplier(|l| l.powi(k as i32))
    }

    /// L² norm from the coefficients (Parseval of the orthonormal basis).
    pub fn l2_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    /// L² norm from the reference quadrature.
    pub fn l2_norm_quadrature(&self) -> Result<f64> {
        let q = reference_quadrature(self.manifold(), self.omega())?;
        Ok(self.evaluate_many(&q.nodes).iter().zip(&q.weights).map(|(v, w)| w * v * v).sum::<f64>().sqrt())
    }

    /// `‖f‖_p` for `p >= 1` or `p = ∞`.
    ///
    /// For even integer `p` the quadrature is exact; other finite `p` are
    /// approximate (oversampled quadrature of `|f|^p`). `p = ∞` refines a grid
    /// by doubling until two maxima agree to 1e-6.
    pub fn lp_norm(&self, p: f64) -> Result<f64> {
        if p.is_nan() || p < 1.0 {
            return Err(Error::InvalidParameter(format!("p = {p} must be >= 1")));
        }
        if p.is_infinite() {
            return Ok(self.sup_norm());
        }
        let degree = self.basis.degree();
        let pc = p.ceil() as usize;
        let even = p.fract() == 0.0 && pc % 2 == 0;
        let q = if even {
            quadrature_for_degree(self.manifold(), pc * degree)?
        } else {
            quadrature_for_degree(self.manifold(), 4 * pc * degree.max(1))?
        };
        Ok(self.lp_norm_on(&q, p))
    }

    fn lp_norm_on(&self, q: &Quadrature, p: f64) -> f64 {
        let vals = self.evaluate_many(&q.nodes);
        let s: f64 = vals.iter().zip(&q.weights).map(|(v, w)| w * v.abs().powf(p)).sum();
        s.powf(1.0 / p)
    }

    fn sup_norm(&self) -> f64 {
        let degree = self.basis.degree();
        let mut res = 4 * (degree + 1);
        let mut prev = max_abs(&self.evaluate_many(&sup_grid(self.manifold(), res)));
        for _ in 0..12 {
            res *= 2;
            let grid = sup_grid(self.manifold(), res);
            let cur = max_abs(&self.evaluate_many(&grid));
            if (cur - prev).abs() <= 1e-6 * cur.max(f64::MIN_POSITIVE) {
                return cur;
            }
            prev = cur;
            if grid.len() > 4_000_000 {
                break;
            }
        }
        prev
    }

    /// Product `fg` projected onto `E_{4dω}`.
    pub fn multiply(&self, g: &Self) -> Result<Product> {
        if self.manifold().kind != g.manifold().kind {
            return Err(Error::ManifoldMismatch(format!("{} vs {}", self.manifold().kind, g.manifold().kind)));
        }
        if self.omega() != g.omega() {
            return Err(Error::InvalidParameter(format!(
                "factors must share a bandwidth ({} vs {})",
                self.omega(),
                g.omega()
            )));
        }
        let m = *self.manifold();
        let omega_out = 4.0 * m.d as f64 * self.omega();
        let out_basis = Arc::new(eigen_basis(&m, omega_out)?);
        let q = reference_quadrature(&m, omega_out)?;
        let fv = self.evaluate_many(&q.nodes);
        let gv = g.evaluate_many(&q.nodes);
        let mut coeffs = vec![0.0; out_basis.len()];
        let mut row = vec![0.0; out_basis.len()];
        let mut rows = Vec::with_capacity(q.len());
        for ((x, w), (a, b)) in q.nodes.iter().zip(&q.weights).zip(fv.iter().zip(&gv)) {
            out_basis.eval_all(x, &mut row);
            let v = w * a * b;
            for (c, u) in coeffs.iter_mut().zip(&row) {
                *c += v * u;
            }
            rows.push(a * b);
        }
        let function = BandlimitedFunction { basis: out_basis, coeffs };
        let projected = function.evaluate_many(&q.nodes);
        let residual: f64 = rows
            .iter()
            .zip(&projected)
            .zip(&q.weights)
            .map(|((a, b), w)| w * (a - b) * (a - b))
            .sum();
        Ok(Product { function, residual_l2: residual.sqrt() })
    }

    /// Bernstein–Nikolskii ratio `‖L^k f‖_q / (ω^{k + n/(2p) - n/(2q)} ‖f‖_p)`.
    ///
    /// Written in `λ`-units; with `ω' = √ω` bounding frequencies the same
    /// number reads `‖L^k f‖_q / (ω'^{2k + n/p - n/q} ‖f‖_p)`.
    pub fn nikolski_check(&self, p: f64, q: f64, k: u32) -> Result<f64> {
        if q < p {
            return Err(Error::InvalidParameter(format!("need q >= p, got p = {p}, q = {q}")));
        }
        let fp = self.lp_norm(p)?;
        if fp == 0.0 || self.coeffs.iter().all(|c| *c == 0.0) {
            return Err(Error::ZeroFunction);
        }
        let n = self.manifold().n as f64;
        let inv = |r: f64| if r.is_infinite() { 0.0 } else { 1.0 / r };
        let exponent = k as f64 + n * inv(p) / 2.0 - n * inv(q) / 2.0;
        let lk = self.apply_l_power(k).lp_norm(q)?;
        Ok(lk / (self.omega().powf(exponent) * fp))
    }

    pub fn to_record(&self) -> FunctionRecord {
        FunctionRecord { manifold: self.manifold().kind, omega: self.omega(), coeffs: self.coeffs.clone() }
    }

    pub fn from_record(rec: &FunctionRecord) -> Result<Self> {
        let m = crate::manifold::make_manifold(rec.manifold);
        let basis = Arc::new(eigen_basis(&m, rec.omega)?);
        Self::new(basis, rec.coeffs.clone())
    }
}

/// Fourier coefficients `⟨provider, u_m⟩` for all `λ_m <= ω`, by the
/// reference quadrature.
pub fn project(m: &ManifoldSpec, omega: f64, provider: impl Fn(&Point) -> f64) -> Result<BandlimitedFunction> {
    let basis = Arc::new(eigen_basis(m, omega)?);
    project_onto(basis, provider)
}

pub fn project_onto(basis: Arc<SpectralBasis>, provider: impl Fn(&Point) -> f64) -> Result<BandlimitedFunction> {
    let q = reference_quadrature(basis.manifold(), basis.omega())?;
    let mut coeffs = vec![0.0; basis.len()];
    let mut row = vec![0.0; basis.len()];
    for (x, w) in q.nodes.iter().zip(&q.weights) {
        basis.eval_all(x, &mut row);
        let v = w * provider(x);
        for (c, u) in coeffs.iter_mut().zip(&row) {
            *c += v * u;
        }
    }
    BandlimitedFunction::new(basis, coeffs)
}

fn sup_grid(m: &ManifoldSpec, res: usize) -> Vec<Point> {
    use std::f64::consts::PI;
    let h = 2.0 * PI / res as f64;
    match m.kind {
        ManifoldKind::Circle => (0..res).map(|i| Point::Circle(i as f64 * h)).collect(),
        ManifoldKind::Torus2 => (0..res)
            .flat_map(|i| (0..res).map(move |j| Point::Torus(i as f64 * h, j as f64 * h)))
            .collect(),
        ManifoldKind::Sphere2 => {
            let nt = res / 2;
            (0..=nt)
                .flat_map(|i| {
                    let theta = PI * i as f64 / nt as f64;
                    (0..res).map(move |k| Point::sphere(theta, k as f64 * h))
                })
                .collect()
        }
    }
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |a, b| a.max(b.abs()))
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
