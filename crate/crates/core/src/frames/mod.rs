//! The band-limited localized Parseval frame.
//!
//! Level `j` samples `f(a^{-2j}𝓛)` on a lattice of radius
//! `ρ_j = a₀(4d·a^{2j+4}+1)^{-1/2}` with positive cubature weights `b^j_k`
//! exact on `E_{4d·a^{2j+4}}`. Since `|f(a^{-2j}𝓛)F|²` lies in that space,
//! `Σ_k |⟨F, φ^j_k⟩|² = ‖f(a^{-2j}𝓛)F‖²`, and the window partition turns the
//! sum over levels into `‖F - PF‖²`.

mod window;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use window::{make_window, WindowFunction};

use crate::cubature::{cubature_with_a0, exactness_residual, CubatureStats};
use crate::error::{Error, Result};
use crate::manifold::{
    eigen_basis, geodesic_distance, make_manifold, reference_quadrature, ManifoldKind, ManifoldSpec, Point,
    SpectralBasis,
};
use crate::spectral::{dot, BandlimitedFunction};

/// Name of the window transition recorded in archives.
pub const TRANSITION: &str = "exp-step";

/// One level of the frame: lattice points `x^j_k` and weights `b^j_k`.
#[derive(Clone, Debug)]
pub struct FrameLevel {
    pub j: i32,
    /// Cubature bandwidth `4d·a^{2j+4}`.
    pub bandwidth: f64,
    pub rho: f64,
    pub points: Vec<Point>,
    pub weights: Vec<f64>,
    /// Present when the level was built here rather than loaded.
    pub stats: Option<CubatureStats>,
    basis: Arc<SpectralBasis>,
    multiplier: Vec<f64>,
}

impl FrameLevel {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Eigenbasis covering the support `λ < a^{2j+4}` of the level multiplier.
    pub fn basis(&self) -> &Arc<SpectralBasis> {
        &self.basis
    }

    /// `f(a^{-2j}λ_m)` over [`Self::basis`].
    pub fn multiplier(&self) -> &[f64] {
        &self.multiplier
    }

    /// True when `f(a^{-2j}λ_m) = 0` for every eigenvalue.
    pub fn is_vacuous(&self) -> bool {
        self.multiplier.iter().all(|v| *v == 0.0)
    }
}

#[derive(Clone, Debug)]
pub struct NeedletFrame {
    manifold: ManifoldSpec,
    window: WindowFunction,
    a0: f64,
    omega_low: i32,
    levels: Vec<FrameLevel>,
    basis: Arc<SpectralBasis>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevelRecord {
    pub j: i32,
    pub rho: f64,
    pub bandwidth: f64,
    pub points: Vec<Point>,
    pub weights: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowRecord {
    pub a: f64,
    pub transition: String,
}

/// Frame archive `{manifold, a, a0, omega_low, levels, window}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameArchive {
    pub manifold: ManifoldKind,
    pub a: f64,
    pub a0: f64,
    pub omega_low: i32,
    pub levels: Vec<LevelRecord>,
    pub window: WindowRecord,
}

/// Lowest level `Ω = ⌊(log_a λ₁)/2 - 1⌋`; levels below it vanish.
pub fn omega_low(m: &ManifoldSpec, a: f64) -> i32 {
    (m.lambda1.ln() / a.ln() / 2.0 - 1.0).floor() as i32
}

/// Cubature bandwidth `4d·a^{2j+4}` of level `j`.
pub fn level_bandwidth(m: &ManifoldSpec, a: f64, j: i32) -> f64 {
    4.0 * m.d as f64 * a.powi(2 * j + 4)
}

/// Default top level per manifold.
pub fn default_j_max(kind: ManifoldKind) -> i32 {
    match kind {
        ManifoldKind::Circle => 6,
        ManifoldKind::Torus2 => 1,
        ManifoldKind::Sphere2 => 2,
    }
}

pub fn build_frame(m: &ManifoldSpec, a: f64, j_max: i32, seed: u64) -> Result<NeedletFrame> {
    build_frame_range(m, a, omega_low(m, a), j_max, seed)
}

/// Builds levels `j_lo..=j_max`; `j_lo < Ω` adds levels whose elements vanish.
///
/// All levels share one `a₀`. It starts at 1 and shrinks by 0.8 whenever
/// some level fails to produce weights with the positivity margin, after
/// which every level is rebuilt.
pub fn build_frame_range(m: &ManifoldSpec, a: f64, j_lo: i32, j_max: i32, seed: u64) -> Result<NeedletFrame> {
    let window = make_window(a)?;
    if j_max < j_lo {
        return Err(Error::InvalidParameter(format!("J_max = {j_max} is below the lowest level {j_lo}")));
    }
    let basis = Arc::new(eigen_basis(m, a.powi(2 * j_max + 4))?);
    let mut a0 = 1.0;
    'search: while a0 >= 1e-3 {
        let mut levels = Vec::new();
        for j in j_lo..=j_max {
            let bandwidth = level_bandwidth(m, a, j);
            match cubature_with_a0(m, bandwidth, a0, seed) {
                Ok(c) if c.margin_ok() => {
                    let mut level = make_level(m, &window, &basis, j, bandwidth, c.rho(), c.points().to_vec(), c.weights().to_vec())?;
                    level.stats = Some(*c.stats());
                    levels.push(level);
                }
                Ok(_)
                | Err(Error::NotSamplingSet { .. })
                | Err(Error::RhoTooLarge { .. })
                | Err(Error::RhoOutOfRange { .. }) => {
                    a0 *= 0.8;
                    continue 'search;
                }
                Err(e) => return Err(e),
            }
        }
        return Ok(NeedletFrame { manifold: *m, window, a0, omega_low: omega_low(m, a), levels, basis });
    }
    Err(Error::SearchExhausted { rho: a0 })
}

#[allow(clippy::too_many_arguments)]
fn make_level(
    m: &ManifoldSpec,
    window: &WindowFunction,
    top: &Arc<SpectralBasis>,
    j: i32,
    bandwidth: f64,
    rho: f64,
    points: Vec<Point>,
    weights: Vec<f64>,
) -> Result<FrameLevel> {
    if points.len() != weights.len() {
        return Err(Error::LengthMismatch { expected: points.len(), got: weights.len() });
    }
    for p in &points {
        m.check_point(p)?;
    }
    let band = window.a().powi(2 * j + 4);
    let basis = if band >= top.omega() { top.clone() } else { Arc::new(eigen_basis(m, band)?) };
    let multiplier = basis.eigenvalues().map(|l| window.level_multiplier(j, l)).collect();
    Ok(FrameLevel { j, bandwidth, rho, points, weights, stats: None, basis, multiplier })
}

/// Analysis coefficients `s^j_k = ⟨F, φ^j_k⟩`, level by level.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameCoefficients {
    pub a: f64,
    /// Manifold dimension.
    pub n: usize,
    pub levels: Vec<LevelCoefficients>,
    /// Set when the analyzed function had content above `a^{2J_max}`, where
    /// the levels no longer sum to the identity.
    pub truncated: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelCoefficients {
    pub j: i32,
    pub values: Vec<f64>,
}

impl FrameCoefficients {
    pub fn zeros_like(frame: &NeedletFrame) -> Self {
        FrameCoefficients {
            a: frame.a(),
            n: frame.manifold.n,
            levels: frame.levels.iter().map(|l| LevelCoefficients { j: l.j, values: vec![0.0; l.len()] }).collect(),
            truncated: false,
        }
    }

    /// `Σ_{j,k} |s^j_k|²`.
    pub fn energy(&self) -> f64 {
        self.levels.iter().flat_map(|l| &l.values).map(|v| v * v).sum()
    }

    pub fn len(&self) -> usize {
        self.levels.iter().map(|l| l.values.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Divides each `s^j_k` by `√b^j_k`, giving the samples
    /// `(f(a^{-2j}𝓛)F)(x^j_k)`; this is the scale the Besov sequence norm uses.
    pub fn unnormalized(&self, frame: &NeedletFrame) -> Result<Self> {
        frame.check_shape(self)?;
        let mut out = self.clone();
        for (lc, level) in out.levels.iter_mut().zip(&frame.levels) {
            for (v, b) in lc.values.iter_mut().zip(&level.weights) {
                *v /= b.sqrt();
            }
        }
        Ok(out)
    }
}

/// Relative Parseval defect for one function.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ParsevalCheck {
    /// `Σ|s^j_k|²`.
    pub energy: f64,
    /// `‖(I-P)F‖²`.
    pub target: f64,
    pub residual: f64,
    pub truncated: bool,
}

/// `C_N = max_y tⁿ|K_t(x, y)|(1 + d(x,y)/t)^N` for one element.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LocalizationLevel {
    pub j: i32,
    pub k: usize,
    pub t: f64,
    pub constants: Vec<(u32, f64)>,
    /// `|K_t(x,y)| / |K_t(x,x)|` at a point with `d(x,y) = 10t`; `None`
    /// when `10t` exceeds the diameter.
    pub far_ratio: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LocalizationStability {
    pub n: u32,
    /// `max_j C_N / min_j C_N`.
    pub ratio: f64,
    pub stable: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LocalizationSweep {
    pub levels: Vec<LocalizationLevel>,
    pub stability: Vec<LocalizationStability>,
}

/// `K_t(x,y) = Σ_m f(t²λ_m) u_m(x) u_m(y)`.
pub fn kernel_eval(basis: &SpectralBasis, w: &WindowFunction, t: f64, x: &Point, y: &Point) -> Result<f64> {
    let need = w.support().1 / (t * t);
    if basis.omega() < need && basis.lambda_max() < need {
        // The basis must contain every eigenvalue below a⁴/t².
        let full = eigen_basis(basis.manifold(), need)?;
        if full.len() > basis.len() {
            return Err(Error::BasisTooSmall { have: basis.omega(), need });
        }
    }
    let ux = basis.eval_all_vec(x);
    let uy = basis.eval_all_vec(y);
    Ok(basis
        .eigenvalues()
        .zip(ux.iter().zip(&uy))
        .map(|(l, (a, b))| w.f(t * t * l) * a * b)
        .sum())
}

/// A point at distance `d` from `x` (along the first coordinate, or along
/// the meridian through `x` on the sphere).
fn point_at_distance(x: &Point, d: f64) -> Point {
    match *x {
        Point::Circle(a) => Point::circle(a + d),
        Point::Torus(a, b) => Point::torus(a + d, b),
        Point::Sphere(_) => {
            let (theta, phi) = x.sphere_angles();
            let t = theta + d;
            if t <= std::f64::consts::PI {
                Point::sphere(t, phi)
            } else {
                Point::sphere(theta - d, phi)
            }
        }
    }
}

/// `C_N = max_y tⁿ|K_t(x,y)|(1 + d(x,y)/t)^N`, `t = a^{-j}`, over a
/// quadrature grid of bandwidth `16·a^{2j+4}` plus `x` itself.
pub fn kernel_localization(
    m: &ManifoldSpec,
    w: &WindowFunction,
    j: i32,
    x: &Point,
    n_list: &[u32],
) -> Result<LocalizationLevel> {
    m.check_point(x)?;
    let a = w.a();
    let t = a.powi(-j);
    let basis = eigen_basis(m, a.powi(2 * j + 4))?;
    let ux = basis.eval_all_vec(x);
    let h: Vec<f64> = basis.eigenvalues().zip(&ux).map(|(l, u)| w.f(t * t * l) * u).collect();
    let grid = reference_quadrature(m, 16.0 * a.powi(2 * j + 4))?;
    let mut row = vec![0.0; basis.len()];
    let tn = t.powi(m.n as i32);
    let mut constants: Vec<(u32, f64)> = n_list.iter().map(|&n| (n, 0.0)).collect();
    for y in std::iter::once(x).chain(&grid.nodes) {
        basis.eval_all(y, &mut row);
        let kv = dot(&row, &h).abs();
        let d = geodesic_distance(m, x, y);
        for (n, c) in constants.iter_mut() {
            *c = c.max(tn * kv * (1.0 + d / t).powi(*n as i32));
        }
    }
    let peak = dot(&ux, &h).abs();
    let far_ratio = (10.0 * t <= m.diameter()).then(|| {
        let y = point_at_distance(x, 10.0 * t);
        basis.eval_all(&y, &mut row);
        if peak > 0.0 {
            dot(&row, &h).abs() / peak
        } else {
            0.0
        }
    });
    Ok(LocalizationLevel { j, k: 0, t, constants, far_ratio })
}

/// Runs [`kernel_localization`] at each level and compares the constants:
/// `C_N` is stable when `max_j C_N / min_j C_N <= max_ratio`.
pub fn localization_sweep(
    m: &ManifoldSpec,
    w: &WindowFunction,
    x: &Point,
    levels: &[i32],
    n_list: &[u32],
    max_ratio: f64,
) -> Result<LocalizationSweep> {
    let reports = levels.iter().map(|&j| kernel_localization(m, w, j, x, n_list)).collect::<Result<Vec<_>>>()?;
    Ok(stability_of(reports, n_list, max_ratio))
}

fn stability_of(reports: Vec<LocalizationLevel>, n_list: &[u32], max_ratio: f64) -> LocalizationSweep {
    let stability = n_list
        .iter()
        .enumerate()
        .map(|(i, &n)| {
            let cs = reports.iter().map(|r| r.constants[i].1);
            let hi = cs.clone().fold(0.0, f64::max);
            let lo = cs.fold(f64::INFINITY, f64::min);
            let ratio = hi / lo;
            LocalizationStability { n, ratio, stable: ratio <= max_ratio }
        })
        .collect();
    LocalizationSweep { levels: reports, stability }
}

impl NeedletFrame {
    pub fn manifold(&self) -> &ManifoldSpec {
        &self.manifold
    }

    pub fn window(&self) -> &WindowFunction {
        &self.window
    }

    pub fn a(&self) -> f64 {
        self.window.a()
    }

    pub fn a0(&self) -> f64 {
        self.a0
    }

    /// `Ω`.
    pub fn omega_low(&self) -> i32 {
        self.omega_low
    }

    pub fn j_min(&self) -> i32 {
        self.levels[0].j
    }

    pub fn j_max(&self) -> i32 {
        self.levels[self.levels.len() - 1].j
    }

    pub fn levels(&self) -> &[FrameLevel] {
        &self.levels
    }

    pub fn level(&self, j: i32) -> Result<&FrameLevel> {
        let i = j - self.j_min();
        if i < 0 || i as usize >= self.levels.len() {
            return Err(Error::IndexOutOfRange { index: j.max(0) as usize, len: self.levels.len() });
        }
        Ok(&self.levels[i as usize])
    }

    /// Basis of `E_{a^{2J_max+4}}`, where all elements and syntheses live.
    pub fn basis(&self) -> &Arc<SpectralBasis> {
        &self.basis
    }

    /// `a^{2J_max}`: functions below this band are reproduced exactly.
    pub fn in_band(&self) -> f64 {
        self.a().powi(2 * self.j_max())
    }

    /// Total number of frame elements.
    pub fn len(&self) -> usize {
        self.levels.iter().map(FrameLevel::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `φ^j_k`, with coefficients `√b^j_k f(a^{-2j}λ_m) u_m(x^j_k)`.
    pub fn frame_element(&self, j: i32, k: usize) -> Result<BandlimitedFunction> {
        let level = self.level(j)?;
        if k >= level.len() {
            return Err(Error::IndexOutOfRange { index: k, len: level.len() });
        }
        let u = level.basis.eval_all_vec(&level.points[k]);
        let sb = level.weights[k].max(0.0).sqrt();
        let mut coeffs = vec![0.0; self.basis.len()];
        for (c, (h, v)) in coeffs.iter_mut().zip(level.multiplier.iter().zip(&u)) {
            *c = sb * h * v;
        }
        BandlimitedFunction::new(self.basis.clone(), coeffs)
    }

    /// `f`'s coefficients padded or cut to the frame basis, and whether any
    /// content lies above `a^{2J_max}`.
    fn align(&self, f: &BandlimitedFunction) -> Result<(Vec<f64>, bool)> {
        if f.manifold().kind != self.manifold.kind {
            return Err(Error::ManifoldMismatch(format!("{} vs {}", f.manifold().kind, self.manifold.kind)));
        }
        let band = self.in_band();
        let truncated = f.basis().eigenvalues().zip(f.coeffs()).any(|(l, c)| l > band && *c != 0.0);
        let mut c = vec![0.0; self.basis.len()];
        let n = c.len().min(f.coeffs().len());
        c[..n].copy_from_slice(&f.coeffs()[..n]);
        Ok((c, truncated))
    }

    pub fn analyze(&self, f: &BandlimitedFunction) -> Result<FrameCoefficients> {
        Ok(self.analyze_many(std::slice::from_ref(f))?.pop().expect("one input"))
    }

    /// Multiplier-then-sample analysis of several functions in one sweep of
    /// the lattice points: `s^j_k = √b^j_k (f(a^{-2j}𝓛)F)(x^j_k)`.
    pub fn analyze_many(&self, fs: &[BandlimitedFunction]) -> Result<Vec<FrameCoefficients>> {
        let aligned = fs.iter().map(|f| self.align(f)).collect::<Result<Vec<_>>>()?;
        let mut out: Vec<FrameCoefficients> = aligned
            .iter()
            .map(|(_, t)| FrameCoefficients { truncated: *t, ..FrameCoefficients::zeros_like(self) })
            .collect();
        for (li, level) in self.levels.iter().enumerate() {
            let mj = level.basis.len();
            let filtered: Vec<Vec<f64>> =
                aligned.iter().map(|(c, _)| level.multiplier.iter().zip(c).map(|(h, v)| h * v).collect()).collect();
            if level.is_vacuous() {
                continue;
            }
            let mut row = vec![0.0; mj];
            for (k, (p, b)) in level.points.iter().zip(&level.weights).enumerate() {
                level.basis.eval_all(p, &mut row);
                let sb = b.max(0.0).sqrt();
                for (o, g) in out.iter_mut().zip(&filtered) {
                    o.levels[li].values[k] = sb * dot(&row, g);
                }
            }
        }
        Ok(out)
    }

    fn check_shape(&self, s: &FrameCoefficients) -> Result<()> {
        if s.levels.len() != self.levels.len() {
            return Err(Error::ShapeMismatch(format!("{} levels, frame has {}", s.levels.len(), self.levels.len())));
        }
        for (lc, level) in s.levels.iter().zip(&self.levels) {
            if lc.j != level.j || lc.values.len() != level.len() {
                return Err(Error::ShapeMismatch(format!(
                    "level {} has {} values, frame level {} has {} points",
                    lc.j,
                    lc.values.len(),
                    level.j,
                    level.len()
                )));
            }
        }
        Ok(())
    }

    /// `Σ_{j,k} s^j_k φ^j_k`.
    pub fn synthesize(&self, s: &FrameCoefficients) -> Result<BandlimitedFunction> {
        self.check_shape(s)?;
        let mut coeffs = vec![0.0; self.basis.len()];
        for (lc, level) in s.levels.iter().zip(&self.levels) {
            if level.is_vacuous() {
                continue;
            }
            let mj = level.basis.len();
            let mut row = vec![0.0; mj];
            let mut acc = vec![0.0; mj];
            for ((p, b), v) in level.points.iter().zip(&level.weights).zip(&lc.values) {
                if *v == 0.0 {
                    continue;
                }
                level.basis.eval_all(p, &mut row);
                let c = v * b.max(0.0).sqrt();
                for (a, u) in acc.iter_mut().zip(&row) {
                    *a += c * u;
                }
            }
            for (o, (a, h)) in coeffs.iter_mut().zip(acc.iter().zip(&level.multiplier)) {
                *o += a * h;
            }
        }
        BandlimitedFunction::new(self.basis.clone(), coeffs)
    }

    /// `|Σ|s^j_k|² - ‖(I-P)F‖²| / ‖(I-P)F‖²`.
    pub fn parseval_residual(&self, f: &BandlimitedFunction) -> Result<ParsevalCheck> {
        Ok(self.parseval_many(std::slice::from_ref(f))?.pop().expect("one input"))
    }

    pub fn parseval_many(&self, fs: &[BandlimitedFunction]) -> Result<Vec<ParsevalCheck>> {
        let coeffs = self.analyze_many(fs)?;
        fs.iter()
            .zip(coeffs)
            .map(|(f, s)| {
                let target: f64 = f.coeffs()[1..].iter().map(|c| c * c).sum();
                if target == 0.0 {
                    return Err(Error::ZeroFunction);
                }
                let energy = s.energy();
                Ok(ParsevalCheck { energy, target, residual: (energy - target).abs() / target, truncated: s.truncated })
            })
            .collect()
    }

    /// `‖synthesize(analyze(F)) - (F - PF)‖₂ / ‖F‖₂`.
    pub fn reconstruction_error(&self, f: &BandlimitedFunction) -> Result<f64> {
        let s = self.analyze(f)?;
        let g = self.synthesize(&s)?;
        let (target, _) = self.align(f)?;
        let norm = f.l2_norm();
        if norm == 0.0 {
            return Err(Error::ZeroFunction);
        }
        // Content beyond the frame basis is not reproduced; count it as error.
        let outside: f64 = f.coeffs().iter().skip(target.len()).map(|c| c * c).sum();
        let inside: f64 =
            g.coeffs().iter().zip(&target).enumerate().map(|(m, (a, b))| if m == 0 { a * a } else { (a - b).powi(2) }).sum();
        Ok((inside + outside).sqrt() / norm)
    }

    /// Localization constants of the kernel centred at `x^j_k`.
    pub fn localization_report(&self, j: i32, k: usize, n_list: &[u32]) -> Result<LocalizationLevel> {
        let level = self.level(j)?;
        if k >= level.len() {
            return Err(Error::IndexOutOfRange { index: k, len: level.len() });
        }
        let mut r = kernel_localization(&self.manifold, &self.window, j, &level.points[k], n_list)?;
        r.k = k;
        Ok(r)
    }

    /// [`Self::localization_report`] at `x^j_0` for each listed level.
    pub fn localization_sweep(&self, levels: &[i32], n_list: &[u32], max_ratio: f64) -> Result<LocalizationSweep> {
        let reports = levels.iter().map(|&j| self.localization_report(j, 0, n_list)).collect::<Result<Vec<_>>>()?;
        Ok(stability_of(reports, n_list, max_ratio))
    }

    /// Largest `‖Aᵀb - c‖_∞` over levels, each at its own cubature bandwidth.
    pub fn exactness_residual(&self) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for level in &self.levels {
            worst = worst.max(exactness_residual(&self.manifold, level.bandwidth, &level.points, &level.weights)?);
        }
        Ok(worst)
    }

    pub fn to_archive(&self) -> FrameArchive {
        FrameArchive {
            manifold: self.manifold.kind,
            a: self.a(),
            a0: self.a0,
            omega_low: self.omega_low,
            levels: self
                .levels
                .iter()
                .map(|l| LevelRecord {
                    j: l.j,
                    rho: l.rho,
                    bandwidth: l.bandwidth,
                    points: l.points.clone(),
                    weights: l.weights.clone(),
                })
                .collect(),
            window: WindowRecord { a: self.a(), transition: TRANSITION.into() },
        }
    }

    /// Loads an archive without re-validating its weights; verification is a
    /// separate step so that a corrupted archive can be reported on.
    pub fn from_archive(rec: &FrameArchive) -> Result<Self> {
        if rec.window.transition != TRANSITION {
            return Err(Error::InvalidParameter(format!("unknown window transition {:?}", rec.window.transition)));
        }
        if rec.window.a != rec.a {
            return Err(Error::InvalidParameter(format!("window base {} differs from frame base {}", rec.window.a, rec.a)));
        }
        if rec.levels.is_empty() {
            return Err(Error::InvalidParameter("archive has no levels".into()));
        }
        let m = make_manifold(rec.manifold);
        let window = make_window(rec.a)?;
        for (i, l) in rec.levels.iter().enumerate() {
            if l.j != rec.levels[0].j + i as i32 {
                return Err(Error::InvalidParameter(format!("levels are not consecutive at j = {}", l.j)));
            }
        }
        let j_max = rec.levels[rec.levels.len() - 1].j;
        let basis = Arc::new(eigen_basis(&m, rec.a.powi(2 * j_max + 4))?);
        let levels = rec
            .levels
            .iter()
            .map(|l| make_level(&m, &window, &basis, l.j, l.bandwidth, l.rho, l.points.clone(), l.weights.clone()))
            .collect::<Result<Vec<_>>>()?;
        Ok(NeedletFrame { manifold: m, window, a0: rec.a0, omega_low: rec.omega_low, levels, basis })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    #[test]
    fn omega_low_examples() {
        assert_eq!(omega_low(&make_manifold(ManifoldKind::Sphere2), 2.0), -1);
        assert_eq!(omega_low(&make_manifold(ManifoldKind::Circle), 2.0), -1);
        assert_eq!(omega_low(&make_manifold(ManifoldKind::Torus2), 2.0), -1);
    }

    #[test]
    fn circle_kernel_at_unit_scale() {
        let c = make_manifold(ManifoldKind::Circle);
        let w = make_window(2.0).unwrap();
        let b = eigen_basis(&c, 16.0).unwrap();
        let (x, y) = (Point::circle(0.4), Point::circle(2.1));
        let want = w.f(1.0) * (0.4f64.cos() * 2.1f64.cos() + 0.4f64.sin() * 2.1f64.sin()) / PI
            + w.f(4.0) * (2.0 * (0.4f64 - 2.1)).cos() / PI
            + w.f(9.0) * (3.0 * (0.4f64 - 2.1)).cos() / PI;
        assert!(w.f(9.0) > 0.1);
        assert_abs_diff_eq!(kernel_eval(&b, &w, 1.0, &x, &y).unwrap(), want, epsilon = 1e-14);
        let small = eigen_basis(&c, 4.0).unwrap();
        assert!(matches!(kernel_eval(&small, &w, 1.0, &x, &y), Err(Error::BasisTooSmall { .. })));
    }

    #[test]
    fn kernel_vanishes_below_first_eigenvalue() {
        let s = make_manifold(ManifoldKind::Sphere2);
        let w = make_window(2.0).unwrap();
        let b = eigen_basis(&s, 6.0).unwrap();
        // a⁴/t² = 1 < λ₁ = 2
        let v = kernel_eval(&b, &w, 4.0, &Point::north_pole(), &Point::north_pole()).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn sphere_kernel_is_zonal() {
        let s = make_manifold(ManifoldKind::Sphere2);
        let w = make_window(2.0).unwrap();
        let b = eigen_basis(&s, 64.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let d = 0.7;
        let reference = kernel_eval(&b, &w, 0.5, &Point::north_pole(), &Point::sphere(d, 0.0)).unwrap();
        for _ in 0..10 {
            use rand::Rng;
            let th: f64 = rng.random_range(0.2..2.9);
            let ph: f64 = rng.random_range(0.0..2.0 * PI);
            let x = Point::sphere(th, ph);
            // A point at distance d from x along some direction.
            let Point::Sphere(v) = x else { unreachable!() };
            let e1 = [th.cos() * ph.cos(), th.cos() * ph.sin(), -th.sin()];
            let e2 = [-ph.sin(), ph.cos(), 0.0];
            let psi: f64 = rng.random_range(0.0..2.0 * PI);
            let dir: Vec<f64> = (0..3).map(|i| psi.cos() * e1[i] + psi.sin() * e2[i]).collect();
            let y = Point::sphere_from_vec([
                d.cos() * v[0] + d.sin() * dir[0],
                d.cos() * v[1] + d.sin() * dir[1],
                d.cos() * v[2] + d.sin() * dir[2],
            ]);
            assert_abs_diff_eq!(kernel_eval(&b, &w, 0.5, &x, &y).unwrap(), reference, epsilon = 1e-10);
        }
    }

    fn circle_frame() -> NeedletFrame {
        build_frame(&make_manifold(ManifoldKind::Circle), 2.0, 3, 0).unwrap()
    }

    #[test]
    fn structure() {
        let f = circle_frame();
        assert_eq!(f.j_min(), -1);
        assert_eq!(f.j_max(), 3);
        for l in f.levels() {
            assert_abs_diff_eq!(l.rho, f.a0() / (l.bandwidth + 1.0).sqrt(), epsilon = 1e-15);
            assert!(l.weights.iter().all(|b| *b > 0.0));
        }
        assert!(f.exactness_residual().unwrap() < 1e-9);
        assert!(f.level(4).is_err() && f.level(-2).is_err());
        assert!(f.frame_element(0, 10_000).is_err());
    }

    #[test]
    fn element_norm_matches_kernel_diagonal() {
        let f = circle_frame();
        for j in f.j_min()..=f.j_max() {
            let level = f.level(j).unwrap();
            let phi = f.frame_element(j, 0).unwrap();
            let x = level.points[0];
            let diag = kernel_eval(f.basis(), f.window(), f.a().powi(-j), &x, &x).unwrap();
            // K is built from f, the element from f, so compare squared norms through f².
            let sq: f64 = f
                .basis()
                .eigenvalues()
                .zip(f.basis().eval_all_vec(&x))
                .map(|(l, u)| f.window().f_squared(f.a().powi(-2 * j) * l) * u * u)
                .sum();
            assert_abs_diff_eq!(phi.l2_norm().powi(2), level.weights[0] * sq, epsilon = 1e-13);
            assert!(diag.is_finite());
            assert_eq!(phi.coeffs()[0], 0.0);
        }
    }

    #[test]
    fn parseval_and_reconstruction() {
        let f = circle_frame();
        let basis = Arc::new(eigen_basis(f.manifold(), f.in_band()).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let g = BandlimitedFunction::random(basis.clone(), &mut rng);
            let check = f.parseval_residual(&g).unwrap();
            assert!(check.residual <= 1e-8 && !check.truncated, "{check:?}");
            assert!(f.reconstruction_error(&g).unwrap() <= 1e-8);
        }
        let u1 = BandlimitedFunction::unit(basis.clone(), 1).unwrap();
        assert_abs_diff_eq!(f.analyze(&u1).unwrap().energy(), 1.0, epsilon = 1e-8);
        let one = BandlimitedFunction::constant(basis.clone(), 2.0);
        assert!(f.analyze(&one).unwrap().levels.iter().all(|l| l.values.iter().all(|v| v.abs() < 1e-14)));
        assert!(matches!(f.parseval_residual(&one), Err(Error::ZeroFunction)));
        let zero = f.synthesize(&FrameCoefficients::zeros_like(&f)).unwrap();
        assert!(zero.coeffs().iter().all(|c| *c == 0.0));
    }

    #[test]
    fn out_of_band_is_flagged() {
        let f = circle_frame();
        let wide = Arc::new(eigen_basis(f.manifold(), 4096.0).unwrap());
        let g = BandlimitedFunction::unit(wide, 100).unwrap();
        assert!(f.parseval_residual(&g).unwrap().truncated);
    }

    #[test]
    fn shape_mismatch() {
        let f = circle_frame();
        let mut s = FrameCoefficients::zeros_like(&f);
        s.levels[1].values.pop();
        assert!(matches!(f.synthesize(&s), Err(Error::ShapeMismatch(_))));
        s.levels.pop();
        assert!(f.synthesize(&s).is_err());
    }

    #[test]
    fn levels_below_omega_vanish() {
        let c = make_manifold(ManifoldKind::Circle);
        let f = build_frame_range(&c, 2.0, -4, 0, 0).unwrap();
        for j in -4..omega_low(&c, 2.0) {
            let level = f.level(j).unwrap();
            assert!(level.is_vacuous());
            for k in 0..level.len() {
                assert!(f.frame_element(j, k).unwrap().coeffs().iter().all(|v| *v == 0.0));
            }
        }
        assert!(!f.level(omega_low(&c, 2.0)).unwrap().is_vacuous());
    }

    #[test]
    fn archive_round_trip() {
        let f = circle_frame();
        let json = serde_json::to_string(&f.to_archive()).unwrap();
        let back = NeedletFrame::from_archive(&serde_json::from_str(&json).unwrap()).unwrap();
        let basis = Arc::new(eigen_basis(f.manifold(), 30.0).unwrap());
        let g = BandlimitedFunction::random(basis, &mut ChaCha8Rng::seed_from_u64(1));
        assert_eq!(f.analyze(&g).unwrap(), back.analyze(&g).unwrap());
        let mut bad = f.to_archive();
        bad.window.transition = "linear".into();
        assert!(NeedletFrame::from_archive(&bad).is_err());
    }

    #[test]
    fn localization_basics() {
        let f = circle_frame();
        let r = f.localization_report(2, 0, &[0, 1, 2, 3]).unwrap();
        let x = f.level(2).unwrap().points[0];
        let peak = kernel_eval(f.basis(), f.window(), 0.25, &x, &x).unwrap();
        assert_abs_diff_eq!(r.constants[0].1, 0.25 * peak.abs(), epsilon = 1e-12);
        assert!(r.constants.windows(2).all(|w| w[0].1 <= w[1].1));
    }
}
