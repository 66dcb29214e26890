//! Three computable Besov quasi-norms and their comparison.
//!
//! * sequence: `(Σ_j a^{jq(α-n/p)} (Σ_k |s^j_k|^p)^{q/p})^{1/q}` on frame
//!   coefficients;
//! * approximation: `‖F‖_p + (Σ_j (2^{αj} 𝓔(F, 4^j, p))^q)^{1/q}`;
//! * Littlewood–Paley: `(Σ_{ν>=-1} (2^{να} ‖β_ν(𝓛)F‖_p)^q)^{1/q}`.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frames::{make_window, FrameCoefficients, NeedletFrame, WindowFunction};
use crate::manifold::{eigen_basis, BasisLabel, ManifoldKind, ManifoldSpec, Point, Trig};
use crate::spectral::BandlimitedFunction;

/// Exponents `p`, `q` may be `f64::INFINITY`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BesovParams {
    pub alpha: f64,
    #[serde(with = "exponent")]
    pub p: f64,
    #[serde(with = "exponent")]
    pub q: f64,
    /// Frame base used by the sequence norm.
    pub a: f64,
    /// Manifold dimension.
    pub n: usize,
}

/// Serializes an exponent, writing `∞` as the string `"inf"`.
pub mod exponent {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_infinite() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(*v)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Text(String),
        }
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Text(t) => parse(&t).map_err(de::Error::custom),
        }
    }

    /// Parses a positive number or `inf`.
    pub fn parse(t: &str) -> Result<f64, String> {
        let v = match t.trim() {
            "inf" | "infinity" | "∞" => f64::INFINITY,
            other => other.parse::<f64>().map_err(|e| format!("bad exponent {other:?}: {e}"))?,
        };
        if v > 0.0 {
            Ok(v)
        } else {
            Err(format!("exponent {t} must be positive"))
        }
    }
}

impl BesovParams {
    pub fn new(alpha: f64, p: f64, q: f64, a: f64, n: usize) -> Result<Self> {
        if !alpha.is_finite() {
            return Err(Error::InvalidParameter(format!("alpha = {alpha} must be finite")));
        }
        for (name, v) in [("p", p), ("q", q)] {
            if !(v > 0.0) {
                return Err(Error::InvalidParameter(format!("{name} = {v} must be positive")));
            }
        }
        if !(a > 1.0) || !a.is_finite() {
            return Err(Error::InvalidParameter(format!("a = {a} must exceed 1")));
        }
        Ok(BesovParams { alpha, p, q, a, n })
    }

    /// `n/p`, zero for `p = ∞`.
    fn n_over_p(&self) -> f64 {
        if self.p.is_infinite() {
            0.0
        } else {
            self.n as f64 / self.p
        }
    }
}

/// `(Σ|x|^p)^{1/p}`, or the max for `p = ∞`.
fn lp_sum<'a>(xs: impl IntoIterator<Item = &'a f64>, p: f64) -> f64 {
    if p.is_infinite() {
        xs.into_iter().fold(0.0, |m, v| m.max(v.abs()))
    } else {
        xs.into_iter().map(|v| v.abs().powf(p)).sum::<f64>().powf(1.0 / p)
    }
}

pub fn sequence_quasinorm(s: &FrameCoefficients, params: &BesovParams) -> f64 {
    let terms: Vec<f64> = s
        .levels
        .iter()
        .map(|l| params.a.powf(l.j as f64 * (params.alpha - params.n_over_p())) * lp_sum(&l.values, params.p))
        .collect();
    lp_sum(&terms, params.q)
}

/// `𝓔(F, ω, p)`; for `p ≠ 2` the value is `‖F - Π_ω F‖_p`, an upper bound.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct BestApprox {
    pub value: f64,
    pub upper_bound: bool,
}

/// Error of approximating `f` from eigenfunctions with `λ < ω`; the tail is
/// `λ >= ω`.
pub fn best_approx_error(f: &BandlimitedFunction, omega: f64, p: f64) -> Result<BestApprox> {
    if !(p >= 1.0) {
        return Err(Error::InvalidParameter(format!("p = {p} must be >= 1")));
    }
    let tail = f.apply_multiplier(|l| if l >= omega { 1.0 } else { 0.0 });
    if p == 2.0 {
        return Ok(BestApprox { value: tail.l2_norm(), upper_bound: false });
    }
    if tail.coeffs().iter().all(|c| *c == 0.0) {
        return Ok(BestApprox { value: 0.0, upper_bound: false });
    }
    Ok(BestApprox { value: tail.lp_norm(p)?, upper_bound: true })
}

/// Partial sum of the approximation norm through level `J`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ApproxNorm {
    pub value: f64,
    /// `2^{αj} 𝓔(F, 4^j, p)` for `j = 0..=J`.
    pub terms: Vec<f64>,
    /// The first omitted term, `j = J + 1`.
    pub tail_term: f64,
    /// `p = 1` sits outside the range the characterization is proved for.
    pub unverified: bool,
    pub upper_bound: bool,
}

pub fn approx_norm(f: &BandlimitedFunction, params: &BesovParams, j_top: u32) -> Result<ApproxNorm> {
    if params.q.is_infinite() {
        return Err(Error::Refused(
            "the approximation norm is characterized only for q < ∞; no extension to q = ∞ is attempted".into(),
        ));
    }
    if params.p < 1.0 {
        return Err(Error::Refused(format!("the approximation norm needs p >= 1, got {}", params.p)));
    }
    let mut upper_bound = params.p != 2.0;
    let mut term = |j: u32| -> Result<f64> {
        let e = best_approx_error(f, 4f64.powi(j as i32), params.p)?;
        upper_bound &= e.upper_bound || e.value == 0.0;
        Ok(2f64.powf(params.alpha * j as f64) * e.value)
    };
    let terms = (0..=j_top).map(&mut term).collect::<Result<Vec<_>>>()?;
    let tail_term = term(j_top + 1)?;
    let value = f.lp_norm(params.p)? + lp_sum(&terms, params.q);
    Ok(ApproxNorm { value, terms, tail_term, unverified: params.p == 1.0, upper_bound: upper_bound && params.p != 2.0 })
}

/// Dyadic Littlewood–Paley pieces: `β_ν(λ) = f(4^{-ν}λ)` for `ν >= 0` with
/// the base-2 window, and `β_{-1}(λ) = Φ(λ)^{1/2}`, so `Σ_ν β_ν² = 1`.
#[derive(Clone, Copy, Debug)]
pub struct LittlewoodPaley {
    window: WindowFunction,
}

impl Default for LittlewoodPaley {
    fn default() -> Self {
        LittlewoodPaley { window: make_window(2.0).expect("base 2 window") }
    }
}

impl LittlewoodPaley {
    pub fn beta(&self, nu: i32, lambda: f64) -> f64 {
        if nu < 0 {
            self.window.phi(lambda).sqrt()
        } else {
            self.window.f(4f64.powi(-nu) * lambda)
        }
    }

    /// Highest `ν` with `β_ν` nonzero somewhere on `[0, λ_max]`.
    pub fn top(&self, lambda_max: f64) -> i32 {
        if lambda_max <= 0.25 {
            return -1;
        }
        // β_ν(λ) ≠ 0 needs 4^{-ν}λ > 1/4.
        ((4.0 * lambda_max).ln() / 4f64.ln()).ceil() as i32
    }
}

fn lp_pieces(f: &BandlimitedFunction, params: &BesovParams) -> Result<Vec<f64>> {
    if params.p < 1.0 {
        return Err(Error::InvalidParameter(format!("function-space norms need p >= 1, got {}", params.p)));
    }
    let lp = LittlewoodPaley::default();
    let top = lp.top(f.spectral_support());
    (-1..=top)
        .map(|nu| {
            let piece = f.apply_multiplier(|l| lp.beta(nu, l));
            Ok(2f64.powf(params.alpha * nu as f64) * piece.lp_norm(params.p)?)
        })
        .collect()
}

/// LP norm with each `‖β_ν(𝓛)F‖_p` computed by quadrature.
pub fn littlewood_paley_norm(f: &BandlimitedFunction, params: &BesovParams) -> Result<f64> {
    Ok(lp_sum(&lp_pieces(f, params)?, params.q))
}

/// `p = q = 2` LP norm straight from the coefficients:
/// `(Σ_ν 4^{να} Σ_m β_ν(λ_m)² c_m²)^{1/2}`.
pub fn littlewood_paley_norm_l2_coefficients(f: &BandlimitedFunction, alpha: f64) -> f64 {
    let lp = LittlewoodPaley::default();
    let top = lp.top(f.spectral_support());
    (-1..=top)
        .map(|nu| {
            let e: f64 = f.basis().eigenvalues().zip(f.coeffs()).map(|(l, c)| (lp.beta(nu, l) * c).powi(2)).sum();
            4f64.powf(alpha * nu as f64) * e
        })
        .sum::<f64>()
        .sqrt()
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct NormRatios {
    pub sequence_over_lp: f64,
    pub approx_over_lp: f64,
    pub sequence_over_approx: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NormComparison {
    pub sequence: f64,
    /// `None` when refused (`q = ∞` or `p < 1`).
    pub approx: Option<f64>,
    pub lp: Option<f64>,
    pub ratios: Option<NormRatios>,
    /// Set when `F` had content outside the band the frame reproduces.
    pub truncated: bool,
}

/// The level through which the approximation norm's terms can be nonzero.
pub fn approx_top(f: &BandlimitedFunction) -> u32 {
    let s = f.spectral_support();
    if s < 1.0 {
        0
    } else {
        (s.ln() / 4f64.ln()).floor() as u32
    }
}

/// All three norms of `f`; the sequence norm uses the unnormalized frame
/// coefficients `s^j_k / √b^j_k`.
pub fn norm_comparison(f: &BandlimitedFunction, params: &BesovParams, frame: &NeedletFrame) -> Result<NormComparison> {
    if params.a != frame.a() || params.n != frame.manifold().n {
        return Err(Error::InvalidParameter(format!(
            "params (a = {}, n = {}) do not match the frame (a = {}, n = {})",
            params.a,
            params.n,
            frame.a(),
            frame.manifold().n
        )));
    }
    let s = frame.analyze(f)?;
    let truncated = s.truncated;
    let sequence = sequence_quasinorm(&s.unnormalized(frame)?, params);
    let function_norms = params.p >= 1.0;
    let approx = if function_norms && params.q.is_finite() {
        Some(approx_norm(f, params, approx_top(f))?.value)
    } else {
        None
    };
    let lp = if function_norms { Some(littlewood_paley_norm(f, params)?) } else { None };
    let ratios = match (approx, lp) {
        (Some(ap), Some(l)) => Some(NormRatios {
            sequence_over_lp: sequence / l,
            approx_over_lp: ap / l,
            sequence_over_approx: sequence / ap,
        }),
        _ => None,
    };
    Ok(NormComparison { sequence, approx, lp, ratios, truncated })
}

/// Fitted smoothness from the level decay of `‖s^j‖_p`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SmoothnessEstimate {
    pub alpha: f64,
    /// Slope of `log_a ‖s^j‖_p` against `j`.
    pub slope: f64,
    pub slope_stderr: f64,
    pub levels: Vec<i32>,
}

/// `α = n/p - slope`, the slope fitted by least squares over the nonvacuous
/// levels (optionally restricted to `levels = (lo, hi)`).
///
/// With the sequence-norm weight `a^{j(α-n/p)}`, coefficients decaying like
/// `a^{-j(α-n/p)}` have smoothness `α`.
pub fn smoothness_estimate(s: &FrameCoefficients, p: f64, levels: Option<(i32, i32)>) -> Result<SmoothnessEstimate> {
    if !(p > 0.0) {
        return Err(Error::InvalidParameter(format!("p = {p} must be positive")));
    }
    let ln_a = s.a.ln();
    let pts: Vec<(f64, f64)> = s
        .levels
        .iter()
        .filter(|l| levels.is_none_or(|(lo, hi)| (lo..=hi).contains(&l.j)))
        .filter_map(|l| {
            let v = lp_sum(&l.values, p);
            (v > 0.0).then(|| (l.j as f64, v.ln() / ln_a))
        })
        .collect();
    if pts.len() < 3 {
        return Err(Error::InsufficientLevels { found: pts.len() });
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let sse: f64 = pts.iter().map(|p| (p.1 - my - slope * (p.0 - mx)).powi(2)).sum();
    let slope_stderr = if pts.len() > 2 { (sse / (n - 2.0) / sxx).sqrt() } else { 0.0 };
    let np = if p.is_infinite() { 0.0 } else { s.n as f64 / p };
    Ok(SmoothnessEstimate { alpha: np - slope, slope, slope_stderr, levels: pts.iter().map(|p| p.0 as i32).collect() })
}

/// Test-function families used in norm sweeps.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    /// A single eigenfunction at `λ ≈ 4^J`.
    Dilation,
    /// `|c_m| = (1+√λ_m)^{-α₀-n/2}` with random signs, truncated at `λ <= 4^J`.
    Decay,
    /// The kernel `K_t(x₀, ·)` at `t = 2^{2-J}`, supported in `λ < 4^J`.
    Bump,
}

impl Family {
    pub const ALL: [Family; 3] = [Family::Dilation, Family::Decay, Family::Bump];

    pub fn as_str(self) -> &'static str {
        match self {
            Family::Dilation => "dilation",
            Family::Decay => "decay",
            Family::Bump => "bump",
        }
    }
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Family {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Family::ALL
            .into_iter()
            .find(|f| f.as_str() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown family {s:?}")))
    }
}

/// Planted smoothness of the decay family member.
pub const DECAY_ALPHA: f64 = 1.0;

/// Zero-mean member of `family` at scale `J`, living in `E_{4^J}`.
pub fn family_member(m: &ManifoldSpec, family: Family, scale: u32, seed: u64) -> Result<BandlimitedFunction> {
    let band = 4f64.powi(scale as i32);
    match family {
        Family::Dilation => {
            let basis = Arc::new(eigen_basis(m, band)?);
            let k = 1usize << scale;
            let idx = basis
                .entries()
                .iter()
                .position(|e| match (m.kind, e.label) {
                    (ManifoldKind::Circle, BasisLabel::Circle(Trig::Cos(f))) => f == k,
                    (ManifoldKind::Torus2, BasisLabel::Torus(Trig::Cos(f), Trig::Const)) => f == k,
                    (ManifoldKind::Sphere2, BasisLabel::Sphere { l, m: 0 }) => l + 1 == k,
                    _ => false,
                })
                .expect("dilation mode lies in the band");
            BandlimitedFunction::unit(basis, idx)
        }
        Family::Decay => planted_decay(m, band, DECAY_ALPHA, seed),
        Family::Bump => {
            let w = make_window(2.0)?;
            let basis = Arc::new(eigen_basis(m, band)?);
            let t = 2f64.powi(2 - scale as i32);
            let x0 = match m.kind {
                ManifoldKind::Circle => Point::circle(1.0),
                ManifoldKind::Torus2 => Point::torus(1.0, 2.0),
                ManifoldKind::Sphere2 => Point::sphere(1.0, 2.0),
            };
            let u = basis.eval_all_vec(&x0);
            let c = basis.eigenvalues().zip(&u).map(|(l, v)| w.f(t * t * l) * v).collect();
            BandlimitedFunction::new(basis, c)
        }
    }
}

/// `c_m = ±(1+√λ_m)^{-α₀-n/2}` for `0 < λ_m <= ω`, random signs; its dyadic
/// pieces decay like `2^{-jα₀}` in `L²`.
pub fn planted_decay(m: &ManifoldSpec, omega: f64, alpha0: f64, seed: u64) -> Result<BandlimitedFunction> {
    let basis = Arc::new(eigen_basis(m, omega)?);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let e = alpha0 + m.n as f64 / 2.0;
    let c = basis
        .eigenvalues()
        .map(|l| {
            let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
            if l == 0.0 {
                0.0
            } else {
                sign * (1.0 + l.sqrt()).powf(-e)
            }
        })
        .collect();
    BandlimitedFunction::new(basis, c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frames::{build_frame, LevelCoefficients};
    use crate::manifold::make_manifold;
    use approx::assert_abs_diff_eq;

    fn coeffs(levels: Vec<(i32, Vec<f64>)>) -> FrameCoefficients {
        FrameCoefficients {
            a: 2.0,
            n: 1,
            levels: levels.into_iter().map(|(j, values)| LevelCoefficients { j, values }).collect(),
            truncated: false,
        }
    }

    #[test]
    fn params_validation() {
        assert!(BesovParams::new(f64::NAN, 2.0, 2.0, 2.0, 1).is_err());
        assert!(BesovParams::new(1.0, 0.0, 2.0, 2.0, 1).is_err());
        assert!(BesovParams::new(1.0, 2.0, -1.0, 2.0, 1).is_err());
        assert!(BesovParams::new(1.0, 2.0, 2.0, 1.0, 1).is_err());
        assert!(BesovParams::new(-3.0, 0.5, f64::INFINITY, 2.0, 2).is_ok());
        let p = BesovParams::new(1.0, f64::INFINITY, 2.0, 2.0, 1).unwrap();
        let json = serde_json::to_string(&p).unwrap();
        assert!(json.contains("\"inf\""));
        assert_eq!(serde_json::from_str::<BesovParams>(&json).unwrap(), p);
    }

    #[test]
    fn sequence_examples() {
        let p = BesovParams::new(1.5, 2.0, 2.0, 2.0, 1).unwrap();
        assert_eq!(sequence_quasinorm(&coeffs(vec![(0, vec![0.0; 4]), (1, vec![0.0; 8])]), &p), 0.0);
        let single = coeffs(vec![(0, vec![0.0; 4]), (3, vec![0.0, 1.0, 0.0])]);
        for (p_, q_) in [(2.0, 2.0), (0.5, 0.7), (f64::INFINITY, 1.0), (1.0, f64::INFINITY)] {
            let p = BesovParams::new(1.5, p_, q_, 2.0, 1).unwrap();
            let np = if p_.is_infinite() { 0.0 } else { 1.0 / p_ };
            assert_abs_diff_eq!(sequence_quasinorm(&single, &p), 2f64.powf(3.0 * (1.5 - np)), epsilon = 1e-12);
        }
        // α = n/p and p = q: the plain ℓ^p norm.
        let s = coeffs(vec![(-1, vec![0.3, -1.2]), (0, vec![2.0, 0.1, 0.5]), (2, vec![-0.7])]);
        for p_ in [0.5, 1.0, 3.0] {
            let p = BesovParams::new(1.0 / p_, p_, p_, 2.0, 1).unwrap();
            let plain: f64 = s.levels.iter().flat_map(|l| &l.values).map(|v| v.abs().powf(p_)).sum::<f64>().powf(1.0 / p_);
            assert_abs_diff_eq!(sequence_quasinorm(&s, &p), plain, epsilon = 1e-12);
        }
    }

    #[test]
    fn best_approx_examples() {
        let c = make_manifold(ManifoldKind::Circle);
        let basis = Arc::new(eigen_basis(&c, 400.0).unwrap());
        // c_k = 2^{-k} on cos kx.
        let mut g = BandlimitedFunction::zeros(basis.clone());
        for (i, e) in basis.entries().iter().enumerate() {
            match e.label {
                BasisLabel::Circle(Trig::Cos(k)) => g.coeffs_mut()[i] = 2f64.powi(-(k as i32)),
                BasisLabel::Circle(Trig::Const) => g.coeffs_mut()[i] = 1.0,
                _ => {}
            }
        }
        for k in [1i32, 3, 7] {
            let want: f64 = (k..=20).map(|i| 4f64.powi(-i)).sum::<f64>().sqrt();
            let got = best_approx_error(&g, (k * k) as f64, 2.0).unwrap();
            assert_abs_diff_eq!(got.value, want, epsilon = 1e-12);
            assert!(!got.upper_bound);
        }
        let low = BandlimitedFunction::random(Arc::new(eigen_basis(&c, 24.0).unwrap()), &mut ChaCha8Rng::seed_from_u64(2));
        for p in [1.0, 2.0, 3.0, f64::INFINITY] {
            assert_eq!(best_approx_error(&low, 25.0, p).unwrap().value, 0.0);
        }
        let u = BandlimitedFunction::unit(basis.clone(), 9).unwrap();
        assert_abs_diff_eq!(best_approx_error(&u, u.spectral_support(), 2.0).unwrap().value, 1.0, epsilon = 1e-15);
        assert!(best_approx_error(&u, 1.0, 3.0).unwrap().upper_bound);
        assert!(best_approx_error(&u, 1.0, 0.5).is_err());
    }

    #[test]
    fn approx_norm_examples() {
        let c = make_manifold(ManifoldKind::Circle);
        let basis = Arc::new(eigen_basis(&c, 64.0).unwrap());
        let p = BesovParams::new(1.0, 2.0, 2.0, 2.0, 1).unwrap();
        let one = BandlimitedFunction::constant(basis.clone(), 3.0);
        let r = approx_norm(&one, &p, 4).unwrap();
        assert_abs_diff_eq!(r.value, 3.0 * (2.0 * std::f64::consts::PI).sqrt(), epsilon = 1e-12);
        // u₁ has λ = 1: only j = 0 has 4^j <= 1.
        let u1 = BandlimitedFunction::unit(basis.clone(), 1).unwrap();
        let r = approx_norm(&u1, &p, 4).unwrap();
        assert_abs_diff_eq!(r.value, 2.0, epsilon = 1e-12);
        assert_eq!(r.tail_term, 0.0);
        let qinf = BesovParams::new(1.0, 2.0, f64::INFINITY, 2.0, 1).unwrap();
        assert!(matches!(approx_norm(&u1, &qinf, 4), Err(Error::Refused(_))));
        let p1 = BesovParams::new(1.0, 1.0, 2.0, 2.0, 1).unwrap();
        assert!(approx_norm(&u1, &p1, 2).unwrap().unverified);
    }

    #[test]
    fn approx_norm_on_geometric_decay() {
        // c_k = 2^{-k}: 𝓔(F, 4^j) ≈ 2^{-2^j}, so every α gives a finite norm and
        // the partial sums settle.
        let c = make_manifold(ManifoldKind::Circle);
        let basis = Arc::new(eigen_basis(&c, 4096.0).unwrap());
        let mut g = BandlimitedFunction::zeros(basis.clone());
        for (i, e) in basis.entries().iter().enumerate() {
            if let BasisLabel::Circle(Trig::Cos(k)) = e.label {
                g.coeffs_mut()[i] = 2f64.powi(-(k as i32));
            }
        }
        for alpha in [0.5, 2.0, 8.0] {
            let p = BesovParams::new(alpha, 2.0, 2.0, 2.0, 1).unwrap();
            let a5 = approx_norm(&g, &p, 5).unwrap();
            let a6 = approx_norm(&g, &p, 6).unwrap();
            assert!(a6.value - a5.value <= a5.tail_term + 1e-15);
        }
    }

    #[test]
    fn lp_partition() {
        let lp = LittlewoodPaley::default();
        for i in 0..1000 {
            let l = 2f64.powf(-30.0 + 60.0 * i as f64 / 999.0);
            let s: f64 = (-1..=lp.top(l)).map(|nu| lp.beta(nu, l).powi(2)).sum();
            assert_abs_diff_eq!(s, 1.0, epsilon = 1e-12);
            // Above 2^{2j+4} only ν >= j+1 remain.
            for j in 0..6 {
                if l >= 2f64.powi(2 * j + 4) {
                    let upper: f64 = (j + 1..=lp.top(l)).map(|nu| lp.beta(nu, l).powi(2)).sum();
                    assert_abs_diff_eq!(upper, 1.0, epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn lp_examples() {
        let s = make_manifold(ManifoldKind::Sphere2);
        let basis = Arc::new(eigen_basis(&s, 90.0).unwrap());
        let p = BesovParams::new(0.7, 3.0, 2.0, 2.0, 2).unwrap();
        let u0 = BandlimitedFunction::unit(basis.clone(), 0).unwrap();
        let want = 2f64.powf(-0.7) * u0.lp_norm(3.0).unwrap();
        assert_abs_diff_eq!(littlewood_paley_norm(&u0, &p).unwrap(), want, epsilon = 1e-12);
        let lp = LittlewoodPaley::default();
        for m in [1usize, 7, 40] {
            let lam = basis.eigenvalue(m);
            let active = (-1..=lp.top(lam)).filter(|&nu| lp.beta(nu, lam) != 0.0).count();
            assert!(active <= 3);
        }
        let f = BandlimitedFunction::random(basis, &mut ChaCha8Rng::seed_from_u64(4));
        for alpha in [-1.0, 0.5, 2.0] {
            let p = BesovParams::new(alpha, 2.0, 2.0, 2.0, 2).unwrap();
            let quad = littlewood_paley_norm(&f, &p).unwrap();
            let coef = littlewood_paley_norm_l2_coefficients(&f, alpha);
            assert_abs_diff_eq!(quad, coef, epsilon = 1e-10 * coef);
        }
    }

    #[test]
    fn smoothness_from_manufactured_levels() {
        let alpha0 = 1.3;
        let p = 2.0;
        let s = coeffs(
            (0..6)
                .map(|j| {
                    let lvl = 2f64.powf(-(j as f64) * (alpha0 - 1.0 / p));
                    (j, vec![lvl / 2f64.sqrt(); 2])
                })
                .collect(),
        );
        let e = smoothness_estimate(&s, p, None).unwrap();
        assert_abs_diff_eq!(e.alpha, alpha0, epsilon = 1e-6);
        let one = coeffs(vec![(2, vec![1.0, 2.0])]);
        assert!(matches!(smoothness_estimate(&one, 2.0, None), Err(Error::InsufficientLevels { found: 1 })));
    }

    #[test]
    fn comparison_homogeneity_and_zero() {
        let c = make_manifold(ManifoldKind::Circle);
        let frame = build_frame(&c, 2.0, 4, 0).unwrap();
        let p = BesovParams::new(1.0, 2.0, 2.0, 2.0, 1).unwrap();
        let f = family_member(&c, Family::Dilation, 2, 0).unwrap();
        let one = norm_comparison(&f, &p, &frame).unwrap();
        let two = norm_comparison(&f.scale(2.0), &p, &frame).unwrap();
        assert_abs_diff_eq!(two.sequence, 2.0 * one.sequence, epsilon = 1e-12 * one.sequence);
        assert_abs_diff_eq!(two.approx.unwrap(), 2.0 * one.approx.unwrap(), epsilon = 1e-12);
        assert_abs_diff_eq!(two.lp.unwrap(), 2.0 * one.lp.unwrap(), epsilon = 1e-12);
        let z = norm_comparison(&f.scale(0.0), &p, &frame).unwrap();
        assert_eq!((z.sequence, z.approx, z.lp), (0.0, Some(0.0), Some(0.0)));
        let wrong = BesovParams::new(1.0, 2.0, 2.0, 3.0, 1).unwrap();
        assert!(norm_comparison(&f, &wrong, &frame).is_err());
    }

    #[test]
    fn families_are_zero_mean() {
        for kind in ManifoldKind::ALL {
            let m = make_manifold(kind);
            for fam in Family::ALL {
                let f = family_member(&m, fam, 2, 1).unwrap();
                assert!(f.coeffs()[0].abs() < 1e-15, "{kind} {fam}");
                assert!(f.l2_norm() > 0.0);
            }
        }
    }
}
