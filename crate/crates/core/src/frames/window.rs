//! The dilation window `f` and its cutoff `Φ`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smooth cutoff `Φ` and window `f(t) = (Φ(t/a²) - Φ(t))^{1/2}`.
///
/// `Φ ≡ 1` on `[0, a⁻²]`, `Φ ≡ 0` on `[a², ∞)`, and in between it follows the
/// step `h(u) = g(u)/(g(u)+g(1-u))`, `g(u) = exp(-1/u)`, in `u = (log_a t + 2)/4`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowFunction {
    a: f64,
}

/// Step from 0 at `u <= 0` to 1 at `u >= 1`.
fn smooth_step(u: f64) -> f64 {
    if u <= 0.0 {
        0.0
    } else if u >= 1.0 {
        1.0
    } else {
        // g(u)/(g(u)+g(1-u)) = 1/(1 + exp(1/u - 1/(1-u)))
        1.0 / (1.0 + (1.0 / u - 1.0 / (1.0 - u)).exp())
    }
}

pub fn make_window(a: f64) -> Result<WindowFunction> {
    if !(a > 1.0) || !a.is_finite() {
        return Err(Error::InvalidParameter(format!("window base a = {a} must exceed 1")));
    }
    let w = WindowFunction { a };
    let dev = w.partition_deviation(-40.0, 40.0, 101);
    if dev > 1e-12 {
        return Err(Error::InvalidParameter(format!("window partition deviates by {dev:e}")));
    }
    Ok(w)
}

impl WindowFunction {
    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn phi(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 1.0;
        }
        let u = (t.ln() / self.a.ln() + 2.0) / 4.0;
        1.0 - smooth_step(u)
    }

    pub fn f_squared(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        (self.phi(t / (self.a * self.a)) - self.phi(t)).max(0.0)
    }

    pub fn f(&self, t: f64) -> f64 {
        self.f_squared(t).sqrt()
    }

    /// `f(a^{-2j} λ)`.
    pub fn level_multiplier(&self, j: i32, lambda: f64) -> f64 {
        self.f(self.a.powi(-2 * j) * lambda)
    }

    /// Support `[a⁻², a⁴]` of `f`.
    pub fn support(&self) -> (f64, f64) {
        (self.a.powi(-2), self.a.powi(4))
    }

    /// `Σ_j f(a^{-2j}s)²` over the levels where the summand can be nonzero.
    pub fn partition_sum(&self, s: f64) -> f64 {
        if s <= 0.0 {
            return 0.0;
        }
        let c = s.ln() / self.a.ln() / 2.0;
        let lo = (c - 2.0).floor() as i32;
        let hi = (c + 1.0).ceil() as i32;
        (lo..=hi).map(|j| self.f_squared(self.a.powi(-2 * j) * s)).sum()
    }

    /// Max of `|Σ_j f(a^{-2j}s)² - 1|` over `count` points `s = a^e`, `e`
    /// evenly spaced in `[e_lo, e_hi]`.
    pub fn partition_deviation(&self, e_lo: f64, e_hi: f64, count: usize) -> f64 {
        let step = if count > 1 { (e_hi - e_lo) / (count - 1) as f64 } else { 0.0 };
        (0..count)
            .map(|i| (self.partition_sum(self.a.powf(e_lo + step * i as f64)) - 1.0).abs())
            .fold(0.0, f64::max)
    }
}
