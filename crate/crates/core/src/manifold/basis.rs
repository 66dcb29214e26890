use std::f64::consts::PI;

use super::legendre::{normalized_legendre, tri_index};
use super::{ManifoldKind, ManifoldSpec, Point, DEFAULT_BASIS_CAP};
use crate::error::{Error, Result};

/// One-dimensional real Fourier mode.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Trig {
    Const,
    Cos(usize),
    Sin(usize),
}

impl Trig {
    pub fn freq(self) -> usize {
        match self {
            Trig::Const => 0,
            Trig::Cos(k) | Trig::Sin(k) => k,
        }
    }

    /// Position in the table `[1, cos x, sin x, cos 2x, sin 2x, ...]`.
    fn slot(self) -> usize {
        match self {
            Trig::Const => 0,
            Trig::Cos(k) => 2 * k - 1,
            Trig::Sin(k) => 2 * k,
        }
    }

    fn modes(k: usize) -> Vec<Trig> {
        if k == 0 {
            vec![Trig::Const]
        } else {
            vec![Trig::Cos(k), Trig::Sin(k)]
        }
    }
}

/// Identifies an eigenfunction of the canonical enumeration.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BasisLabel {
    Circle(Trig),
    Torus(Trig, Trig),
    /// Real spherical harmonic; `m < 0` selects the `sin(|m|φ)` member.
    Sphere { l: usize, m: i64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BasisEntry {
    pub eigenvalue: f64,
    pub label: BasisLabel,
}

/// Real orthonormal eigenbasis of `L` truncated at `λ <= ω`.
///
/// Entries are ordered by eigenvalue, then by label, so a basis at a smaller
/// bandwidth is always a prefix of one at a larger bandwidth.
#[derive(Clone, Debug)]
pub struct SpectralBasis {
    manifold: ManifoldSpec,
    omega: f64,
    degree: usize,
    entries: Vec<BasisEntry>,
    // Torus only: slots into the 1D tables for each entry.
    torus_slots: Vec<(u32, u32)>,
}

/// Largest integer `k` with `k² <= w`.
pub(crate) fn isqrt_floor(w: f64) -> usize {
    if w < 0.0 {
        return 0;
    }
    let mut k = w.sqrt().floor() as usize;
    while ((k + 1) * (k + 1)) as f64 <= w {
        k += 1;
    }
    while k > 0 && (k * k) as f64 > w {
        k -= 1;
    }
    k
}

/// Largest `l` with `l(l+1) <= w`.
pub(crate) fn sphere_degree(w: f64) -> usize {
    if w < 0.0 {
        return 0;
    }
    let mut l = ((w + 0.25).sqrt() - 0.5).floor().max(0.0) as usize;
    while ((l + 1) * (l + 2)) as f64 <= w {
        l += 1;
    }
    while l > 0 && (l * (l + 1)) as f64 > w {
        l -= 1;
    }
    l
}

/// Maximal frequency (circle, per-axis torus) or degree (sphere) in `E_ω`.
pub(crate) fn max_degree(m: &ManifoldSpec, omega: f64) -> usize {
    match m.kind {
        ManifoldKind::Circle | ManifoldKind::Torus2 => isqrt_floor(omega),
        ManifoldKind::Sphere2 => sphere_degree(omega),
    }
}

/// Exact dimension of `E_ω`.
pub fn weyl_count(m: &ManifoldSpec, omega: f64) -> usize {
    if omega.is_nan() || omega < 0.0 {
        return 0;
    }
    match m.kind {
        ManifoldKind::Circle => 1 + 2 * isqrt_floor(omega),
        ManifoldKind::Torus2 => {
            let k = isqrt_floor(omega) as i64;
            (-k..=k)
                .map(|k1| 2 * isqrt_floor(omega - (k1 * k1) as f64) + 1)
                .sum()
        }
        ManifoldKind::Sphere2 => {
            let l = sphere_degree(omega);
            (l + 1) * (l + 1)
        }
    }
}

pub fn eigen_basis(m: &ManifoldSpec, omega: f64) -> Result<SpectralBasis> {
    eigen_basis_with_cap(m, omega, DEFAULT_BASIS_CAP)
}

pub fn eigen_basis_with_cap(m: &ManifoldSpec, omega: f64, cap: usize) -> Result<SpectralBasis> {
    if omega.is_nan() || omega < 0.0 {
        return Err(Error::InvalidParameter(format!("omega = {omega} must be >= 0")));
    }
    let count = weyl_count(m, omega);
    if count > cap {
        return Err(Error::BasisTooLarge { requested: count, cap });
    }
    let degree = max_degree(m, omega);
    let mut entries = Vec::with_capacity(count);
    let mut torus_slots = Vec::new();
    match m.kind {
        ManifoldKind::Circle => {
            for k in 0..=degree {
                for mode in Trig::modes(k) {
                    entries.push(BasisEntry { eigenvalue: (k * k) as f64, label: BasisLabel::Circle(mode) });
                }
            }
        }
        ManifoldKind::Torus2 => {
            let mut raw = Vec::with_capacity(count);
            for k1 in 0..=degree {
                for k2 in 0..=degree {
                    let lambda = (k1 * k1 + k2 * k2) as f64;
                    if lambda > omega {
                        continue;
                    }
                    for m1 in &Trig::modes(k1) {
                        for m2 in &Trig::modes(k2) {
                            raw.push((k1 * k1 + k2 * k2, *m1, *m2));
                        }
                    }
                }
            }
            raw.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
            for (lambda, t1, t2) in raw {
                entries.push(BasisEntry { eigenvalue: lambda as f64, label: BasisLabel::Torus(t1, t2) });
                torus_slots.push((t1.slot() as u32, t2.slot() as u32));
            }
        }
        ManifoldKind::Sphere2 => {
            for l in 0..=degree {
                for mm in -(l as i64)..=(l as i64) {
                    entries.push(BasisEntry { eigenvalue: (l * (l + 1)) as f64, label: BasisLabel::Sphere { l, m: mm } });
                }
            }
        }
    }
    debug_assert_eq!(entries.len(), count);
    Ok(SpectralBasis { manifold: *m, omega, degree, entries, torus_slots })
}

fn fill_trig_table(x: f64, degree: usize, table: &mut [f64]) {
    let c0 = 1.0 / (2.0 * PI).sqrt();
    let c1 = 1.0 / PI.sqrt();
    table[0] = c0;
    for k in 1..=degree {
        let (s, c) = (k as f64 * x).sin_cos();
        table[2 * k - 1] = c1 * c;
        table[2 * k] = c1 * s;
    }
}

impl SpectralBasis {
    pub fn manifold(&self) -> &ManifoldSpec {
        &self.manifold
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[BasisEntry] {
        &self.entries
    }

    pub fn eigenvalue(&self, m: usize) -> f64 {
        self.entries[m].eigenvalue
    }

    pub fn eigenvalues(&self) -> impl Iterator<Item = f64> + '_ {
        self.entries.iter().map(|e| e.eigenvalue)
    }

    /// Maximal frequency or spherical degree present.
    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Largest eigenvalue present.
    pub fn lambda_max(&self) -> f64 {
        self.entries.last().map_or(0.0, |e| e.eigenvalue)
    }

    /// Number of leading entries with eigenvalue `<= omega`.
    pub fn count_upto(&self, omega: f64) -> usize {
        self.entries.partition_point(|e| e.eigenvalue <= omega)
    }

    /// Evaluates every basis function at `x` into `out` (length `len()`).
    pub fn eval_all(&self, x: &Point, out: &mut [f64]) {
        assert_eq!(out.len(), self.len(), "output buffer length");
        match (self.manifold.kind, x) {
            (ManifoldKind::Circle, Point::Circle(t)) => fill_trig_table(*t, self.degree, out),
            (ManifoldKind::Torus2, Point::Torus(t1, t2)) => {
                let n = 2 * self.degree + 1;
                let mut tx = vec![0.0; n];
                let mut ty = vec![0.0; n];
                fill_trig_table(*t1, self.degree, &mut tx);
                fill_trig_table(*t2, self.degree, &mut ty);
                for (o, &(i, j)) in out.iter_mut().zip(&self.torus_slots) {
                    *o = tx[i as usize] * ty[j as usize];
                }
            }
            (ManifoldKind::Sphere2, Point::Sphere(v)) => {
                let l_max = self.degree;
                let mut table = vec![0.0; tri_index(l_max, l_max) + 1];
                let z = v[2].clamp(-1.0, 1.0);
                let s = v[0].hypot(v[1]);
                normalized_legendre(l_max, z, s, &mut table);
                let (cp, sp) = if s > 0.0 { (v[0] / s, v[1] / s) } else { (1.0, 0.0) };
                let phi = sp.atan2(cp);
                let mut cs = vec![(1.0, 0.0); l_max + 1];
                for (m, slot) in cs.iter_mut().enumerate().skip(1) {
                    let (sm, cm) = (m as f64 * phi).sin_cos();
                    *slot = (cm, sm);
                }
                let r2 = std::f64::consts::SQRT_2;
                for l in 0..=l_max {
                    let base = l * l + l;
                    out[base] = table[tri_index(l, 0)];
                    for m in 1..=l {
                        let p = r2 * table[tri_index(l, m)];
                        out[base + m] = p * cs[m].0;
                        out[base - m] = p * cs[m].1;
                    }
                }
            }
            _ => panic!("point {x:?} is not on {}", self.manifold.kind),
        }
    }

    pub fn eval_all_vec(&self, x: &Point) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        self.eval_all(x, &mut out);
        out
    }

    /// Value of basis function `m` at `x`.
    pub fn eval(&self, m: usize, x: &Point) -> Result<f64> {
        if m >= self.len() {
            return Err(Error::IndexOutOfRange { index: m, len: self.len() });
        }
        let c0 = 1.0 / (2.0 * PI).sqrt();
        let c1 = 1.0 / PI.sqrt();
        let trig = |t: Trig, x: f64| match t {
            Trig::Const => c0,
            Trig::Cos(k) => c1 * (k as f64 * x).cos(),
            Trig::Sin(k) => c1 * (k as f64 * x).sin(),
        };
        Ok(match (self.entries[m].label, x) {
            (BasisLabel::Circle(t), Point::Circle(a)) => trig(t, *a),
            (BasisLabel::Torus(t1, t2), Point::Torus(a, b)) => trig(t1, *a) * trig(t2, *b),
            (BasisLabel::Sphere { .. }, Point::Sphere(_)) => {
                // A single harmonic costs a full degree sweep anyway.
                self.eval_all_vec(x)[m]
            }
            _ => return Err(Error::ManifoldMismatch(format!("point {x:?} is not on {}", self.manifold.kind))),
        })
    }
}
