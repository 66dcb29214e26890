//! Verification reports and their deterministic serialization.
//!
//! Floats are written with 17 significant digits (`{:.16e}`), so equal runs
//! give byte-identical files and every value parses back to the same bits.

use std::collections::BTreeMap;
use std::io;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter, Serializer};

use crate::error::Result;
use crate::frames::{localization_sweep, NeedletFrame};
use crate::manifold::eigen_basis;
use crate::spectral::BandlimitedFunction;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    AtMost,
    AtLeast,
    Above,
}

/// One named check `value <relation> bound`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    /// The invariant this check instantiates.
    pub invariant: String,
    pub value: f64,
    pub bound: f64,
    pub relation: Relation,
    pub pass: bool,
}

impl Check {
    pub fn new(name: &str, invariant: &str, value: f64, relation: Relation, bound: f64) -> Self {
        let pass = match relation {
            Relation::AtMost => value <= bound,
            Relation::AtLeast => value >= bound,
            Relation::Above => value > bound,
        };
        Check { name: name.into(), invariant: invariant.into(), value, bound, relation, pass }
    }

    pub fn at_most(name: &str, invariant: &str, value: f64, bound: f64) -> Self {
        Self::new(name, invariant, value, Relation::AtMost, bound)
    }

    pub fn at_least(name: &str, invariant: &str, value: f64, bound: f64) -> Self {
        Self::new(name, invariant, value, Relation::AtLeast, bound)
    }

    pub fn above(name: &str, invariant: &str, value: f64, bound: f64) -> Self {
        Self::new(name, invariant, value, Relation::Above, bound)
    }

    /// Scales an upper bound by `factor` (lower bounds are left alone).
    pub fn relaxed(mut self, factor: f64) -> Self {
        if self.relation == Relation::AtMost {
            self = Self::new(&self.name, &self.invariant, self.value, self.relation, self.bound * factor);
        }
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub version: String,
    pub seed: u64,
    /// Seconds since the epoch, taken from `SOURCE_DATE_EPOCH` when set.
    pub timestamp: Option<String>,
}

impl Environment {
    pub fn capture(seed: u64) -> Self {
        Environment {
            version: env!("CARGO_PKG_VERSION").into(),
            seed,
            timestamp: std::env::var("SOURCE_DATE_EPOCH").ok(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub command: String,
    pub pass: bool,
    pub checks: Vec<Check>,
    pub environment: Environment,
    /// Input name to SHA-256 hex digest.
    pub digests: BTreeMap<String, String>,
    /// Free-form numeric results, keyed by name.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub values: BTreeMap<String, serde_json::Value>,
}

impl VerificationReport {
    pub fn new(command: &str, seed: u64) -> Self {
        VerificationReport {
            command: command.into(),
            pass: true,
            checks: Vec::new(),
            environment: Environment::capture(seed),
            digests: BTreeMap::new(),
            values: BTreeMap::new(),
        }
    }

    pub fn push(&mut self, check: Check) {
        self.pass &= check.pass;
        self.checks.push(check);
    }

    pub fn extend(&mut self, checks: impl IntoIterator<Item = Check>) {
        for c in checks {
            self.push(c);
        }
    }

    pub fn value(&mut self, key: &str, v: impl Serialize) -> Result<()> {
        self.values.insert(key.into(), serde_json::to_value(v)?);
        Ok(())
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }
}

/// Formats a float with 17 significant digits.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

/// Pretty JSON with fixed-precision floats.
struct FixedFloats(PrettyFormatter<'static>);

impl Formatter for FixedFloats {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, v: f64) -> io::Result<()> {
        w.write_all(format_float(v).as_bytes())
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, w: &mut W, v: f32) -> io::Result<()> {
        self.write_f64(w, v as f64)
    }

    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }

    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }

    fn begin_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }

    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }

    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }

    fn begin_object_key<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

/// Serializes `value` as pretty JSON with 17-significant-digit floats.
pub fn to_json<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = Serializer::with_formatter(&mut buf, FixedFloats(PrettyFormatter::new()));
    value.serialize(&mut ser)?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json writes UTF-8"))
}

/// Default acceptance tolerances.
pub mod tol {
    pub const PARTITION: f64 = 1e-12;
    pub const EXACTNESS: f64 = 1e-9;
    pub const WEIGHT_SPREAD: f64 = 20.0;
    pub const PARSEVAL: f64 = 1e-8;
    pub const RECONSTRUCTION: f64 = 1e-8;
    pub const LOCALIZATION: f64 = 4.0;
}

/// Checks a frame: window partition, weight positivity and spread, level
/// exactness, Parseval and reconstruction on `draws` seeded random zero-mean
/// functions in `E_{a^{2J_max}}`, and kernel localization over `j ∈ {0,1,2}`.
pub fn verify_frame(frame: &NeedletFrame, seed: u64, draws: usize) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    let w = frame.window();
    checks.push(Check::at_most(
        "partition_of_unity",
        "window: sum_j f(a^-2j s)^2 = 1",
        w.partition_deviation(-40.0, 40.0, 1000),
        tol::PARTITION,
    ));
    let min_weight = frame.levels().iter().flat_map(|l| &l.weights).cloned().fold(f64::INFINITY, f64::min);
    checks.push(Check::above("weights_positive", "frame: b^j_k > 0", min_weight, 0.0));
    let spread = frame
        .levels()
        .iter()
        .map(|l| {
            let hi = l.weights.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let lo = l.weights.iter().cloned().fold(f64::INFINITY, f64::min);
            if lo > 0.0 {
                hi / lo
            } else {
                f64::INFINITY
            }
        })
        .fold(0.0, f64::max);
    checks.push(Check::at_most("weight_spread", "frame: b^j_k in [c1 rho^n, c2 rho^n]", spread, tol::WEIGHT_SPREAD));
    checks.push(Check::at_most(
        "level_exactness",
        "frame: each level cubature exact on E_{4d a^(2j+4)}",
        frame.exactness_residual()?,
        tol::EXACTNESS,
    ));

    let basis = std::sync::Arc::new(eigen_basis(frame.manifold(), frame.in_band())?);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let fs: Vec<BandlimitedFunction> =
        (0..draws).map(|_| BandlimitedFunction::random(basis.clone(), &mut rng).zero_mean()).collect();
    if basis.len() > 1 && draws > 0 {
        let parseval = frame.parseval_many(&fs)?.iter().map(|c| c.residual).fold(0.0, f64::max);
        checks.push(Check::at_most("parseval", "frame: sum |s|^2 = ||(I-P)F||^2", parseval, tol::PARSEVAL));
        let mut recon: f64 = 0.0;
        for (f, s) in fs.iter().zip(frame.analyze_many(&fs)?) {
            let g = frame.synthesize(&s)?;
            let err: f64 = g.coeffs().iter().zip(f.coeffs()).map(|(a, b)| (a - b).powi(2)).sum::<f64>()
                + g.coeffs().iter().skip(f.coeffs().len()).map(|a| a * a).sum::<f64>();
            recon = recon.max(err.sqrt() / f.l2_norm());
        }
        checks.push(Check::at_most("reconstruction", "frame: synthesis of analysis is I-P", recon, tol::RECONSTRUCTION));
    }

    let x = frame.levels()[0].points[0];
    let sweep = localization_sweep(frame.manifold(), w, &x, &[0, 1, 2], &[1, 2, 3], tol::LOCALIZATION)?;
    for s in &sweep.stability {
        checks.push(Check::at_most(
            &format!("localization_c{}", s.n),
            "kernel: t^n |K_t| (1 + d/t)^N bounded uniformly in t",
            s.ratio,
            tol::LOCALIZATION,
        ));
    }
    Ok(checks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frames::build_frame;
    use crate::manifold::{make_manifold, ManifoldKind};

    #[test]
    fn check_relations() {
        assert!(Check::at_most("a", "i", 1.0, 1.0).pass);
        assert!(!Check::at_most("a", "i", f64::NAN, 1.0).pass);
        assert!(!Check::above("a", "i", 0.0, 0.0).pass);
        assert!(Check::at_least("a", "i", 0.0, 0.0).pass);
        assert!(Check::at_most("a", "i", 2.0, 1.0).relaxed(3.0).pass);
        assert!(!Check::at_least("a", "i", 2.0, 3.0).relaxed(3.0).pass);
    }

    #[test]
    fn fixed_precision_round_trip() {
        let mut r = VerificationReport::new("test", 3);
        r.environment.timestamp = None;
        r.push(Check::at_most("x", "inv", 0.1 + 0.2, 1.0 / 3.0));
        r.push(Check::at_most("y", "inv", 1e-300, 5e300));
        let json = to_json(&r).unwrap();
        assert!(json.contains("3.0000000000000004e-1"));
        assert!(json.contains("3.3333333333333331e-1"));
        let back: VerificationReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back, r);
        assert_eq!(to_json(&back).unwrap(), json);
    }

    #[test]
    fn frame_verification_passes_and_catches_corruption() {
        let c = make_manifold(ManifoldKind::Circle);
        let frame = build_frame(&c, 2.0, 3, 0).unwrap();
        let checks = verify_frame(&frame, 9, 10).unwrap();
        assert!(checks.iter().all(|c| c.pass), "{checks:?}");
        let mut archive = frame.to_archive();
        archive.levels[1].weights[0] = -archive.levels[1].weights[0];
        let bad = NeedletFrame::from_archive(&archive).unwrap();
        let checks = verify_frame(&bad, 9, 10).unwrap();
        assert!(checks.iter().any(|c| c.name == "weights_positive" && !c.pass));
    }
}
