//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails. Set `NEEDLETS_EXTENDED=1` to add the sphere frame at
//! `J_max = 2` (about two minutes).

use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use needlet_core::besov::{norm_comparison, planted_decay, smoothness_estimate, BesovParams, Family};
use needlet_core::cubature::{auto_cubature, auto_rho};
use needlet_core::frames::{build_frame, kernel_localization, localization_sweep, make_window, NeedletFrame};
use needlet_core::lattice::cardinality_bounds;
use needlet_core::manifold::{eigen_basis, make_manifold, ManifoldKind, ManifoldSpec, Point};
use needlet_core::report::{to_json, Check, VerificationReport};
use needlet_core::spectral::BandlimitedFunction;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const KINDS: [ManifoldKind; 3] = [ManifoldKind::Circle, ManifoldKind::Torus2, ManifoldKind::Sphere2];
const SWEEP: [f64; 3] = [16.0, 64.0, 256.0];
const DRAWS: usize = 100;

struct Outcome {
    report: VerificationReport,
    note: String,
}

impl Outcome {
    fn new(name: &str) -> Self {
        let mut report = VerificationReport::new(name, 0);
        report.environment.timestamp = None;
        Outcome { report, note: String::new() }
    }

    fn check(&mut self, c: Check) {
        self.report.push(c);
    }

    fn note(&mut self, s: impl AsRef<str>) {
        if !self.note.is_empty() {
            self.note.push_str("; ");
        }
        self.note.push_str(s.as_ref());
    }

    fn timed(&mut self, what: &str, elapsed: Duration, limit: Duration) {
        // Wall-clock time goes in the note only, so reports stay reproducible.
        let ok = elapsed <= limit;
        self.note(format!("{what} {:.2}s (limit {}s){}", elapsed.as_secs_f64(), limit.as_secs(), if ok { "" } else { " OVER" }));
        if !ok {
            self.report.pass = false;
        }
    }
}

fn ratio_band(v: &[f64]) -> f64 {
    v.iter().cloned().fold(0.0, f64::max) / v.iter().cloned().fold(f64::INFINITY, f64::min)
}

fn random_draws(m: &ManifoldSpec, omega: f64, count: usize, seed: u64) -> Vec<BandlimitedFunction> {
    let basis = Arc::new(eigen_basis(m, omega).unwrap());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| BandlimitedFunction::random(basis.clone(), &mut rng)).collect()
}

fn partition_of_unity() -> Outcome {
    let mut o = Outcome::new("window partition of unity");
    let start = Instant::now();
    for a in [1.5, 2.0, 3.0] {
        let w = make_window(a).unwrap();
        // Sum over a wide fixed range of levels, independent of the window's own truncation.
        let dev = (0..1000)
            .map(|i| {
                let s = a.powf(-30.0 + 60.0 * i as f64 / 999.0);
                let sum: f64 = (-60..=60).map(|j| w.f(a.powi(-2 * j) * s).powi(2)).sum();
                (sum - 1.0).abs()
            })
            .fold(0.0, f64::max);
        o.check(Check::at_most(&format!("deviation_a={a}"), "window: sum_j f(a^-2j s)^2 = 1", dev, 1e-12));
        o.note(format!("a={a}: {dev:.1e}"));
    }
    o.timed("runtime", start.elapsed(), Duration::from_secs(1));
    o
}

fn cubature_exactness() -> Outcome {
    let mut o = Outcome::new("cubature exactness");
    let plan: [(ManifoldKind, &[f64], u64); 3] = [
        (ManifoldKind::Circle, &[16.0, 256.0, 4096.0], 30),
        (ManifoldKind::Torus2, &[16.0, 64.0, 256.0], 30),
        (ManifoldKind::Sphere2, &[16.0, 64.0, 256.0, 768.0], 120),
    ];
    for (kind, omegas, limit) in plan {
        let m = make_manifold(kind);
        let start = Instant::now();
        for &omega in omegas {
            let c = auto_cubature(&m, omega, 0).unwrap();
            let s = c.stats();
            let tag = format!("{kind}:omega={omega}");
            let min_w = c.weights().iter().cloned().fold(f64::INFINITY, f64::min);
            o.check(Check::above(&format!("positive:{tag}"), "cubature: lambda_k > 0", min_w, 0.0));
            o.check(Check::at_most(&format!("residual:{tag}"), "cubature: |A^T lambda - c|_inf", s.exactness_residual, 1e-9));
            let spread = s.weight_ratio_max / s.weight_ratio_min;
            o.check(Check::at_most(&format!("spread:{tag}"), "cubature: c2/c1 of lambda_k / rho^n", spread, 20.0));
        }
        o.timed(kind.as_str(), start.elapsed(), Duration::from_secs(limit));
    }
    let worst = o.report.checks.iter().filter(|c| c.name.starts_with("spread")).map(|c| c.value).fold(0.0, f64::max);
    o.note(format!("worst spread {worst:.2}"));
    o
}

fn a0_stability() -> Outcome {
    let mut o = Outcome::new("a0 stability");
    for kind in KINDS {
        let m = make_manifold(kind);
        let a0: Vec<f64> = SWEEP.iter().map(|&w| auto_rho(&m, w).unwrap().1).collect();
        o.check(Check::at_most(&format!("a0_band:{kind}"), "cubature: a0 independent of omega", ratio_band(&a0), 1.5));
        o.note(format!("{kind} {a0:?}"));
    }
    o
}

fn plancherel_polya() -> Outcome {
    let mut o = Outcome::new("Plancherel-Polya");
    let mut worst: f64 = 0.0;
    for kind in KINDS {
        let m = make_manifold(kind);
        for (i, &omega) in SWEEP.iter().enumerate() {
            let c = auto_cubature(&m, omega, 0).unwrap();
            let pp = c.plancherel_polya();
            let tag = format!("{kind}:omega={omega}");
            o.check(Check::at_most(&format!("c2_over_c1:{tag}"), "sampling: c2/c1 bounded", pp.c2 / pp.c1, 10.0));
            worst = worst.max(pp.c2 / pp.c1);
            let scale = c.rho().powf(m.n as f64 / 2.0);
            let mut violation: f64 = 0.0;
            for f in random_draws(&m, omega, DRAWS, 400 + i as u64) {
                let v = f.evaluate_many(c.points());
                let discrete = scale * v.iter().map(|x| x * x).sum::<f64>().sqrt();
                let norm = f.l2_norm();
                violation = violation.max((pp.c1 * discrete - norm) / norm).max((norm - pp.c2 * discrete) / norm);
            }
            o.check(Check::at_most(&format!("inequality:{tag}"), "sampling: c1 |f|_rho <= |f| <= c2 |f|_rho", violation, 1e-10));
        }
    }
    o.note(format!("worst c2/c1 {worst:.2}"));
    o
}

fn cardinality() -> Outcome {
    let mut o = Outcome::new("lattice cardinality");
    for kind in KINDS {
        let m = make_manifold(kind);
        let r: Vec<_> = SWEEP.iter().map(|&w| cardinality_bounds(&m, w).unwrap()).collect();
        let lattice: Vec<f64> = r.iter().map(|x| x.ratio).collect();
        let weyl: Vec<f64> = r.iter().map(|x| x.weyl_ratio).collect();
        o.check(Check::at_most(&format!("lattice_band:{kind}"), "lattice: |M_rho| ~ omega^(n/2)", ratio_band(&lattice), 4.0));
        o.check(Check::at_most(&format!("weyl_band:{kind}"), "spectrum: N_omega ~ omega^(n/2)", ratio_band(&weyl), 4.0));
        o.note(format!("{kind} {:.2}/{:.2}", ratio_band(&lattice), ratio_band(&weyl)));
    }
    o
}

fn product_bandwidth() -> Outcome {
    let mut o = Outcome::new("product bandwidth");
    for (kind, omega) in [(ManifoldKind::Circle, 64.0), (ManifoldKind::Torus2, 16.0), (ManifoldKind::Sphere2, 16.0)] {
        let m = make_manifold(kind);
        let fs = random_draws(&m, omega, 400, 600);
        let mut worst: f64 = 0.0;
        for pair in fs.chunks(2) {
            let p = pair[0].multiply(&pair[1]).unwrap();
            let total = (p.function.l2_norm().powi(2) + p.residual_l2.powi(2)).sqrt();
            worst = worst.max(p.residual_l2 / total);
        }
        o.check(Check::at_most(&format!("tail_mass:{kind}"), "product: fg in E_{4d omega}", worst, 1e-10));
        o.note(format!("{kind} {worst:.1e}"));
    }
    o
}

struct FrameCase {
    kind: ManifoldKind,
    j_max: i32,
}

fn frame_cases() -> Vec<FrameCase> {
    let mut cases = vec![FrameCase { kind: ManifoldKind::Circle, j_max: 4 }, FrameCase { kind: ManifoldKind::Sphere2, j_max: 1 }];
    if std::env::var_os("NEEDLETS_EXTENDED").is_some() {
        cases.push(FrameCase { kind: ManifoldKind::Sphere2, j_max: 2 });
    }
    cases
}

fn frame_draws(frame: &NeedletFrame, seed: u64) -> Vec<BandlimitedFunction> {
    random_draws(frame.manifold(), frame.in_band(), DRAWS, seed).into_iter().map(|f| f.zero_mean()).collect()
}

fn parseval_and_reconstruction() -> (Outcome, Outcome) {
    let mut p = Outcome::new("Parseval identity");
    let mut r = Outcome::new("reconstruction");
    for case in frame_cases() {
        let start = Instant::now();
        let m = make_manifold(case.kind);
        let frame = build_frame(&m, 2.0, case.j_max, 0).unwrap();
        let fs = frame_draws(&frame, 700);
        let tag = format!("{}:jmax={}", case.kind, case.j_max);
        let parseval = frame.parseval_many(&fs).unwrap().iter().map(|c| c.residual).fold(0.0, f64::max);
        p.check(Check::at_most(&format!("residual:{tag}"), "frame: sum |s|^2 = ||(I-P)F||^2", parseval, 1e-8));
        let recon = fs.iter().map(|f| frame.reconstruction_error(f).unwrap()).fold(0.0, f64::max);
        r.check(Check::at_most(&format!("error:{tag}"), "frame: synthesis of analysis is I-P", recon, 1e-8));
        let limit = if case.j_max >= 2 && case.kind == ManifoldKind::Sphere2 { 900 } else { 120 };
        p.timed(&tag, start.elapsed(), Duration::from_secs(limit));
        p.note(format!("{parseval:.1e}"));
        r.note(format!("{tag} {recon:.1e}"));
    }
    (p, r)
}

fn localization() -> Outcome {
    let mut o = Outcome::new("localization");
    let window = make_window(2.0).unwrap();
    for kind in [ManifoldKind::Sphere2, ManifoldKind::Circle] {
        let m = make_manifold(kind);
        let x = match kind {
            ManifoldKind::Sphere2 => Point::sphere(1.0, 2.0),
            _ => Point::circle(1.0),
        };
        let sweep = localization_sweep(&m, &window, &x, &[0, 1, 2], &[1, 2, 3], 4.0).unwrap();
        for s in &sweep.stability {
            o.check(Check::at_most(&format!("C{}_band:{kind}", s.n), "kernel: C_N uniform in t", s.ratio, 4.0));
        }
        let ratios: Vec<String> = sweep.stability.iter().map(|s| format!("{:.2}", s.ratio)).collect();
        o.note(format!("{kind} j=0..2 [{}]", ratios.join(", ")));
    }
    // Wider circle range, reported only.
    let m = make_manifold(ManifoldKind::Circle);
    let x = Point::circle(0.0);
    let c3: Vec<f64> = (0..=4)
        .map(|j| kernel_localization(&m, &window, j, &x, &[3]).unwrap().constants[0].1)
        .collect();
    o.note(format!("circle C3 band over j=0..4: {:.2}", ratio_band(&c3)));
    o
}

fn besov_equivalence() -> Outcome {
    let mut o = Outcome::new("Besov norm equivalence");
    let m = make_manifold(ManifoldKind::Circle);
    let j_max = 6;
    let frame = build_frame(&m, 2.0, j_max, 0).unwrap();
    let mut worst: f64 = 0.0;
    for family in [Family::Dilation, Family::Decay] {
        let members: Vec<_> = (1..=5).map(|s| needlet_core::besov::family_member(&m, family, s, 0).unwrap()).collect();
        for alpha in [0.5, 1.0, 2.0] {
            for q in [1.0, 2.0] {
                let params = BesovParams::new(alpha, 2.0, q, 2.0, 1).unwrap();
                let cmp: Vec<_> = members.iter().map(|f| norm_comparison(f, &params, &frame).unwrap()).collect();
                let truncated = cmp.iter().any(|c| c.truncated);
                o.check(Check::at_most(&format!("in_band:{family}:alpha={alpha}:q={q}"), "frame: family within band", truncated as u8 as f64, 0.0));
                let ratios: Vec<_> = cmp.iter().map(|c| c.ratios.unwrap()).collect();
                for (pair, get) in [
                    ("sequence/lp", (|r: &needlet_core::besov::NormRatios| r.sequence_over_lp) as fn(&_) -> f64),
                    ("approx/lp", |r| r.approx_over_lp),
                    ("sequence/approx", |r| r.sequence_over_approx),
                ] {
                    let v: Vec<f64> = ratios.iter().map(get).collect();
                    let band = ratio_band(&v);
                    worst = worst.max(band);
                    o.check(Check::at_most(
                        &format!("spread:{family}:{pair}:alpha={alpha}:q={q}"),
                        "besov: quasi-norms equivalent uniformly in scale",
                        band,
                        10.0,
                    ));
                }
            }
        }
    }
    o.note(format!("worst ratio spread {worst:.2}"));
    for planted in [0.5, 1.0, 2.0] {
        let f = planted_decay(&m, frame.basis().omega(), planted, 0).unwrap();
        let s = frame.analyze(&f).unwrap().unnormalized(&frame).unwrap();
        let e = smoothness_estimate(&s, 2.0, Some((2, j_max))).unwrap();
        o.check(Check::at_most(
            &format!("alpha_estimate:planted={planted}"),
            "besov: coefficient decay recovers smoothness",
            (e.alpha - planted).abs(),
            0.25,
        ));
        o.note(format!("alpha {planted} -> {:.3}", e.alpha));
    }
    o
}

fn bernstein() -> Outcome {
    let mut o = Outcome::new("Bernstein inequality");
    let mut violations = 0usize;
    let mut total = 0usize;
    let mut seed = 800;
    for kind in KINDS {
        let m = make_manifold(kind);
        for &omega in &SWEEP {
            for f in random_draws(&m, omega, DRAWS, seed) {
                for k in 0..=5 {
                    total += 1;
                    if f.apply_l_power(k).l2_norm() > omega.powi(k as i32) * f.l2_norm() {
                        violations += 1;
                    }
                }
            }
            seed += 1;
        }
    }
    o.check(Check::at_most("violations", "spectrum: |L^k f| <= omega^k |f|", violations as f64, 0.0));
    o.note(format!("{violations} of {total}"));
    o
}

fn ci_suite() -> Vec<Outcome> {
    let (parseval, recon) = parseval_and_reconstruction();
    vec![
        partition_of_unity(),
        cubature_exactness(),
        a0_stability(),
        plancherel_polya(),
        cardinality(),
        product_bandwidth(),
        parseval,
        recon,
        localization(),
        besov_equivalence(),
        bernstein(),
    ]
}

fn serialize(outcomes: &[Outcome]) -> Vec<String> {
    outcomes.iter().map(|o| to_json(&o.report).unwrap()).collect()
}

fn main() -> ExitCode {
    // `cargo test` passes harness flags; a filter that excludes us skips the run.
    let args: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    if !args.is_empty() && !args.iter().any(|a| "acceptance".contains(a.as_str())) {
        return ExitCode::SUCCESS;
    }

    let first = ci_suite();
    let second = ci_suite();
    let identical = serialize(&first) == serialize(&second);

    let mut all = true;
    for (i, o) in first.iter().enumerate() {
        let pass = o.report.pass && o.report.checks.iter().all(|c| c.pass);
        all &= pass;
        println!("criterion {:>2} {}: {} ({})", i + 1, if pass { "PASS" } else { "FAIL" }, o.report.command, o.note);
        for c in o.report.failures() {
            println!("    {} = {:e} (bound {:e})", c.name, c.value, c.bound);
        }
    }
    all &= identical;
    println!(
        "criterion 12 {}: determinism ({} reports, second run byte-identical: {identical})",
        if identical { "PASS" } else { "FAIL" },
        first.len()
    );
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
