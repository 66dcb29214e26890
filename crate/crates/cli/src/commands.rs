//! Subcommand implementations.

use std::collections::BTreeMap;
use std::path::Path;

use needlet_core::besov::{
    approx_norm, approx_top, family_member, littlewood_paley_norm, planted_decay, sequence_quasinorm, smoothness_estimate,
    BesovParams, Family,
};
use needlet_core::cubature::{auto_cubature, build_cubature, Cubature};
use needlet_core::frames::{
    build_frame, default_j_max, localization_sweep, FrameArchive, FrameCoefficients, LevelCoefficients, NeedletFrame,
};
use needlet_core::lattice::{build_lattice, validate_lattice, SLACK};
use needlet_core::manifold::{make_manifold, weyl_count, ManifoldKind};
use needlet_core::report::{tol, verify_frame, Check, VerificationReport};
use needlet_core::spectral::{BandlimitedFunction, FunctionRecord};
use serde::Serialize;

use crate::config::{or_default, positive, required, Exponent, RunConfig};
use crate::output::{cell, read_input, Output};
use crate::{
    AnalyzeArgs, BesovCmd, Cli, Command, CompareArgs, CubatureArgs, CubatureCmd, EstimateArgs, FrameBuildArgs,
    FrameCmd, FrameVerifyArgs, InfoArgs, LatticeArgs, LatticeCmd, LocalizationArgs, ManifoldCmd, SynthesizeArgs,
    CliError,
};

struct Ctx {
    config: RunConfig,
    out: Output,
    tol: f64,
    digests: BTreeMap<String, String>,
}

impl Ctx {
    fn report(&self, command: &str, seed: u64) -> VerificationReport {
        let mut r = VerificationReport::new(command, seed);
        r.digests = self.digests.clone();
        r
    }

    fn check(&self, c: Check) -> Check {
        c.relaxed(self.tol)
    }

    fn read(&mut self, key: &str, path: &Path) -> Result<String, CliError> {
        let (text, digest) = read_input(path)?;
        self.digests.insert(key.into(), digest);
        Ok(text)
    }

    /// Writes the report and prints a one-line verdict to stderr.
    fn finish(&self, report: &VerificationReport, name: &str, artifacts: &[&str]) -> Result<bool, CliError> {
        let path = self.out.json(name, report)?;
        let verdict = if report.pass { "pass" } else { "FAIL" };
        let mut line = format!("{}: {verdict}", report.command);
        for c in report.failures() {
            line.push_str(&format!("\n  {} = {:e} (bound {:e})", c.name, c.value, c.bound));
        }
        let written: Vec<String> =
            artifacts.iter().map(|a| self.out.path(a).display().to_string()).chain([path.display().to_string()]).collect();
        eprintln!("{line}\n  wrote {}", written.join(", "));
        Ok(report.pass)
    }
}

pub fn run(cli: Cli) -> Result<bool, CliError> {
    let mut digests = BTreeMap::new();
    let config = match &cli.config {
        Some(p) => {
            let (_, d) = read_input(p)?;
            digests.insert("config".into(), d);
            RunConfig::load(p)?
        }
        None => RunConfig::default(),
    };
    let tol = positive(or_default(cli.tol, &config.tol, 1.0), "tol")?;
    let print = cli.print || config.print.unwrap_or(false);
    let out = Output::new(cli.out_dir.clone(), config.out_dir.clone(), print)?;
    let mut ctx = Ctx { config, out, tol, digests };
    match cli.command {
        Command::Manifold(ManifoldCmd::Info(a)) => manifold_info(&ctx, a),
        Command::Lattice(LatticeCmd::Build(a)) => lattice_build(&ctx, a),
        Command::Cubature(CubatureCmd::Build(a)) => cubature_build(&ctx, a),
        Command::Frame(FrameCmd::Build(a)) => frame_build(&ctx, a),
        Command::Frame(FrameCmd::Verify(a)) => frame_verify(&mut ctx, a),
        Command::Frame(FrameCmd::Analyze(a)) => frame_analyze(&mut ctx, a),
        Command::Frame(FrameCmd::Synthesize(a)) => frame_synthesize(&mut ctx, a),
        Command::Frame(FrameCmd::Localization(a)) => frame_localization(&mut ctx, a),
        Command::Besov(BesovCmd::Compare(a)) => besov_compare(&ctx, a),
        Command::Besov(BesovCmd::Estimate(a)) => besov_estimate(&mut ctx, a),
    }
}

#[derive(Serialize)]
struct ManifoldInfo {
    manifold: needlet_core::manifold::ManifoldSpec,
    rho_cap: f64,
    diameter: f64,
    omega: Option<f64>,
    weyl_count: Option<usize>,
}

fn manifold_info(ctx: &Ctx, a: InfoArgs) -> Result<bool, CliError> {
    let kind = required(a.manifold, &ctx.config.manifold, "manifold")?;
    let m = make_manifold(kind);
    let omega = a.omega.or(ctx.config.omega);
    let info = ManifoldInfo {
        manifold: m,
        rho_cap: m.rho_cap(),
        diameter: m.diameter(),
        omega,
        weyl_count: omega.map(|w| weyl_count(&m, w)),
    };
    let path = ctx.out.json("manifold.json", &info)?;
    eprintln!("manifold info: {kind}\n  wrote {}", path.display());
    Ok(true)
}

fn lattice_build(ctx: &Ctx, a: LatticeArgs) -> Result<bool, CliError> {
    let kind = required(a.manifold, &ctx.config.manifold, "manifold")?;
    let rho = positive(required(a.rho, &ctx.config.rho, "rho")?, "rho")?;
    let seed = or_default(a.seed, &ctx.config.seed, 0);
    let m = make_manifold(kind);
    let lattice = build_lattice(&m, rho, seed)?;
    let v = validate_lattice(&m, &lattice)?;
    ctx.out.json("lattice.json", &lattice.to_record())?;
    let mut r = ctx.report("lattice build", seed);
    r.push(Check::at_least(
        "separation",
        "lattice: d(x_i, x_j) >= rho/2",
        v.min_separation.unwrap_or(f64::INFINITY),
        0.5 * rho * (1.0 - SLACK),
    ));
    r.push(Check::at_most("covering", "lattice: balls of radius rho/2 cover M", v.covering_radius, 0.5 * rho * (1.0 + SLACK)));
    r.push(ctx.check(Check::at_most(
        "measure_sum",
        "lattice: Voronoi measures sum to vol(M)",
        (v.measure_sum - m.volume).abs(),
        1e-10 * m.volume,
    )));
    r.value("validation", &v)?;
    ctx.finish(&r, "lattice_report.json", &["lattice.json"])
}

fn cubature_checks(ctx: &Ctx, r: &mut VerificationReport, c: &Cubature) {
    let s = c.stats();
    let min_w = c.weights().iter().cloned().fold(f64::INFINITY, f64::min);
    r.push(Check::above("weights_positive", "cubature: lambda_k > 0", min_w, 0.0));
    r.push(ctx.check(Check::at_most(
        "exactness",
        "cubature: exact on E_omega, |A^T lambda - c|_inf",
        s.exactness_residual,
        tol::EXACTNESS,
    )));
    r.push(ctx.check(Check::at_most(
        "weight_spread",
        "cubature: lambda_k in [c1 rho^n, c2 rho^n]",
        s.weight_ratio_max / s.weight_ratio_min,
        tol::WEIGHT_SPREAD,
    )));
    let pp = c.plancherel_polya();
    r.push(ctx.check(Check::at_most("plancherel_polya_ratio", "sampling: c2/c1 bounded", pp.c2 / pp.c1, 10.0)));
}

#[derive(Serialize)]
struct CubatureSummary {
    omega: f64,
    rho: f64,
    a0: f64,
    points: usize,
    stats: needlet_core::cubature::CubatureStats,
    plancherel_polya: needlet_core::cubature::PlancherelPolya,
}

fn cubature_build(ctx: &Ctx, a: CubatureArgs) -> Result<bool, CliError> {
    let kind = required(a.manifold, &ctx.config.manifold, "manifold")?;
    let omega = positive(required(a.omega, &ctx.config.omega, "omega")?, "omega")?;
    let seed = or_default(a.seed, &ctx.config.seed, 0);
    let m = make_manifold(kind);
    let c = match a.rho.or(ctx.config.rho) {
        Some(rho) => {
            let lattice = build_lattice(&m, positive(rho, "rho")?, seed)?;
            build_cubature(&m, omega, &lattice)?
        }
        None => auto_cubature(&m, omega, seed)?,
    };
    ctx.out.json("cubature.json", &c.to_record())?;
    let mut r = ctx.report("cubature build", seed);
    cubature_checks(ctx, &mut r, &c);
    r.value(
        "cubature",
        CubatureSummary {
            omega,
            rho: c.rho(),
            a0: c.a0(),
            points: c.points().len(),
            stats: *c.stats(),
            plancherel_polya: c.plancherel_polya(),
        },
    )?;
    ctx.finish(&r, "cubature_report.json", &["cubature.json"])
}

#[derive(Serialize)]
struct LevelSummary {
    j: i32,
    bandwidth: f64,
    rho: f64,
    points: usize,
}

fn frame_summary(frame: &NeedletFrame) -> Vec<LevelSummary> {
    frame
        .levels()
        .iter()
        .map(|l| LevelSummary { j: l.j, bandwidth: l.bandwidth, rho: l.rho, points: l.len() })
        .collect()
}

fn frame_build(ctx: &Ctx, a: FrameBuildArgs) -> Result<bool, CliError> {
    let kind = required(a.manifold, &ctx.config.manifold, "manifold")?;
    let base = positive(or_default(a.a, &ctx.config.a, 2.0), "a")?;
    let jmax = or_default(a.jmax, &ctx.config.jmax, default_j_max(kind));
    let seed = or_default(a.seed, &ctx.config.seed, 0);
    let m = make_manifold(kind);
    let frame = build_frame(&m, base, jmax, seed)?;
    ctx.out.json("frame.json", &frame.to_archive())?;
    let mut r = ctx.report("frame build", seed);
    r.extend(verify_frame(&frame, seed, a.draws)?.into_iter().map(|c| ctx.check(c)));
    r.value("levels", frame_summary(&frame))?;
    ctx.finish(&r, "frame_report.json", &["frame.json"])
}

fn load_frame(ctx: &mut Ctx, path: &Path) -> Result<NeedletFrame, CliError> {
    let text = ctx.read("archive", path)?;
    let archive: FrameArchive =
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("archive {}: {e}", path.display())))?;
    Ok(NeedletFrame::from_archive(&archive)?)
}

fn frame_verify(ctx: &mut Ctx, a: FrameVerifyArgs) -> Result<bool, CliError> {
    let frame = load_frame(ctx, &a.archive)?;
    let seed = or_default(a.seed, &ctx.config.seed, 0);
    let mut r = ctx.report("frame verify", seed);
    r.extend(verify_frame(&frame, seed, a.draws)?.into_iter().map(|c| ctx.check(c)));
    r.value("levels", frame_summary(&frame))?;
    ctx.finish(&r, "frame_verify_report.json", &[])
}

fn load_function(ctx: &mut Ctx, path: &Path) -> Result<BandlimitedFunction, CliError> {
    let text = ctx.read("function", path)?;
    let rec: FunctionRecord =
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("function {}: {e}", path.display())))?;
    Ok(BandlimitedFunction::from_record(&rec)?)
}

fn frame_analyze(ctx: &mut Ctx, a: AnalyzeArgs) -> Result<bool, CliError> {
    let frame = load_frame(ctx, &a.archive)?;
    let f = load_function(ctx, &a.function)?;
    let s = frame.analyze(&f)?;
    let rows: Vec<Vec<String>> = s
        .levels
        .iter()
        .flat_map(|l| l.values.iter().enumerate().map(move |(k, v)| vec![l.j.to_string(), k.to_string(), cell(*v)]))
        .collect();
    ctx.out.csv("coefficients.csv", &["j", "k", "value"], &rows)?;
    let mut r = ctx.report("frame analyze", 0);
    let target: f64 = f.coeffs().iter().skip(1).map(|c| c * c).sum();
    r.value("energy", s.energy())?;
    r.value("target", target)?;
    r.value("truncated", s.truncated)?;
    if !s.truncated && target > 0.0 {
        r.push(ctx.check(Check::at_most(
            "parseval",
            "frame: sum |s|^2 = ||(I-P)F||^2",
            (s.energy() - target).abs() / target,
            tol::PARSEVAL,
        )));
    }
    ctx.finish(&r, "analyze_report.json", &["coefficients.csv"])
}

fn read_coefficients(ctx: &mut Ctx, path: &Path, frame: &NeedletFrame) -> Result<FrameCoefficients, CliError> {
    let text = ctx.read("coefficients", path)?;
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let header = rdr.headers().map_err(|e| CliError::Usage(e.to_string()))?.clone();
    if header.iter().collect::<Vec<_>>() != ["j", "k", "value"] {
        return Err(CliError::Usage(format!("{}: expected header j,k,value", path.display())));
    }
    let mut s = FrameCoefficients::zeros_like(frame);
    let bad = |line: usize, what: &str| CliError::Usage(format!("{} line {line}: {what}", path.display()));
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| CliError::Usage(e.to_string()))?;
        let line = i + 2;
        let j: i32 = rec.get(0).and_then(|v| v.parse().ok()).ok_or_else(|| bad(line, "bad j"))?;
        let k: usize = rec.get(1).and_then(|v| v.parse().ok()).ok_or_else(|| bad(line, "bad k"))?;
        let v: f64 = rec.get(2).and_then(|v| v.parse().ok()).ok_or_else(|| bad(line, "bad value"))?;
        let level: &mut LevelCoefficients =
            s.levels.iter_mut().find(|l| l.j == j).ok_or_else(|| bad(line, "level not in frame"))?;
        *level.values.get_mut(k).ok_or_else(|| bad(line, "index beyond level size"))? = v;
    }
    Ok(s)
}

fn frame_synthesize(ctx: &mut Ctx, a: SynthesizeArgs) -> Result<bool, CliError> {
    let frame = load_frame(ctx, &a.archive)?;
    let s = read_coefficients(ctx, &a.coefficients, &frame)?;
    let f = frame.synthesize(&s)?;
    let path = ctx.out.json("function.json", &f.to_record())?;
    eprintln!("frame synthesize: done\n  wrote {}", path.display());
    Ok(true)
}

fn frame_localization(ctx: &mut Ctx, a: LocalizationArgs) -> Result<bool, CliError> {
    let frame = load_frame(ctx, &a.archive)?;
    let x = frame.levels()[0].points[0];
    let sweep = localization_sweep(frame.manifold(), frame.window(), &x, &a.levels, &a.exponents, tol::LOCALIZATION)?;
    let mut r = ctx.report("frame localization", 0);
    for s in &sweep.stability {
        r.push(ctx.check(Check::at_most(
            &format!("localization_c{}", s.n),
            "kernel: t^n |K_t| (1 + d/t)^N bounded uniformly in t",
            s.ratio,
            tol::LOCALIZATION,
        )));
    }
    r.value("sweep", &sweep)?;
    ctx.finish(&r, "localization_report.json", &[])
}

#[derive(Serialize)]
struct NormRow {
    family: Family,
    scale: u32,
    alpha: f64,
    #[serde(with = "needlet_core::besov::exponent")]
    p: f64,
    #[serde(with = "needlet_core::besov::exponent")]
    q: f64,
    sequence: Option<f64>,
    approx: Option<f64>,
    lp: Option<f64>,
}

#[derive(Serialize)]
struct RatioSpread {
    family: Family,
    alpha: f64,
    #[serde(with = "needlet_core::besov::exponent")]
    p: f64,
    #[serde(with = "needlet_core::besov::exponent")]
    q: f64,
    pair: String,
    min: f64,
    max: f64,
    spread: f64,
}

#[derive(Serialize)]
struct AlphaEstimate {
    planted: f64,
    #[serde(with = "needlet_core::besov::exponent")]
    p: f64,
    estimate: f64,
    slope_stderr: f64,
    levels: Vec<i32>,
}

fn exponent_cell(v: f64) -> String {
    if v.is_infinite() {
        "inf".into()
    } else {
        cell(v)
    }
}

fn besov_compare(ctx: &Ctx, a: CompareArgs) -> Result<bool, CliError> {
    let kind = or_default(a.manifold, &ctx.config.manifold, ManifoldKind::Circle);
    let base = positive(or_default(a.a, &ctx.config.a, 2.0), "a")?;
    let jmax = or_default(a.jmax, &ctx.config.jmax, default_j_max(kind));
    let seed = or_default(a.seed, &ctx.config.seed, 0);
    let alphas = or_default(a.alpha, &ctx.config.alpha, vec![0.5, 1.0, 2.0]);
    let ps: Vec<f64> = or_default(a.p, &ctx.config.p, vec![Exponent(2.0)]).into_iter().map(|e| e.0).collect();
    let qs: Vec<f64> =
        or_default(a.q, &ctx.config.q, vec![Exponent(1.0), Exponent(2.0)]).into_iter().map(|e| e.0).collect();
    let families = a.families.unwrap_or_else(|| Family::ALL.to_vec());
    let mut norms = Vec::new();
    for n in &a.norms {
        match n.as_str() {
            "sequence" | "approx" | "lp" => norms.push(n.as_str()),
            other => return Err(CliError::Usage(format!("unknown norm {other:?}; use sequence, approx, lp"))),
        }
    }
    let want = |n: &str| norms.contains(&n);
    if want("approx") && qs.iter().any(|q| q.is_infinite()) {
        return Err(needlet_core::Error::Refused(
            "the approximation norm is characterized only for q < ∞; drop `approx` from --norms or use a finite q"
                .into(),
        )
        .into());
    }
    if (want("approx") || want("lp")) && ps.iter().any(|p| *p < 1.0) {
        return Err(needlet_core::Error::Refused(
            "function-space norms need p >= 1; p < 1 is available for the sequence norm only".into(),
        )
        .into());
    }
    let m = make_manifold(kind);
    let frame = build_frame(&m, base, jmax, seed)?;
    let scales = a.scales.unwrap_or_else(|| (1..=jmax.clamp(1, 5) as u32).collect());
    let mut rows = Vec::new();
    let mut csv_rows = Vec::new();
    for &family in &families {
        for &scale in &scales {
            let f = family_member(&m, family, scale, seed)?;
            let coeffs = frame.analyze(&f)?;
            if coeffs.truncated {
                return Err(CliError::Usage(format!(
                    "scale {scale} exceeds the band a^(2 J_max) reproduced by the frame; lower --scales or raise --jmax"
                )));
            }
            let samples = coeffs.unnormalized(&frame)?;
            for &alpha in &alphas {
                for &p in &ps {
                    for &q in &qs {
                        let params = BesovParams::new(alpha, p, q, base, m.n)?;
                        let row = NormRow {
                            family,
                            scale,
                            alpha,
                            p,
                            q,
                            sequence: want("sequence").then(|| sequence_quasinorm(&samples, &params)),
                            approx: if want("approx") {
                                Some(approx_norm(&f, &params, approx_top(&f))?.value)
                            } else {
                                None
                            },
                            lp: if want("lp") { Some(littlewood_paley_norm(&f, &params)?) } else { None },
                        };
                        for (kind, v) in [("sequence", row.sequence), ("approx", row.approx), ("lp", row.lp)] {
                            if let Some(v) = v {
                                csv_rows.push(vec![
                                    family.to_string(),
                                    scale.to_string(),
                                    cell(alpha),
                                    exponent_cell(p),
                                    exponent_cell(q),
                                    kind.to_string(),
                                    cell(v),
                                ]);
                            }
                        }
                        rows.push(row);
                    }
                }
            }
        }
    }
    ctx.out.csv("besov_sweep.csv", &["family", "scale", "alpha", "p", "q", "norm_kind", "value"], &csv_rows)?;

    let mut r = ctx.report("besov compare", seed);
    let mut spreads = Vec::new();
    for &family in &families {
        for &alpha in &alphas {
            for &p in &ps {
                for &q in &qs {
                    let group: Vec<&NormRow> =
                        rows.iter().filter(|x| x.family == family && x.alpha == alpha && x.p == p && x.q == q).collect();
                    let pairs: [(&str, fn(&NormRow) -> Option<f64>); 3] = [
                        ("sequence/lp", |x| Some(x.sequence? / x.lp?)),
                        ("approx/lp", |x| Some(x.approx? / x.lp?)),
                        ("sequence/approx", |x| Some(x.sequence? / x.approx?)),
                    ];
                    for (pair, g) in pairs {
                        let vals: Option<Vec<f64>> = group.iter().map(|x| g(x)).collect();
                        let Some(vals) = vals else { continue };
                        if vals.len() < 2 {
                            continue;
                        }
                        let min = vals.iter().cloned().fold(f64::INFINITY, f64::min);
                        let max = vals.iter().cloned().fold(0.0, f64::max);
                        let spread = max / min;
                        r.push(ctx.check(Check::at_most(
                            &format!("ratio_spread:{family}:{pair}:alpha={alpha}:p={}:q={}", exponent_cell(p), exponent_cell(q)),
                            "besov: quasi-norms equivalent with scale-independent constants",
                            spread,
                            10.0,
                        )));
                        spreads.push(RatioSpread { family, alpha, p, q, pair: pair.into(), min, max, spread });
                    }
                }
            }
        }
    }
    r.value("norms", &rows)?;
    r.value("ratios", &spreads)?;

    if ps.iter().all(|p| *p >= 1.0) && jmax >= 4 {
        let planted = 1.0;
        let f = planted_decay(&m, frame.basis().omega(), planted, seed)?;
        let s = frame.analyze(&f)?.unnormalized(&frame)?;
        let e = smoothness_estimate(&s, 2.0, Some((2, jmax)))?;
        r.push(ctx.check(Check::at_most(
            "alpha_estimate",
            "besov: level decay of frame coefficients recovers smoothness",
            (e.alpha - planted).abs(),
            0.25,
        )));
        r.value(
            "alpha_estimate",
            AlphaEstimate { planted, p: 2.0, estimate: e.alpha, slope_stderr: e.slope_stderr, levels: e.levels },
        )?;
    }
    ctx.finish(&r, "besov_report.json", &["besov_sweep.csv"])
}

fn besov_estimate(ctx: &mut Ctx, a: EstimateArgs) -> Result<bool, CliError> {
    let seed = or_default(a.seed, &ctx.config.seed, 0);
    let frame = match &a.archive {
        Some(p) => load_frame(ctx, p)?,
        None => {
            let kind = or_default(a.manifold, &ctx.config.manifold, ManifoldKind::Circle);
            let base = positive(or_default(a.a, &ctx.config.a, 2.0), "a")?;
            let jmax = or_default(a.jmax, &ctx.config.jmax, default_j_max(kind));
            build_frame(&make_manifold(kind), base, jmax, seed)?
        }
    };
    let f = match &a.function {
        Some(p) => load_function(ctx, p)?,
        None => planted_decay(frame.manifold(), frame.basis().omega(), a.alpha0, seed)?,
    };
    let levels = match a.levels.as_deref() {
        Some([lo, hi]) => Some((*lo, *hi)),
        Some(_) => return Err(CliError::Usage("--levels takes two values lo,hi".into())),
        None if a.function.is_none() => Some((2, frame.j_max())),
        None => None,
    };
    let s = frame.analyze(&f)?.unnormalized(&frame)?;
    let e = smoothness_estimate(&s, a.p.0, levels)?;
    let mut r = ctx.report("besov estimate", seed);
    if a.function.is_none() {
        r.push(ctx.check(Check::at_most(
            "alpha_estimate",
            "besov: level decay of frame coefficients recovers smoothness",
            (e.alpha - a.alpha0).abs(),
            0.25,
        )));
        r.value("planted", a.alpha0)?;
    }
    r.value("estimate", &e)?;
    ctx.finish(&r, "estimate_report.json", &[])
}
