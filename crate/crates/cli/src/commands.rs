//! Subcommand implementations. Each returns the overall verdict; errors carry exit codes.

use crate::config::{CommonArgs, RunConfig};
use crate::error::{CliError, CliResult};
use crate::files::{num, read_data, read_phantom, tidy_csv, write_data, Run};
use serde::Serialize;
use smrt::darboux::{
    extension_check, recovered_vanishing, solve_modes, ExtensionReport, ModeSolution, VanishingReport,
};
use smrt::darboux::solver::SIGMA_FACTOR;
use smrt::harmonics::sphere_grid;
use smrt::opalg::{lemma_sweep, LemmaEntry, M_CAP};
use smrt::range::{moment_test, orthogonality_residuals, RangeReport};
use smrt::specfun::{bessel_zeros, BesselOrder};
use smrt::transform::control_data;
use smrt::{BoundaryData, HarmonicIndex, Phantom, Verdict};
use std::path::{Path, PathBuf};

pub const VANISHING_ORDER: usize = 3;

fn path_or(p: &Option<PathBuf>, default: &str) -> PathBuf {
    p.clone().unwrap_or_else(|| PathBuf::from(default))
}

/// `out.json` -> `out.<tag>.csv`.
fn plot_path(report: &Path, tag: &str) -> PathBuf {
    report.with_extension(format!("{tag}.csv"))
}

fn require_input(args: &CommonArgs) -> CliResult<PathBuf> {
    args.input.clone().ok_or_else(|| CliError::Input("--input is required".into()))
}

fn check_dimension(args: &CommonArgs, actual: usize, what: &str) -> CliResult<()> {
    match args.dimension {
        Some(n) if n != actual => {
            Err(CliError::Input(format!("--dimension {n} disagrees with the {what} (n = {actual})")))
        }
        _ => Ok(()),
    }
}

fn load_data(run: &mut Run, args: &CommonArgs) -> CliResult<(BoundaryData, RunConfig)> {
    let input = require_input(args)?;
    let g = read_data(run, &input)?;
    check_dimension(args, g.dimension, "input data")?;
    let cfg = RunConfig::resolve(args, Some(g.dimension))?;
    run.config = serde_json::to_value(&cfg).unwrap_or_default();
    Ok((g, cfg))
}

fn default_phantom(n: usize) -> CliResult<Phantom> {
    match n {
        2 => Ok(Phantom::demo()),
        3 => Err(CliError::Input("no built-in phantom for n = 3; pass --phantom".into())),
        _ => Err(CliError::Unsupported(format!("dimension n = {n}; supported: 2, 3"))),
    }
}

fn load_phantom(run: &mut Run, args: &CommonArgs, path: &Option<PathBuf>) -> CliResult<(Phantom, RunConfig)> {
    let ph = match path {
        Some(p) => {
            let ph = read_phantom(p)?;
            run.input(p)?;
            check_dimension(args, ph.dimension, "phantom")?;
            ph
        }
        None => {
            let n = args.dimension.unwrap_or(2);
            if !smrt::SUPPORTED_DIMENSIONS.contains(&n) {
                return Err(CliError::Unsupported(format!("dimension n = {n}; supported: 2, 3")));
            }
            default_phantom(n)?
        }
    };
    let cfg = RunConfig::resolve(args, Some(ph.dimension))?;
    run.config = serde_json::to_value(&cfg).unwrap_or_default();
    Ok((ph, cfg))
}

fn simulate(ph: &Phantom, cfg: &RunConfig, inject: Option<f64>, source: &str) -> CliResult<BoundaryData> {
    let centers = sphere_grid(cfg.dimension, cfg.angular)?;
    let t_grid = cfg.t_grid()?;
    let quad = sphere_grid(cfg.dimension, cfg.quad)?;
    let mut g = smrt::transform::simulate(ph, &centers, t_grid, cfg.method, &quad)?;
    g.provenance.insert("phantom".into(), source.into());
    if let Some(amp) = inject {
        if !amp.is_finite() {
            return Err(CliError::Input(format!("--inject-bump must be finite, got {amp}")));
        }
        g = g.add(&control_data(&centers, t_grid).scaled(amp))?;
        g.provenance.insert("inject_bump".into(), format!("{amp:e}"));
    }
    Ok(g)
}

pub fn forward(args: &CommonArgs, phantom: &Option<PathBuf>, inject: Option<f64>) -> CliResult<Verdict> {
    let mut run = Run::new("forward", &());
    let (ph, cfg) = load_phantom(&mut run, args, phantom)?;
    let source = phantom.as_ref().map_or("demo".to_string(), |p| p.display().to_string());
    let g = simulate(&ph, &cfg, inject, &source)?;
    let out = path_or(&args.output, "data.csv");
    write_data(&mut run, &out, &g)?;
    run.finish()?;
    println!("forward: {} centers x {} times -> {}", g.centers.len(), g.t_grid.samples, out.display());
    Ok(Verdict::Pass)
}

fn emit_residuals(run: &mut Run, report_path: &Path, rep: &RangeReport) -> CliResult<()> {
    let rows = rep.residuals.iter().map(|r| {
        vec![r.m.to_string(), r.k.to_string(), r.q.to_string(), num(r.lambda), num(r.value), num(r.rho)]
    });
    let bytes = tidy_csv(&["m", "k", "q", "lambda", "value", "rho"], rows)?;
    run.write(&plot_path(report_path, "residuals"), &bytes)
}

pub fn range_test(args: &CommonArgs) -> CliResult<Verdict> {
    let mut run = Run::new("range-test", &());
    let (g, cfg) = load_data(&mut run, args)?;
    let rep = orthogonality_residuals(&g, cfg.m_max, cfg.zeros, cfg.tol)?;
    let path = path_or(&args.report, "range.json");
    run.write_report(&path, &rep)?;
    if args.emit_plot_data {
        emit_residuals(&mut run, &path, &rep)?;
    }
    run.finish()?;
    println!("range-test: max rho = {:.3e} (tol {:.1e}): {:?}", rep.max_rho, cfg.tol, rep.verdict);
    Ok(rep.verdict)
}

pub fn moment_test_cmd(args: &CommonArgs, k_max: Option<usize>) -> CliResult<Verdict> {
    let mut run = Run::new("moment-test", &());
    let (g, cfg) = load_data(&mut run, args)?;
    let rep = moment_test(&g, k_max.unwrap_or(cfg.k_max), cfg.tol)?;
    let path = path_or(&args.report, "moments.json");
    run.write_report(&path, &rep)?;
    run.finish()?;
    println!("moment-test: k <= {}: {:?}", rep.rows.len().saturating_sub(1), rep.verdict);
    Ok(rep.verdict)
}

#[derive(Debug, Serialize)]
struct ModeEntry {
    m: usize,
    k: usize,
    sigma: f64,
    sigma_threshold: Option<f64>,
    sigma_modes: usize,
    velocity_norm: f64,
    velocity_floor: f64,
    velocity_ratio: f64,
    tail: f64,
    verdict: Verdict,
}

#[derive(Debug, Serialize)]
struct SolveReport {
    dimension: usize,
    m_max: usize,
    eigs: usize,
    t_samples: usize,
    modes: Vec<ModeEntry>,
    verdict: Verdict,
}

fn solve_report(cfg: &RunConfig, t_samples: usize, sols: &[(HarmonicIndex, ModeSolution)]) -> SolveReport {
    let modes: Vec<ModeEntry> = sols
        .iter()
        .map(|(idx, s)| ModeEntry {
            m: idx.m,
            k: idx.k,
            sigma: s.sigma,
            sigma_threshold: s.sigma_threshold,
            sigma_modes: s.sigma_modes,
            velocity_norm: s.velocity_norm,
            velocity_floor: s.velocity_floor,
            velocity_ratio: s.velocity_ratio(),
            tail: s.tail,
            verdict: s.verdict,
        })
        .collect();
    let verdict = Verdict::from_pass(modes.iter().all(|m| m.verdict.passed()));
    SolveReport { dimension: cfg.dimension, m_max: cfg.m_max, eigs: cfg.eigs, t_samples, modes, verdict }
}

fn emit_profiles(run: &mut Run, path: &Path, r_samples: usize, sols: &[(HarmonicIndex, ModeSolution)]) -> CliResult<()> {
    let rows = sols.iter().flat_map(|(idx, s)| {
        (0..r_samples).map(move |i| {
            let r = i as f64 / (r_samples - 1).max(1) as f64;
            vec![idx.m.to_string(), idx.k.to_string(), num(r), num(s.profile(r))]
        })
    });
    run.write(path, &tidy_csv(&["m", "k", "r", "value"], rows)?)
}

fn dump_modes(run: &mut Run, dir: &Path, sols: &[(HarmonicIndex, ModeSolution)]) -> CliResult<()> {
    for (idx, s) in sols {
        let mut header = vec!["t".to_string()];
        header.extend((1..=s.h.len()).map(|j| format!("h_{j}")));
        let rows = (0..s.t_grid.samples).map(|i| {
            let mut row = vec![num(s.t_grid.time(i))];
            row.extend(s.h.iter().map(|h| num(h[i])));
            row
        });
        let header: Vec<&str> = header.iter().map(String::as_str).collect();
        run.write(&dir.join(format!("mode_m{}_k{}.csv", idx.m, idx.k)), &tidy_csv(&header, rows)?)?;
    }
    Ok(())
}

pub fn darboux_solve(args: &CommonArgs, dump: &Option<PathBuf>) -> CliResult<Verdict> {
    let mut run = Run::new("darboux-solve", &());
    let (g, cfg) = load_data(&mut run, args)?;
    let sols = solve_modes(&g, cfg.m_max, cfg.eigs, SIGMA_FACTOR)?;
    let rep = solve_report(&cfg, g.t_grid.samples, &sols);
    let path = path_or(&args.report, "solve.json");
    run.write_report(&path, &rep)?;
    if let Some(dir) = dump {
        dump_modes(&mut run, dir, &sols)?;
    }
    if args.emit_plot_data {
        emit_profiles(&mut run, &plot_path(&path, "profiles"), cfg.r_samples, &sols)?;
    }
    run.finish()?;
    let worst = rep.modes.iter().fold(0.0f64, |a, m| a.max(m.sigma));
    println!("darboux-solve: {} modes, max sigma = {worst:.3e}: {:?}", rep.modes.len(), rep.verdict);
    Ok(rep.verdict)
}

pub fn extend_check(args: &CommonArgs, phantom: &Option<PathBuf>) -> CliResult<Verdict> {
    let mut run = Run::new("extend-check", &());
    let (g, cfg) = load_data(&mut run, args)?;
    let truth = match phantom {
        Some(p) => {
            let ph = read_phantom(p)?;
            run.input(p)?;
            if ph.dimension != g.dimension {
                return Err(CliError::Input("phantom and data disagree on dimension".into()));
            }
            Some(ph)
        }
        None => None,
    };
    let ext = extension_check(&g, truth.as_ref(), &cfg.extension())?;
    let path = path_or(&args.report, "ext.json");
    run.write_report(&path, &ext.report)?;
    if args.emit_plot_data {
        emit_profiles(&mut run, &plot_path(&path, "profiles"), cfg.r_samples, &ext.solutions)?;
    }
    run.finish()?;
    println!("extend-check: {}", summary(&ext.report));
    Ok(ext.report.verdict)
}

fn summary(r: &ExtensionReport) -> String {
    let opt = |v: Option<f64>| v.map_or("skipped".to_string(), |x| format!("{x:.2e}"));
    format!(
        "boundary {}, interior {}, upper cone {}, max sigma {:.2e}, velocity ratio {:.2}: {:?}",
        opt(r.boundary_mismatch),
        opt(r.interior_mismatch),
        opt(r.cone_upper),
        r.max_sigma,
        r.velocity_ratio,
        r.verdict
    )
}

#[derive(Debug, Serialize)]
struct ForwardStage {
    phantom: String,
    centers: usize,
    t_samples: usize,
    max_abs: f64,
    inject_bump: Option<f64>,
    verdict: Verdict,
}

#[derive(Debug, Serialize)]
struct ModeVanishing {
    m: usize,
    k: usize,
    report: VanishingReport,
}

#[derive(Debug, Serialize)]
struct VanishingStage {
    modes: Vec<ModeVanishing>,
    verdict: Verdict,
}

#[derive(Debug, Serialize)]
struct Stages {
    forward: ForwardStage,
    range_test: RangeReport,
    darboux_solve: SolveReport,
    extend_check: ExtensionReport,
    vanishing: VanishingStage,
}

#[derive(Debug, Serialize)]
struct PipelineReport {
    config: RunConfig,
    stages: Stages,
    verdict: Verdict,
}

pub fn pipeline(args: &CommonArgs, phantom: &Option<PathBuf>, inject: Option<f64>) -> CliResult<Verdict> {
    let mut run = Run::new("pipeline", &());
    let (ph, cfg) = load_phantom(&mut run, args, phantom).map_err(|e| e.in_stage("forward"))?;
    let source = phantom.as_ref().map_or("demo".to_string(), |p| p.display().to_string());
    let g = simulate(&ph, &cfg, inject, &source).map_err(|e| e.in_stage("forward"))?;
    if let Some(out) = &args.output {
        write_data(&mut run, out, &g)?;
    }
    let forward = ForwardStage {
        phantom: source,
        centers: g.centers.len(),
        t_samples: g.t_grid.samples,
        max_abs: g.max_abs(),
        inject_bump: inject,
        verdict: Verdict::Pass,
    };
    let range = orthogonality_residuals(&g, cfg.m_max, cfg.zeros, cfg.tol)
        .map_err(|e| CliError::from(e).in_stage("range-test"))?;
    let ext = extension_check(&g, Some(&ph), &cfg.extension())
        .map_err(|e| CliError::from(e).in_stage("extend-check"))?;
    let solve = solve_report(&cfg, g.t_grid.samples, &ext.solutions);
    let vanishing = recovered_vanishing(&ext, VANISHING_ORDER, smrt::darboux::vanishing::DEFAULT_SPACING)
        .map_err(|e| CliError::from(e).in_stage("vanishing"))?;
    let vanishing = VanishingStage {
        verdict: Verdict::from_pass(vanishing.iter().all(|(_, v)| v.verdict.passed())),
        modes: vanishing.into_iter().map(|(idx, report)| ModeVanishing { m: idx.m, k: idx.k, report }).collect(),
    };
    let verdict = forward
        .verdict
        .and(range.verdict)
        .and(solve.verdict)
        .and(ext.report.verdict)
        .and(vanishing.verdict);
    let path = path_or(&args.report, "pipeline.json");
    if args.emit_plot_data {
        emit_residuals(&mut run, &path, &range)?;
        emit_profiles(&mut run, &plot_path(&path, "profiles"), cfg.r_samples, &ext.solutions)?;
    }
    println!(
        "pipeline: range {:?} (max rho {:.2e}), solve {:?}, extension {:?}, vanishing {:?}",
        range.verdict, range.max_rho, solve.verdict, ext.report.verdict, vanishing.verdict
    );
    println!("  {}", summary(&ext.report));
    let rep = PipelineReport {
        config: cfg,
        stages: Stages { forward, range_test: range, darboux_solve: solve, extend_check: ext.report, vanishing },
        verdict,
    };
    run.write_report(&path, &rep)?;
    run.finish()?;
    Ok(verdict)
}

#[derive(Debug, Serialize)]
struct LemmaReport {
    n_max: usize,
    m_max: usize,
    entries: Vec<LemmaEntry>,
    verdict: Verdict,
}

pub fn lemma_verify(args: &CommonArgs, n_max: usize) -> CliResult<Verdict> {
    let m_max = args.mmax.unwrap_or(12);
    if n_max < 2 {
        return Err(CliError::Input(format!("--nmax must be at least 2, got {n_max}")));
    }
    if m_max == 0 || m_max > M_CAP {
        return Err(CliError::Unsupported(format!("--mmax must lie in 1..={M_CAP}, got {m_max}")));
    }
    let mut run = Run::new("lemma-verify", &serde_json::json!({ "n_max": n_max, "m_max": m_max }));
    let entries = lemma_sweep(n_max, m_max)?;
    let verdict = Verdict::from_pass(entries.iter().all(|e| e.verdict.passed()));
    let failed = entries.iter().filter(|e| !e.verdict.passed()).count();
    let path = path_or(&args.report, "lemma.json");
    run.write_report(&path, &LemmaReport { n_max, m_max, entries, verdict })?;
    run.finish()?;
    println!("lemma-verify: n <= {n_max}, m <= {m_max}, {failed} failures: {verdict:?}");
    Ok(verdict)
}

/// Accepts `p/q`, integers and decimals.
pub fn parse_order(s: &str) -> CliResult<BesselOrder> {
    let bad = || CliError::Input(format!("invalid order `{s}`"));
    let v = match s.split_once('/') {
        Some((p, q)) => {
            let p: f64 = p.trim().parse().map_err(|_| bad())?;
            let q: f64 = q.trim().parse().map_err(|_| bad())?;
            if q == 0.0 {
                return Err(bad());
            }
            p / q
        }
        None => s.trim().parse().map_err(|_| bad())?,
    };
    Ok(BesselOrder::new(v)?)
}

pub fn bessel_zeros_cmd(args: &CommonArgs, nu: &str, count: usize) -> CliResult<Verdict> {
    let order = parse_order(nu)?;
    let table = bessel_zeros(order, count)?;
    let rows = table.zeros.iter().enumerate().map(|(q, z)| vec![(q + 1).to_string(), num(*z)]);
    let bytes = tidy_csv(&["index", "zero"], rows)?;
    match &args.output {
        Some(path) => {
            let mut run = Run::new("bessel-zeros", &serde_json::json!({ "nu": order.value(), "count": count }));
            run.write(path, &bytes)?;
            run.finish()?;
        }
        None => print!("{}", String::from_utf8_lossy(&bytes)),
    }
    Ok(Verdict::Pass)
}
