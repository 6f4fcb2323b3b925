//! Subcommand bodies. Every writer produces deterministic output for a
//! given configuration.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::lemma_verify::{lambda0, verify_pair, LemmaOptions, LemmaReport};
use crate::profiles::{default_alpha, ModelParams};
use crate::radialgrid::RadialField;
use crate::reduction::{BallPolicy, ReductionConfig, ReductionReport, Reducer};

use super::config::RunConfig;
use super::oracle;
use super::{CliError, ExportFormat};

fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Usage(format!("output dir {} not writable: {e}", dir.display())))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    std::fs::write(path, serde_json::to_string_pretty(value)? + "\n")?;
    Ok(())
}

fn lemma_file(n: u32, s: f64) -> String {
    format!("lemma_n{n}_s{s}.json")
}

fn pool(workers: usize) -> Result<rayon::ThreadPool, CliError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start worker pool: {e}")))
}

pub fn verify_lemma(cfg: &RunConfig) -> Result<(), CliError> {
    let (ns, ss) = (&cfg.lemma.n_list, &cfg.lemma.s_list);
    if ns.is_empty() || ss.is_empty() {
        return Err(CliError::Usage("n and s ranges must be non-empty".into()));
    }
    ensure_dir(&cfg.output_dir)?;
    let opts = LemmaOptions { h_samples: cfg.lemma.h_samples, ..LemmaOptions::default() };
    let pairs: Vec<(u32, f64)> = ns.iter().flat_map(|&n| ss.iter().map(move |&s| (n, s))).collect();
    let results: Vec<_> = pool(cfg.workers)?.install(|| pairs.par_iter().map(|&(n, s)| verify_pair(n, s, &opts)).collect());

    println!("{:>3} {:>5} {:>14} {:>14} {:>10} {:>12} {:>11}  status", "n", "s", "A", "B", "route", "lambda0", "max H");
    let mut failed = Vec::new();
    for (&(n, s), res) in pairs.iter().zip(results) {
        let rep = res?;
        write_json(&cfg.output_dir.join(lemma_file(n, s)), &rep)?;
        let fmt = |v: Option<f64>, p: usize| v.map_or("-".to_string(), |x| format!("{x:.p$e}"));
        println!(
            "{:>3} {:>5} {:>14.7e} {:>14} {:>10} {:>12} {:>11.3e}  {}",
            n,
            s,
            rep.a,
            fmt(rep.b, 7),
            fmt(rep.b_route_rel_diff, 1),
            fmt(rep.lambda0, 5),
            rep.h_min_margin,
            if rep.certified { "ok".to_string() } else { rep.failures.join("; ") }
        );
        if !rep.certified {
            failed.push(format!("(n={n}, s={s})"));
        }
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Verification(format!("certificates failed for {}", failed.join(", "))))
    }
}

fn reducer(cfg: &RunConfig) -> Result<Reducer, CliError> {
    let rc = ReductionConfig {
        r_max: cfg.grid.r_max,
        size: cfg.grid.size,
        ball_policy: cfg.solve.ball_policy,
        forcing: cfg.solve.forcing,
        fp_tol: cfg.tolerances.fixed_point,
        fp_max_iter: cfg.solve.max_iterations,
        ..ReductionConfig::default()
    };
    let mut red = Reducer::new(cfg.solve.n, cfg.solve.s, rc)?;
    if cfg.solve.forcing == crate::reduction::ForcingModel::ClosedForm {
        let form = crate::fracop::calibrate_C(cfg.solve.n, cfg.solve.s, &crate::fracop::FracLapConvention::standard(cfg.solve.n, cfg.solve.s))
            .map_err(|e| CliError::Verification(e.to_string()))?;
        red = red.with_fraclap(&form)?;
    }
    Ok(red)
}

/// λ₀ from the lemma (None when B diverges) and the bracket to bisect on.
fn bracket(cfg: &RunConfig) -> Result<(Option<f64>, (f64, f64)), CliError> {
    let (n, s) = (cfg.solve.n, cfg.solve.s);
    let rep = verify_pair(n, s, &LemmaOptions::default())?;
    let l0 = lambda0(&rep).ok();
    let b = match (cfg.solve.lambda_bracket, l0) {
        (Some(b), _) => b,
        (None, Some(l)) => (0.5 * l, 2.0 * l),
        (None, None) => {
            return Err(CliError::Usage(format!(
                "λ₀ is undefined for n={n}, s={s} ({}); pass --lambda-bracket",
                rep.failures.join("; ")
            )))
        }
    };
    Ok((l0, b))
}

fn alpha(cfg: &RunConfig) -> f64 {
    cfg.solve.alpha.unwrap_or_else(|| default_alpha(cfg.solve.n))
}

fn tag(n: u32, s: f64, eps: f64) -> String {
    format!("n{n}_s{s}_eps{eps}")
}

/// Solves at one ε, writes the report and the two profiles.
fn solve_point(red: &Reducer, cfg: &RunConfig, eps: f64, br: (f64, f64)) -> Result<ReductionReport, CliError> {
    let a = alpha(cfg);
    ModelParams::new(red.n, red.s, eps, 0.0, a)?;
    let sol = red.solve_theorem1(eps, a, br, cfg.tolerances.bifurcation)?;
    let mut rep = red.report(&sol, cfg.solve.ball_pairs, cfg.seed)?;
    let t = tag(red.n, red.s, eps);
    let z = red.bubble().axpy(1.0, &sol.state.phi)?;
    let zname = PathBuf::from(format!("z_{t}.csv"));
    z.write_csv(&cfg.output_dir.join(&zname), Some(red.s))?;
    let p = &sol.state.params;
    if p.delta > 0.0 {
        let fine = Arc::new(red.grid().rescaled(p.delta)?);
        let amp = p.delta.powf(-2.0 / (p.p_eps() - 1.0));
        let u = RadialField::new(fine, z.values.iter().map(|v| amp * v).collect(), z.decay_exp)?;
        u.write_csv(&cfg.output_dir.join(format!("u_{t}.csv")), Some(red.s))?;
    }
    rep.profile_csv = Some(zname);
    write_json(&cfg.output_dir.join(format!("solve_{t}.json")), &rep)?;
    Ok(rep)
}

/// Under `BallPolicy::Report` a fixed point outside the ball is reported, not fatal.
fn judge(rep: &ReductionReport, tol: f64, policy: BallPolicy) -> Result<(), CliError> {
    if !rep.converged && policy == BallPolicy::Enforce {
        return Err(CliError::Regime(format!(
            "fixed point left the ball: ‖φ‖ = {:.3e} > (ε+μ)^α = {:.3e}",
            rep.phi_norm, rep.ball_radius
        )));
    }
    if !(rep.pde_residual <= tol) {
        return Err(CliError::Verification(format!("PDE residual {:.3e} exceeds {tol:e}", rep.pde_residual)));
    }
    if !(rep.positivity_min > 0.0) {
        return Err(CliError::Verification(format!("solution not positive: min {:.3e}", rep.positivity_min)));
    }
    Ok(())
}

pub fn solve(cfg: &RunConfig) -> Result<(), CliError> {
    ModelParams::new(cfg.solve.n, cfg.solve.s, cfg.solve.eps, 0.0, alpha(cfg))?;
    ensure_dir(&cfg.output_dir)?;
    let (l0, br) = bracket(cfg)?;
    let red = reducer(cfg)?;
    let rep = solve_point(&red, cfg, cfg.solve.eps, br)?;
    println!("n={} s={} eps={} lambda0={}", rep.n, rep.s, rep.eps, l0.map_or("undefined".into(), |l| format!("{l:.8}")));
    println!(
        "lambda*={:.10} |phi|_X={:.6e} ball={:.6e} F={:.3e} residual={:.3e} min z={:.3e}",
        rep.lambda, rep.phi_norm, rep.ball_radius, rep.bifurcation_value, rep.pde_residual, rep.positivity_min
    );
    judge(&rep, cfg.tolerances.pde_residual, cfg.solve.ball_policy)
}

#[derive(Debug, Serialize)]
struct SweepRow {
    eps: f64,
    lambda_star: Option<f64>,
    lambda0: Option<f64>,
    phi_norm: Option<f64>,
    pde_residual: Option<f64>,
    positivity_min: Option<f64>,
    status: String,
}

pub fn sweep(cfg: &RunConfig) -> Result<(), CliError> {
    if cfg.solve.eps_list.is_empty() {
        return Err(CliError::Usage("eps list must be non-empty".into()));
    }
    for &e in &cfg.solve.eps_list {
        ModelParams::new(cfg.solve.n, cfg.solve.s, e, 0.0, alpha(cfg))?;
    }
    ensure_dir(&cfg.output_dir)?;
    let (l0, br) = bracket(cfg)?;
    let red = reducer(cfg)?;
    let results: Vec<Result<ReductionReport, CliError>> = pool(cfg.workers)?
        .install(|| cfg.solve.eps_list.par_iter().map(|&e| solve_point(&red, cfg, e, br)).collect());
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for (&eps, res) in cfg.solve.eps_list.iter().zip(results) {
        let row = match res {
            Ok(r) => {
                let status = match judge(&r, cfg.tolerances.pde_residual, cfg.solve.ball_policy) {
                    Ok(()) => "ok".to_string(),
                    Err(e) => {
                        failures.push(format!("eps={eps}: {e}"));
                        e.to_string()
                    }
                };
                SweepRow {
                    eps,
                    lambda_star: Some(r.lambda),
                    lambda0: l0,
                    phi_norm: Some(r.phi_norm),
                    pde_residual: Some(r.pde_residual),
                    positivity_min: Some(r.positivity_min),
                    status,
                }
            }
            Err(e) => {
                failures.push(format!("eps={eps}: {e}"));
                SweepRow { eps, lambda_star: None, lambda0: l0, phi_norm: None, pde_residual: None, positivity_min: None, status: e.to_string() }
            }
        };
        rows.push(row);
    }
    let opt = |v: Option<f64>| v.map_or(String::new(), |x| format!("{x:.17e}"));
    let mut csv = String::from("eps,lambda_star,lambda0,abs_diff,phi_norm,pde_residual,positivity_min,status\n");
    for r in &rows {
        let diff = r.lambda_star.zip(r.lambda0).map(|(a, b)| (a - b).abs());
        let _ = writeln!(
            csv,
            "{:e},{},{},{},{},{},{},\"{}\"",
            r.eps,
            opt(r.lambda_star),
            opt(r.lambda0),
            opt(diff),
            opt(r.phi_norm),
            opt(r.pde_residual),
            opt(r.positivity_min),
            r.status.replace('"', "'")
        );
    }
    let path = cfg.output_dir.join(format!("sweep_n{}_s{}.csv", cfg.solve.n, cfg.solve.s));
    std::fs::write(&path, &csv)?;
    print!("{csv}");
    if failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::Verification(failures.join("; ")))
    }
}

pub fn oracle_check(cfg: &RunConfig, convention_scale: f64) -> Result<(), CliError> {
    if !(convention_scale > 0.0) {
        return Err(CliError::Usage(format!("convention scale must be positive, got {convention_scale}")));
    }
    let rows = pool(cfg.workers)?.install(|| oracle::all_rows(&cfg.tolerances, convention_scale));
    println!("{:<34} {:<40} {:>10} {:>9}  result", "check", "case", "rel diff", "tol");
    for r in &rows {
        println!("{:<34} {:<40} {:>10.2e} {:>9.1e}  {}", r.check, r.case, r.rel_diff, r.tolerance, if r.pass { "pass" } else { "FAIL" });
    }
    let worst = rows
        .iter()
        .filter(|r| !r.pass)
        .max_by(|a, b| (a.rel_diff / a.tolerance).total_cmp(&(b.rel_diff / b.tolerance)));
    match worst {
        None => Ok(()),
        Some(w) => Err(CliError::Verification(format!(
            "{} of {} checks failed; worst: {} [{}] rel diff {:.2e} > {:.1e}",
            rows.iter().filter(|r| !r.pass).count(),
            rows.len(),
            w.check,
            w.case,
            w.rel_diff,
            w.tolerance
        ))),
    }
}

fn lemma_reports(dir: &Path) -> Result<Vec<(PathBuf, LemmaReport)>, CliError> {
    let entries = std::fs::read_dir(dir).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", dir.display())))?;
    let mut out = Vec::new();
    for entry in entries {
        let path = entry?.path();
        let name = path.file_name().and_then(|s| s.to_str()).unwrap_or_default();
        if name.starts_with("lemma_n") && name.ends_with(".json") {
            let rep: LemmaReport = serde_json::from_str(&std::fs::read_to_string(&path)?)?;
            out.push((path, rep));
        }
    }
    out.sort_by(|a, b| (a.1.n, a.1.s).partial_cmp(&(b.1.n, b.1.s)).expect("finite s"));
    Ok(out)
}

pub fn export(cfg: &RunConfig, format: ExportFormat) -> Result<(), CliError> {
    let reps: Vec<LemmaReport> = lemma_reports(&cfg.output_dir)?.into_iter().map(|(_, r)| r).collect();
    if reps.is_empty() {
        return Err(CliError::Usage(format!("no lemma reports in {}; run verify-lemma first", cfg.output_dir.display())));
    }
    let path = match format {
        ExportFormat::Json => {
            let p = cfg.output_dir.join("lemma_reports.json");
            write_json(&p, &reps)?;
            p
        }
        ExportFormat::Csv => {
            let p = cfg.output_dir.join("lemma_reports.csv");
            let opt = |v: Option<f64>| v.map_or(String::new(), |x| format!("{x:.17e}"));
            let mut csv = String::from("n,s,A,A_err,B,B_err,B_hyp,B_alt,I1,I2,C_ns,lambda0,H_min_margin,certified\n");
            for r in &reps {
                let _ = writeln!(
                    csv,
                    "{},{},{:.17e},{:.3e},{},{},{},{},{:.17e},{},{:.17e},{},{:.6e},{}",
                    r.n,
                    r.s,
                    r.a,
                    r.a_err,
                    opt(r.b),
                    r.b_err.map_or(String::new(), |x| format!("{x:.3e}")),
                    opt(r.b_hyp),
                    opt(r.b_alt),
                    r.i1,
                    opt(r.i2),
                    r.c_ns,
                    opt(r.lambda0),
                    r.h_min_margin,
                    r.certified
                );
            }
            std::fs::write(&p, csv)?;
            p
        }
    };
    println!("wrote {} ({} reports)", path.display(), reps.len());
    Ok(())
}
