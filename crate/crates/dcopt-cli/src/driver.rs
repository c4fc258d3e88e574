//! Orchestration behind the command-line interface: building instances,
//! running outer solves into run directories, re-checking finished runs from
//! their report files alone, and the two reproduction commands.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use thiserror::Error;

use dcopt::{
    al_rho_update, al_solve, feasibility_violation, gen_quadratic_dc, gen_sparse_recovery,
    load_instance, penalty_solve, seeded_normal_vec, verify_inexact_condition, ALConfig,
    DCProgram, GenError, Instance, InstanceError, MeritKind, PenaltyConfig, PieceSel, Schedule,
    SolveReport, StopReason,
};

use crate::report::{
    save_report, save_timing, IterRow, ReportError, RunReport, Summary,
};
use crate::table::{emit_table, TableRow};

/// Sample count for the post-hoc stationarity spot checks.
const VERIFY_SAMPLES: usize = 40;
/// Slack allowed on certified stationarity margins (they are exact up to
/// subsolver certificates, so only rounding noise passes through).
const MARGIN_SLACK: f64 = 1e-8;
/// Relative tolerance for recomputing logged quantities bit-for-bit-ish.
const RECOMPUTE_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error(transparent)]
    Report(#[from] ReportError),
    #[error(transparent)]
    Gen(#[from] GenError),
    #[error("solve failed: {0}")]
    Solve(String),
    #[error("invalid configuration: {0}")]
    Config(String),
}

/// Outer method selector: penalty with hinge power 1 or 2, or the augmented
/// Lagrangian loop.
#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Method {
    Pm1,
    Pm2,
    Alm,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Pm1 => "pm1",
            Method::Pm2 => "pm2",
            Method::Alm => "alm",
        }
    }

    pub fn parse(s: &str) -> Option<Method> {
        match s {
            "pm1" => Some(Method::Pm1),
            "pm2" => Some(Method::Pm2),
            "alm" => Some(Method::Alm),
            _ => None,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// User-adjustable solve knobs; everything else follows the library defaults.
#[derive(Clone, Debug)]
pub struct SolveParams {
    pub eps: f64,
    pub rho0: f64,
    pub sigma: f64,
    /// Multiplier-norm exponent offset (augmented Lagrangian only).
    pub alpha: f64,
    pub max_outer: usize,
    pub tol: f64,
    /// Record auxiliary multiplier tables (augmented Lagrangian only).
    pub aux_multipliers: bool,
}

impl Default for SolveParams {
    fn default() -> Self {
        Self {
            eps: 0.01,
            rho0: 0.1,
            sigma: 2.0,
            alpha: 1.05,
            max_outer: 50,
            tol: 1e-5,
            aux_multipliers: false,
        }
    }
}

/// Maps a stop reason onto its report-file spelling.
pub fn stop_label(stop: StopReason) -> &'static str {
    match stop {
        StopReason::RelativeChange => "relative-change",
        StopReason::MaxOuter => "max-outer",
        StopReason::RhoCap => "rho-cap",
        StopReason::InnerFailure => "inner-failure",
    }
}

/// Builds an instance from command-line shape arguments.
pub fn build_instance(
    kind: &str,
    n: Option<usize>,
    m: Option<usize>,
    k: Option<usize>,
    s: Option<f64>,
    seed: u64,
) -> Result<Instance, CliError> {
    let need = |opt: Option<usize>, name: &str| {
        opt.ok_or_else(|| CliError::Config(format!("kind requires --{name}")))
    };
    match kind {
        "worked-1d" => {
            if seed != 0 {
                return Err(CliError::Config(format!(
                    "worked-1d has no free seed (got {seed}); use --seed 0"
                )));
            }
            Ok(Instance::Worked1d)
        }
        "quadratic-dc" => Ok(Instance::Quadratic(gen_quadratic_dc(need(n, "n")?, seed).1)),
        "sparse-recovery" => {
            let s = s.ok_or_else(|| CliError::Config("kind requires --s".into()))?;
            Ok(Instance::SparseRecovery(
                gen_sparse_recovery(need(m, "m")?, need(n, "n")?, need(k, "k")?, s, seed)?.1,
            ))
        }
        other => Err(CliError::Config(format!("unknown instance kind {other:?}"))),
    }
}

/// Starting point policy: planted sparse problems start at the origin, the
/// rest at a seeded standard-normal draw.
pub fn initial_point(inst: &Instance, dim: usize, run_seed: u64) -> (Vec<f64>, &'static str) {
    match inst {
        Instance::SparseRecovery(_) => (vec![0.0; dim], "zeros"),
        _ => (seeded_normal_vec(run_seed, dim), "normal"),
    }
}

fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + b.abs())
}

fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Echoes the instance identity and shape into the config block.
fn push_instance_config(inst: &Instance, path_label: &str, out: &mut Vec<(String, String)>) {
    let mut kv = |k: &str, v: String| out.push((k.to_string(), v));
    kv("instance_kind", inst.kind().to_string());
    match inst {
        Instance::Worked1d => kv("instance_seed", "0".into()),
        Instance::Quadratic(spec) => {
            kv("instance_seed", spec.seed.to_string());
            kv("n", spec.n.to_string());
        }
        Instance::SparseRecovery(spec) => {
            kv("instance_seed", spec.seed.to_string());
            kv("m", spec.m.to_string());
            kv("n", spec.n.to_string());
            kv("k", spec.k.to_string());
            kv("s", fmt_f64(spec.s));
        }
    }
    kv("instance_path", path_label.to_string());
}

fn push_schedule(prefix: &str, sched: &Schedule, out: &mut Vec<(String, String)>) {
    let (base, factor, floor) = match sched {
        Schedule::Geometric { base, factor, floor } => (*base, *factor, *floor),
        Schedule::Fixed(v) => (*v, 1.0, *v),
    };
    out.push((format!("{prefix}0"), fmt_f64(base)));
    out.push((format!("{prefix}_factor"), fmt_f64(factor)));
    out.push((format!("{prefix}_floor"), fmt_f64(floor)));
}

struct EchoInput<'a> {
    command: &'a str,
    method: Method,
    inst: &'a Instance,
    path_label: &'a str,
    run_seed: u64,
    x0_policy: &'a str,
    eps: f64,
    rho0: f64,
    sigma: f64,
    alpha: Option<f64>,
    p: Option<u8>,
    eta_schedule: &'a Schedule,
    delta_schedule: &'a Schedule,
    max_outer: usize,
    tol: f64,
    rho_cap: f64,
    pair_cap: usize,
    subsolve_max_iter: usize,
    aux_multipliers: bool,
}

fn build_config_echo(input: &EchoInput<'_>) -> Vec<(String, String)> {
    let mut cfg = Vec::new();
    cfg.push(("command".to_string(), input.command.to_string()));
    cfg.push(("method".to_string(), input.method.to_string()));
    push_instance_config(input.inst, input.path_label, &mut cfg);
    cfg.push(("run_seed".to_string(), input.run_seed.to_string()));
    cfg.push(("x0_policy".to_string(), input.x0_policy.to_string()));
    cfg.push(("eps".to_string(), fmt_f64(input.eps)));
    cfg.push(("rho0".to_string(), fmt_f64(input.rho0)));
    cfg.push(("sigma".to_string(), fmt_f64(input.sigma)));
    if let Some(alpha) = input.alpha {
        cfg.push(("alpha".to_string(), fmt_f64(alpha)));
    }
    if let Some(p) = input.p {
        cfg.push(("p".to_string(), p.to_string()));
    }
    push_schedule("eta", input.eta_schedule, &mut cfg);
    push_schedule("delta", input.delta_schedule, &mut cfg);
    cfg.push(("max_outer".to_string(), input.max_outer.to_string()));
    cfg.push(("tol".to_string(), fmt_f64(input.tol)));
    cfg.push(("rho_cap".to_string(), fmt_f64(input.rho_cap)));
    cfg.push(("pair_cap".to_string(), input.pair_cap.to_string()));
    cfg.push((
        "subsolve_max_iter".to_string(),
        input.subsolve_max_iter.to_string(),
    ));
    cfg.push((
        "aux_multipliers".to_string(),
        input.aux_multipliers.to_string(),
    ));
    cfg
}

/// Turns solve histories into report rows; objective and feasibility are
/// recomputed per iterate so the report stands on its own.
fn build_rows(
    prog: &DCProgram,
    base: &SolveReport,
    lambda_history: Option<&[Vec<f64>]>,
) -> Vec<IterRow> {
    let mut rows = Vec::with_capacity(base.x_history.len());
    for (k, x) in base.x_history.iter().enumerate() {
        rows.push(IterRow {
            k,
            rho: base.rho_history[k],
            x_norm: norm2(x),
            objective: prog.objective_value(x),
            feasibility: feasibility_violation(prog, x),
            inner_accepts: base.sca_summaries[k].accepts,
            inner_subsolves: base.sca_summaries[k].subsolves,
            lambda: lambda_history.map(|lh| lh[k].clone()),
        });
    }
    rows
}

fn relative_error(inst: &Instance, x: &[f64]) -> Option<f64> {
    match inst {
        Instance::SparseRecovery(spec) => {
            let diff: f64 = x
                .iter()
                .zip(&spec.x_star)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            Some(diff / norm2(&spec.x_star))
        }
        _ => None,
    }
}

fn assemble_report(
    inst: &Instance,
    prog: &DCProgram,
    config: Vec<(String, String)>,
    base: &SolveReport,
    lambda_history: Option<&[Vec<f64>]>,
) -> Result<RunReport, CliError> {
    let x_final = base
        .x_final()
        .ok_or_else(|| CliError::Solve("no iterates recorded".into()))?
        .to_vec();
    let rows = build_rows(prog, base, lambda_history);
    let subsolve_count = rows.iter().map(|r| r.inner_subsolves).sum();
    let summary = Summary {
        objective: base.final_objective,
        rel_err: relative_error(inst, &x_final),
        outer_iterations: rows.len(),
        subsolve_count,
        stop: stop_label(base.stop).to_string(),
    };
    Ok(RunReport {
        config,
        rows,
        summary,
        x_final,
    })
}

/// Runs one outer solve and packages it as a report plus wall seconds.
pub fn run_solve(
    inst: &Instance,
    path_label: &str,
    method: Method,
    params: &SolveParams,
    run_seed: u64,
    command: &str,
) -> Result<(RunReport, f64), CliError> {
    let prog = inst.to_program();
    let (x0, x0_policy) = initial_point(inst, prog.dim, run_seed);
    let start = Instant::now();
    match method {
        Method::Pm1 | Method::Pm2 => {
            let cfg = PenaltyConfig {
                eps: params.eps,
                rho0: params.rho0,
                sigma: params.sigma,
                p: if method == Method::Pm1 { 1 } else { 2 },
                outer_rel_tol: params.tol,
                max_outer: params.max_outer,
                ..PenaltyConfig::default()
            };
            let report = penalty_solve(&prog, &cfg, &x0)
                .map_err(|e| CliError::Solve(e.to_string()))?;
            let wall = start.elapsed().as_secs_f64();
            let config = build_config_echo(&EchoInput {
                command,
                method,
                inst,
                path_label,
                run_seed,
                x0_policy,
                eps: cfg.eps,
                rho0: cfg.rho0,
                sigma: cfg.sigma,
                alpha: None,
                p: Some(cfg.p),
                eta_schedule: &cfg.eta_schedule,
                delta_schedule: &cfg.sca.delta_schedule,
                max_outer: cfg.max_outer,
                tol: cfg.outer_rel_tol,
                rho_cap: cfg.rho_cap,
                pair_cap: cfg.sca.pair_cap,
                subsolve_max_iter: cfg.sca.subsolve_max_iter,
                aux_multipliers: false,
            });
            Ok((assemble_report(inst, &prog, config, &report, None)?, wall))
        }
        Method::Alm => {
            let cfg = ALConfig {
                eps: params.eps,
                rho0: params.rho0,
                sigma: params.sigma,
                alpha: params.alpha,
                outer_rel_tol: params.tol,
                max_outer: params.max_outer,
                aux_multipliers: params.aux_multipliers,
                ..ALConfig::default()
            };
            let report = al_solve(&prog, &cfg, &x0)
                .map_err(|e| CliError::Solve(e.to_string()))?;
            let wall = start.elapsed().as_secs_f64();
            let config = build_config_echo(&EchoInput {
                command,
                method,
                inst,
                path_label,
                run_seed,
                x0_policy,
                eps: cfg.eps,
                rho0: cfg.rho0,
                sigma: cfg.sigma,
                alpha: Some(cfg.alpha),
                p: None,
                eta_schedule: &cfg.eta_schedule,
                delta_schedule: &cfg.sca.delta_schedule,
                max_outer: cfg.max_outer,
                tol: cfg.outer_rel_tol,
                rho_cap: cfg.rho_cap,
                pair_cap: cfg.sca.pair_cap,
                subsolve_max_iter: cfg.sca.subsolve_max_iter,
                aux_multipliers: cfg.aux_multipliers,
            });
            Ok((
                assemble_report(inst, &prog, config, &report.base, Some(&report.lambda_history))?,
                wall,
            ))
        }
    }
}

// ---------------------------------------------------------------------------
// Run directories
// ---------------------------------------------------------------------------

pub fn run_dir_name(index: usize, method: Method, run_seed: u64) -> String {
    format!("run-{index:03}-{method}-seed{run_seed}")
}

/// First unused run index under `root` (1-based; scans `run-NNN-*` entries).
pub fn next_run_index(root: &Path) -> Result<usize, CliError> {
    let mut max = 0usize;
    if root.is_dir() {
        for entry in fs::read_dir(root)? {
            let name = entry?.file_name();
            let name = name.to_string_lossy();
            if let Some(rest) = name.strip_prefix("run-") {
                if let Some(digits) = rest.split('-').next() {
                    if let Ok(idx) = digits.parse::<usize>() {
                        max = max.max(idx);
                    }
                }
            }
        }
    }
    Ok(max + 1)
}

/// Writes `report.tsv` and `timing.tsv` into `dir`, creating it.
pub fn write_run(dir: &Path, report: &RunReport, wall_seconds: f64) -> Result<(), CliError> {
    fs::create_dir_all(dir)?;
    save_report(report, dir.join("report.tsv"))?;
    save_timing(wall_seconds, dir.join("timing.tsv"))?;
    Ok(())
}

pub fn read_run(dir: &Path) -> Result<(RunReport, Option<f64>), CliError> {
    let report = crate::report::load_report(dir.join("report.tsv"))?;
    let wall = crate::report::load_timing(dir.join("timing.tsv"));
    Ok((report, wall))
}

/// Loads every `run-*` directory under `root`, sorted by directory name.
pub fn collect_runs(root: &Path) -> Result<Vec<(String, RunReport, Option<f64>)>, CliError> {
    let mut names = Vec::new();
    for entry in fs::read_dir(root)? {
        let entry = entry?;
        let name = entry.file_name().to_string_lossy().into_owned();
        if name.starts_with("run-") && entry.path().join("report.tsv").is_file() {
            names.push(name);
        }
    }
    names.sort();
    let mut out = Vec::with_capacity(names.len());
    for name in names {
        let (report, wall) = read_run(&root.join(&name))?;
        out.push((name, report, wall));
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Verification of finished runs
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct VerifyCheck {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug)]
pub struct VerifyOutcome {
    pub checks: Vec<VerifyCheck>,
}

impl VerifyOutcome {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

fn cfg_str<'a>(report: &'a RunReport, key: &str) -> Result<&'a str, CliError> {
    report
        .config_get(key)
        .ok_or_else(|| CliError::Config(format!("report is missing config key {key:?}")))
}

fn cfg_f64(report: &RunReport, key: &str) -> Result<f64, CliError> {
    let raw = cfg_str(report, key)?;
    raw.parse::<f64>()
        .map_err(|_| CliError::Config(format!("config key {key:?} is not a float: {raw:?}")))
}

fn cfg_u64(report: &RunReport, key: &str) -> Result<u64, CliError> {
    let raw = cfg_str(report, key)?;
    raw.parse::<u64>()
        .map_err(|_| CliError::Config(format!("config key {key:?} is not an integer: {raw:?}")))
}

fn cfg_usize(report: &RunReport, key: &str) -> Result<usize, CliError> {
    let raw = cfg_str(report, key)?;
    raw.parse::<usize>()
        .map_err(|_| CliError::Config(format!("config key {key:?} is not an integer: {raw:?}")))
}

/// Rebuilds the run's instance, preferring the echoed file path and falling
/// back to regeneration from the echoed shape parameters.
fn rebuild_instance(report: &RunReport) -> Result<Instance, CliError> {
    let kind = cfg_str(report, "instance_kind")?;
    let path = cfg_str(report, "instance_path")?;
    if path != "-" && Path::new(path).is_file() {
        return Ok(load_instance(path)?);
    }
    let seed = cfg_u64(report, "instance_seed")?;
    match kind {
        "worked-1d" => Ok(Instance::Worked1d),
        "quadratic-dc" => Ok(Instance::Quadratic(
            gen_quadratic_dc(cfg_usize(report, "n")?, seed).1,
        )),
        "sparse-recovery" => Ok(Instance::SparseRecovery(
            gen_sparse_recovery(
                cfg_usize(report, "m")?,
                cfg_usize(report, "n")?,
                cfg_usize(report, "k")?,
                cfg_f64(report, "s")?,
                seed,
            )?
            .1,
        )),
        other => Err(CliError::Config(format!(
            "unknown instance kind in report: {other:?}"
        ))),
    }
}

fn echoed_eta_schedule(report: &RunReport) -> Result<Schedule, CliError> {
    Ok(Schedule::Geometric {
        base: cfg_f64(report, "eta0")?,
        factor: cfg_f64(report, "eta_factor")?,
        floor: cfg_f64(report, "eta_floor")?,
    })
}

/// Re-checks a finished run from its report alone: the instance rebuilds,
/// logged end values recompute, the weight recurrence and multiplier signs
/// hold, and (after a converged stop) the certified stationarity condition
/// holds at the final iterate.
pub fn verify_run(report: &RunReport) -> Result<VerifyOutcome, CliError> {
    let mut checks = Vec::new();
    let method = Method::parse(cfg_str(report, "method")?)
        .ok_or_else(|| CliError::Config("unknown method in report".into()))?;
    if report.rows.is_empty() {
        return Err(CliError::Config("report has no iteration rows".into()));
    }

    let inst = rebuild_instance(report)?;
    let prog = inst.to_program();
    let kind_ok = inst.kind() == cfg_str(report, "instance_kind")?;
    let dim_ok = prog.dim == report.x_final.len();
    checks.push(VerifyCheck {
        name: "instance-rebuild",
        passed: kind_ok && dim_ok,
        detail: format!(
            "kind {} dim {} vs recorded final point of length {}",
            inst.kind(),
            prog.dim,
            report.x_final.len()
        ),
    });

    let last = report.rows.last().expect("nonempty rows");
    let obj = prog.objective_value(&report.x_final);
    let feas = feasibility_violation(&prog, &report.x_final);
    let xn = norm2(&report.x_final);
    let final_ok = rel_close(obj, report.summary.objective, RECOMPUTE_TOL)
        && rel_close(feas, last.feasibility, RECOMPUTE_TOL)
        && rel_close(xn, last.x_norm, RECOMPUTE_TOL);
    checks.push(VerifyCheck {
        name: "final-values",
        passed: final_ok,
        detail: format!(
            "objective {obj:.6e} feasibility {feas:.6e} norm {xn:.6e} vs logged {:.6e} {:.6e} {:.6e}",
            report.summary.objective, last.feasibility, last.x_norm
        ),
    });

    let rho0 = cfg_f64(report, "rho0")?;
    let sigma = cfg_f64(report, "sigma")?;
    let (rho_ok, rho_detail) = match method {
        Method::Pm1 | Method::Pm2 => {
            let mut ok = true;
            for row in &report.rows {
                let expect = rho0 * sigma.powi(row.k as i32);
                if !rel_close(row.rho, expect, RECOMPUTE_TOL) {
                    ok = false;
                    break;
                }
            }
            (ok, "geometric growth from rho0".to_string())
        }
        Method::Alm => {
            let alpha = cfg_f64(report, "alpha")?;
            let mut ok = rel_close(report.rows[0].rho, rho0, RECOMPUTE_TOL);
            for pair in report.rows.windows(2) {
                let lambda_next = pair[1].lambda.as_deref().ok_or_else(|| {
                    CliError::Config("augmented run is missing multiplier columns".into())
                })?;
                let expect = al_rho_update(pair[0].rho, sigma, lambda_next, alpha);
                if !rel_close(pair[1].rho, expect, RECOMPUTE_TOL) {
                    ok = false;
                    break;
                }
            }
            (ok, "max of geometric growth and multiplier-norm power".to_string())
        }
    };
    checks.push(VerifyCheck {
        name: "rho-recurrence",
        passed: rho_ok,
        detail: rho_detail,
    });

    let lambda_ok = report.rows.iter().all(|row| {
        row.lambda
            .as_ref()
            .map_or(true, |l| l.iter().all(|&v| v >= 0.0))
    });
    checks.push(VerifyCheck {
        name: "multiplier-signs",
        passed: lambda_ok,
        detail: if method == Method::Alm {
            "all recorded multipliers nonnegative".to_string()
        } else {
            "no multipliers recorded for penalty runs".to_string()
        },
    });

    if report.summary.stop == "relative-change" {
        let eps = cfg_f64(report, "eps")?;
        let eta = echoed_eta_schedule(report)?.at(report.rows.len() - 1);
        let kind = match method {
            Method::Pm1 => MeritKind::Penalty { p: 1 },
            Method::Pm2 => MeritKind::Penalty { p: 2 },
            Method::Alm => MeritKind::Augmented {
                lambda: last
                    .lambda
                    .clone()
                    .ok_or_else(|| CliError::Config("augmented run is missing multipliers".into()))?,
            },
        };
        match verify_inexact_condition(
            &prog,
            last.rho,
            &kind,
            &report.x_final,
            eps,
            eta,
            VERIFY_SAMPLES,
        ) {
            Ok(cert) => {
                let ok = cert.worst_margin >= -MARGIN_SLACK && cert.spot_violations == 0;
                checks.push(VerifyCheck {
                    name: "stationarity-certificate",
                    passed: ok,
                    detail: format!(
                        "worst margin {:.3e} over {} selections, {} spot violations{}",
                        cert.worst_margin,
                        cert.pair_margins.len(),
                        cert.spot_violations,
                        if cert.truncated { " (selection list truncated)" } else { "" }
                    ),
                });
            }
            Err(e) => checks.push(VerifyCheck {
                name: "stationarity-certificate",
                passed: false,
                detail: format!("certificate computation failed: {e}"),
            }),
        }
    } else {
        checks.push(VerifyCheck {
            name: "stationarity-certificate",
            passed: true,
            detail: format!("skipped: run stopped by {}", report.summary.stop),
        });
    }

    Ok(VerifyOutcome { checks })
}

// ---------------------------------------------------------------------------
// Batch runs and experiments
// ---------------------------------------------------------------------------

/// Worker count: `DCOPT_THREADS` when set, else available parallelism capped
/// at eight.
pub fn thread_count() -> usize {
    std::env::var("DCOPT_THREADS")
        .ok()
        .and_then(|s| s.parse::<usize>().ok())
        .filter(|&n| n >= 1)
        .unwrap_or_else(|| {
            std::thread::available_parallelism()
                .map(|n| n.get())
                .unwrap_or(1)
                .min(8)
        })
}

struct Job {
    dir_name: String,
    inst: Instance,
    method: Method,
    params: SolveParams,
    run_seed: u64,
}

/// Runs jobs across `threads` workers, writing each into `root/<dir_name>`.
/// Directory indices are preassigned by the caller, so workers never race on
/// naming; results come back in job order.
fn run_jobs(
    root: &Path,
    jobs: Vec<Job>,
    command: &str,
    threads: usize,
) -> Result<Vec<(String, RunReport, f64)>, CliError> {
    fs::create_dir_all(root)?;
    let slots: Vec<Mutex<Option<Result<(RunReport, f64), CliError>>>> =
        jobs.iter().map(|_| Mutex::new(None)).collect();
    let cursor = AtomicUsize::new(0);
    let workers = threads.min(jobs.len()).max(1);
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = cursor.fetch_add(1, Ordering::Relaxed);
                if i >= jobs.len() {
                    break;
                }
                let job = &jobs[i];
                let outcome = run_solve(&job.inst, "-", job.method, &job.params, job.run_seed, command)
                    .and_then(|(report, wall)| {
                        write_run(&root.join(&job.dir_name), &report, wall)?;
                        Ok((report, wall))
                    });
                *slots[i].lock().unwrap() = Some(outcome);
            });
        }
    });
    let mut out = Vec::with_capacity(jobs.len());
    for (job, slot) in jobs.iter().zip(slots) {
        let outcome = slot
            .into_inner()
            .unwrap()
            .unwrap_or_else(|| Err(CliError::Solve("job was never scheduled".into())));
        let (report, wall) = outcome?;
        out.push((job.dir_name.clone(), report, wall));
    }
    Ok(out)
}

/// A finished batch: the rendered table and whether every run reached the
/// relative-change stop.
pub struct ExperimentOutcome {
    pub table: String,
    pub all_converged: bool,
}

fn finish_experiment(out: &Path, jobs: Vec<Job>, command: &str) -> Result<ExperimentOutcome, CliError> {
    let results = run_jobs(out, jobs, command, thread_count())?;
    let rows: Vec<TableRow> = results
        .iter()
        .map(|(name, report, wall)| TableRow::from_report(name, report, Some(*wall)))
        .collect();
    let table = emit_table(&rows);
    fs::write(out.join("table.tsv"), &table)?;
    let all_converged = results
        .iter()
        .all(|(_, report, _)| report.summary.stop == "relative-change");
    Ok(ExperimentOutcome { table, all_converged })
}

/// Batch protocol on one generated quadratic instance: every method solves
/// the same instance from `runs` seeded starting points.
pub fn reproduce_experiment_quadratic(
    out: &Path,
    n: usize,
    instance_seed: u64,
    runs: u64,
) -> Result<ExperimentOutcome, CliError> {
    let inst = Instance::Quadratic(gen_quadratic_dc(n, instance_seed).1);
    let mut jobs = Vec::new();
    let mut index = next_run_index(out)?;
    for method in [Method::Pm1, Method::Pm2, Method::Alm] {
        for run_seed in 1..=runs {
            jobs.push(Job {
                dir_name: run_dir_name(index, method, run_seed),
                inst: inst.clone(),
                method,
                params: SolveParams::default(),
                run_seed,
            });
            index += 1;
        }
    }
    finish_experiment(out, jobs, "reproduce-experiment")
}

/// Batch protocol on planted sparse recovery: fresh instances per seed, the
/// full size for the quadratic-hinge penalty and augmented runs and a
/// reduced size for the linear-hinge penalty runs.
pub fn reproduce_experiment_sparse(
    out: &Path,
    base_seed: u64,
    runs: u64,
) -> Result<ExperimentOutcome, CliError> {
    let mut jobs = Vec::new();
    let mut index = next_run_index(out)?;
    for offset in 0..runs {
        let seed = base_seed + offset;
        let full = Instance::SparseRecovery(gen_sparse_recovery(256, 1024, 20, 0.1, seed)?.1);
        let small = Instance::SparseRecovery(gen_sparse_recovery(64, 256, 5, 0.1, seed)?.1);
        for (method, inst) in [
            (Method::Pm1, &small),
            (Method::Pm2, &full),
            (Method::Alm, &full),
        ] {
            jobs.push(Job {
                dir_name: run_dir_name(index, method, seed),
                inst: inst.clone(),
                method,
                params: SolveParams::default(),
                run_seed: seed,
            });
            index += 1;
        }
    }
    finish_experiment(out, jobs, "reproduce-experiment")
}

// ---------------------------------------------------------------------------
// Worked-example reproduction
// ---------------------------------------------------------------------------

fn piece_label(index: &dcopt::MultiIndex) -> String {
    let j1 = match index.jj.first() {
        Some(PieceSel::Joint(j)) => j + 1,
        Some(PieceSel::PerCoord(_)) | None => 0,
    };
    format!("{}{}", index.j0 + 1, j1)
}

/// Five tabular outer steps of the augmented method on the one-dimensional
/// worked problem, every piece pair kept active (`eps = ∞`). Returns the
/// run report, the rendered per-pair table, and wall seconds.
pub fn reproduce_example() -> Result<(RunReport, String, f64), CliError> {
    let inst = Instance::Worked1d;
    let prog = inst.to_program();
    let cfg = ALConfig {
        eps: f64::INFINITY,
        rho0: 0.1,
        sigma: 2.0,
        alpha: 1.0,
        outer_rel_tol: 0.0,
        max_outer: 5,
        aux_multipliers: true,
        pair_table_step: true,
        ..ALConfig::default()
    };
    let x0 = vec![0.0];
    let start = Instant::now();
    let report = al_solve(&prog, &cfg, &x0).map_err(|e| CliError::Solve(e.to_string()))?;
    let wall = start.elapsed().as_secs_f64();

    let config = build_config_echo(&EchoInput {
        command: "reproduce-example",
        method: Method::Alm,
        inst: &inst,
        path_label: "-",
        run_seed: 0,
        x0_policy: "zeros",
        eps: cfg.eps,
        rho0: cfg.rho0,
        sigma: cfg.sigma,
        alpha: Some(cfg.alpha),
        p: None,
        eta_schedule: &cfg.eta_schedule,
        delta_schedule: &cfg.sca.delta_schedule,
        max_outer: cfg.max_outer,
        tol: cfg.outer_rel_tol,
        rho_cap: cfg.rho_cap,
        pair_cap: cfg.sca.pair_cap,
        subsolve_max_iter: cfg.sca.subsolve_max_iter,
        aux_multipliers: cfg.aux_multipliers,
    });
    let run =
        assemble_report(&inst, &prog, config, &report.base, Some(&report.lambda_history))?;

    let tables = report
        .aux_tables
        .as_ref()
        .ok_or_else(|| CliError::Solve("no auxiliary tables recorded".into()))?;
    let mut out = String::new();
    if let Some(first) = tables.first() {
        out.push('k');
        out.push_str("\trho");
        for entry in &first.entries {
            let label = piece_label(&entry.index);
            out.push_str(&format!("\tx_{label}\tlam_{label}\tF_{label}"));
        }
        out.push_str("\tx_step\tlam_next\n");
    }
    for (k, table) in tables.iter().enumerate() {
        out.push_str(&format!("{k}\t{}", fmt_f64(report.base.rho_history[k])));
        for entry in &table.entries {
            out.push_str(&format!(
                "\t{}\t{}\t{}",
                fmt_f64(entry.x[0]),
                fmt_f64(entry.lambda[0]),
                fmt_f64(entry.merit)
            ));
        }
        out.push_str(&format!(
            "\t{}\t{}\n",
            fmt_f64(report.base.x_history[k][0]),
            fmt_f64(report.lambda_history[k + 1][0])
        ));
    }
    Ok((run, out, wall))
}

/// Result paths for one completed solve-to-directory call.
pub struct RunPaths {
    pub dir: PathBuf,
}

/// Runs a solve and records it under `out`, returning the directory used.
pub fn solve_into_dir(
    out: &Path,
    inst: &Instance,
    path_label: &str,
    method: Method,
    params: &SolveParams,
    run_seed: u64,
) -> Result<(RunReport, f64, RunPaths), CliError> {
    let (report, wall) = run_solve(inst, path_label, method, params, run_seed, "solve")?;
    let index = next_run_index(out)?;
    let dir = out.join(run_dir_name(index, method, run_seed));
    write_run(&dir, &report, wall)?;
    Ok((report, wall, RunPaths { dir }))
}
