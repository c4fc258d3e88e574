use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use dcopt_cli::driver::{
    build_instance, collect_runs, reproduce_example, reproduce_experiment_quadratic,
    reproduce_experiment_sparse, run_dir_name, solve_into_dir, verify_run, write_run, CliError,
    Method, SolveParams, VerifyOutcome,
};
use dcopt_cli::report::load_report;
use dcopt_cli::table::{emit_table, TableRow};

#[derive(Parser)]
#[command(
    name = "dcopt",
    version,
    about = "Penalty and augmented Lagrangian solvers for difference-of-convex programs \
             with difference-of-convex constraints"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate an instance file.
    Gen {
        /// Instance family: worked-1d, quadratic-dc, or sparse-recovery.
        #[arg(long)]
        kind: String,
        /// Dimension n (quadratic-dc and sparse-recovery).
        #[arg(long)]
        n: Option<usize>,
        /// Measurement count m (sparse-recovery).
        #[arg(long)]
        m: Option<usize>,
        /// Planted support size (sparse-recovery).
        #[arg(long)]
        k: Option<usize>,
        /// Sparsity budget scale s > 0 (sparse-recovery).
        #[arg(long)]
        s: Option<f64>,
        /// Generator seed.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Instance file to write.
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve a saved instance into a new run directory.
    Solve {
        /// Instance file produced by `gen`.
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, value_enum)]
        method: Method,
        /// Activation margin for piece selection.
        #[arg(long)]
        eps: Option<f64>,
        /// Initial penalty weight.
        #[arg(long)]
        rho0: Option<f64>,
        /// Geometric weight growth factor.
        #[arg(long)]
        sigma: Option<f64>,
        /// Multiplier-norm exponent offset (alm).
        #[arg(long)]
        alpha: Option<f64>,
        /// Hinge power; must agree with the chosen penalty method.
        #[arg(long)]
        p: Option<u8>,
        #[arg(long)]
        max_outer: Option<usize>,
        /// Relative-change stopping tolerance.
        #[arg(long)]
        tol: Option<f64>,
        /// Starting-point seed.
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Directory that receives the run subdirectory.
        #[arg(long, default_value = "runs")]
        out: PathBuf,
        /// Re-check the finished run before exiting.
        #[arg(long)]
        verify: bool,
        /// Record auxiliary multiplier tables (alm).
        #[arg(long)]
        aux_multipliers: bool,
    },
    /// Re-check a finished run directory (or a report file directly).
    Verify {
        /// Run directory containing report.tsv, or a report file.
        target: PathBuf,
    },
    /// Re-run the tabular worked example and print its per-pair table.
    ReproduceExample {
        /// Optional directory for the run artifacts.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a batch experiment and print its result table.
    ReproduceExperiment {
        /// Which batch: quadratic or sparse.
        which: String,
        /// Directory that receives the run subdirectories and table.tsv.
        #[arg(long, default_value = "experiment")]
        out: PathBuf,
        /// Seeded runs per method.
        #[arg(long, default_value_t = 10)]
        runs: u64,
        /// Base seed.
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Dimension of the generated quadratic instance.
        #[arg(long, default_value_t = 50)]
        n: usize,
    },
    /// Render the result table for a directory of recorded runs.
    EmitTable {
        /// Directory containing run-* subdirectories.
        root: PathBuf,
    },
}

fn print_checks(outcome: &VerifyOutcome) {
    for check in &outcome.checks {
        println!(
            "check {}: {} ({})",
            check.name,
            if check.passed { "pass" } else { "FAIL" },
            check.detail
        );
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|v| format!("{v:.16e}")).unwrap_or_else(|| "-".into())
}

fn run(cli: Cli) -> Result<u8, CliError> {
    match cli.command {
        Command::Gen { kind, n, m, k, s, seed, out } => {
            let inst = build_instance(&kind, n, m, k, s, seed)?;
            dcopt::save_instance(&inst, &out)?;
            println!("wrote {} instance to {}", inst.kind(), out.display());
            Ok(0)
        }
        Command::Solve {
            instance,
            method,
            eps,
            rho0,
            sigma,
            alpha,
            p,
            max_outer,
            tol,
            seed,
            out,
            verify,
            aux_multipliers,
        } => {
            if let Some(p) = p {
                let expected = match method {
                    Method::Pm1 => Some(1),
                    Method::Pm2 => Some(2),
                    Method::Alm => None,
                };
                match expected {
                    Some(want) if want == p => {}
                    Some(want) => {
                        return Err(CliError::Config(format!(
                            "--p {p} contradicts --method {method} (hinge power {want})"
                        )))
                    }
                    None => {
                        return Err(CliError::Config(
                            "--p applies to the penalty methods only".into(),
                        ))
                    }
                }
            }
            let mut params = SolveParams::default();
            if let Some(v) = eps {
                params.eps = v;
            }
            if let Some(v) = rho0 {
                params.rho0 = v;
            }
            if let Some(v) = sigma {
                params.sigma = v;
            }
            if let Some(v) = alpha {
                params.alpha = v;
            }
            if let Some(v) = max_outer {
                params.max_outer = v;
            }
            if let Some(v) = tol {
                params.tol = v;
            }
            params.aux_multipliers = aux_multipliers;

            let inst = dcopt::load_instance(&instance)?;
            let path_label = instance.to_string_lossy().into_owned();
            let (report, wall, paths) =
                solve_into_dir(&out, &inst, &path_label, method, &params, seed)?;
            println!("run written to {}", paths.dir.display());
            println!("stop {}", report.summary.stop);
            println!("objective {:.16e}", report.summary.objective);
            println!("rel_err {}", opt(report.summary.rel_err));
            println!(
                "feasibility {:.16e}",
                report.rows.last().map(|r| r.feasibility).unwrap_or(f64::NAN)
            );
            println!("outer_iterations {}", report.summary.outer_iterations);
            println!("subsolve_count {}", report.summary.subsolve_count);
            println!("wall_seconds {wall:.2e}");
            let mut ok = report.summary.stop == "relative-change";
            if verify {
                let outcome = verify_run(&report)?;
                print_checks(&outcome);
                ok = ok && outcome.passed();
            }
            Ok(if ok { 0 } else { 1 })
        }
        Command::Verify { target } => {
            let path = if target.is_dir() {
                target.join("report.tsv")
            } else {
                target
            };
            let report = load_report(&path)?;
            let outcome = verify_run(&report)?;
            print_checks(&outcome);
            Ok(if outcome.passed() { 0 } else { 1 })
        }
        Command::ReproduceExample { out } => {
            let (report, table, wall) = reproduce_example()?;
            print!("{table}");
            if let Some(out) = out {
                let dir = out.join(run_dir_name(
                    dcopt_cli::driver::next_run_index(&out)?,
                    Method::Alm,
                    0,
                ));
                write_run(&dir, &report, wall)?;
                std::fs::write(out.join("table.tsv"), &table)?;
                println!("run written to {}", dir.display());
            }
            Ok(if report.summary.stop == "max-outer" { 0 } else { 1 })
        }
        Command::ReproduceExperiment {
            which,
            out,
            runs,
            seed,
            n,
        } => {
            let outcome = match which.as_str() {
                "quadratic" => reproduce_experiment_quadratic(&out, n, seed, runs)?,
                "sparse" => reproduce_experiment_sparse(&out, seed, runs)?,
                other => {
                    return Err(CliError::Config(format!(
                        "unknown experiment {other:?}; expected quadratic or sparse"
                    )))
                }
            };
            print!("{}", outcome.table);
            println!("table written to {}", out.join("table.tsv").display());
            Ok(if outcome.all_converged { 0 } else { 1 })
        }
        Command::EmitTable { root } => {
            let runs = collect_runs(&root)?;
            let rows: Vec<TableRow> = runs
                .iter()
                .map(|(name, report, wall)| TableRow::from_report(name, report, *wall))
                .collect();
            print!("{}", emit_table(&rows));
            if rows.is_empty() {
                eprintln!("warning: no runs found under {}", root.display());
                return Ok(2);
            }
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
