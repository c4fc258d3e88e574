//! Command-line front end for the solver library: instance generation,
//! recorded solver runs, post-hoc verification, result tables, and the two
//! reproduction commands. The binary lives in `main.rs`; everything it does
//! goes through this library so tests can drive the same paths.

pub mod driver;
pub mod report;
pub mod table;

pub use driver::{
    build_instance, collect_runs, initial_point, next_run_index, read_run, reproduce_example,
    reproduce_experiment_quadratic, reproduce_experiment_sparse, run_dir_name, run_solve,
    solve_into_dir, stop_label, thread_count, verify_run, write_run, CliError, ExperimentOutcome,
    Method, SolveParams, VerifyCheck, VerifyOutcome,
};
pub use report::{
    load_report, load_timing, parse_report, save_report, save_timing, IterRow, ReportError,
    RunReport, Summary, STOP_REASONS,
};
pub use table::{emit_table, TableRow, TABLE_HEADER};
