//! Summary tables over collections of runs: one data row per run, stable
//! column order, per-method mean rows, deterministic formatting.

use crate::report::RunReport;

/// One table line distilled from a run report plus its optional timing.
#[derive(Clone, Debug, PartialEq)]
pub struct TableRow {
    /// Run directory name, e.g. `run-003-pm2-seed4`.
    pub run: String,
    pub method: String,
    pub kind: String,
    pub seed: String,
    pub objective: f64,
    pub rel_err: Option<f64>,
    pub outer_iterations: usize,
    pub subsolve_count: usize,
    /// Wall-clock seconds, absent when no timing sidecar was found.
    pub wall_seconds: Option<f64>,
}

impl TableRow {
    /// Distills a report (config keys `method`, `instance_kind`, `run_seed`)
    /// and optional wall time into a table row.
    pub fn from_report(run: &str, report: &RunReport, wall_seconds: Option<f64>) -> TableRow {
        let get = |k: &str| report.config_get(k).unwrap_or("-").to_string();
        TableRow {
            run: run.to_string(),
            method: get("method"),
            kind: get("instance_kind"),
            seed: get("run_seed"),
            objective: report.summary.objective,
            rel_err: report.summary.rel_err,
            outer_iterations: report.summary.outer_iterations,
            subsolve_count: report.summary.subsolve_count,
            wall_seconds,
        }
    }
}

pub const TABLE_HEADER: &str =
    "run\tmethod\tkind\tseed\tobjective\trel_err\touter_iterations\tsubsolve_count\twall_seconds";

fn opt16(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |v| format!("{v:.16e}"))
}

/// Three-significant-digit time format.
fn opt_time(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |v| format!("{v:.2e}"))
}

fn mean<I: Iterator<Item = f64>>(it: I) -> Option<f64> {
    let (mut sum, mut n) = (0.0, 0usize);
    for v in it {
        sum += v;
        n += 1;
    }
    (n > 0).then(|| sum / n as f64)
}

/// Renders the table: header, one row per run sorted by (method, kind,
/// seed, run), and — whenever a method has at least one run — a trailing
/// `mean-<method>` row averaging that method's numeric columns, mirroring
/// experiment write-ups that report per-method averages over seeds.
pub fn emit_table(rows: &[TableRow]) -> String {
    let mut rows: Vec<&TableRow> = rows.iter().collect();
    // Numeric seed order when possible so seed10 follows seed9.
    let seed_key = |r: &TableRow| {
        (
            r.seed.parse::<u64>().map_or(u64::MAX, |v| v),
            r.seed.clone(),
        )
    };
    rows.sort_by_key(|r| (r.method.clone(), r.kind.clone(), seed_key(r), r.run.clone()));

    let mut out = String::from(TABLE_HEADER);
    out.push('\n');
    for r in &rows {
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{:.16e}\t{}\t{}\t{}\t{}\n",
            r.run,
            r.method,
            r.kind,
            r.seed,
            r.objective,
            opt16(r.rel_err),
            r.outer_iterations,
            r.subsolve_count,
            opt_time(r.wall_seconds),
        ));
    }

    let mut methods: Vec<&str> = rows.iter().map(|r| r.method.as_str()).collect();
    methods.sort_unstable();
    methods.dedup();
    for m in methods {
        let group: Vec<&&TableRow> = rows.iter().filter(|r| r.method == m).collect();
        let kinds: Vec<&str> = {
            let mut k: Vec<&str> = group.iter().map(|r| r.kind.as_str()).collect();
            k.sort_unstable();
            k.dedup();
            k
        };
        let kind = if kinds.len() == 1 { kinds[0] } else { "-" };
        out.push_str(&format!(
            "mean-{}\t{}\t{}\t-\t{}\t{}\t{}\t{}\t{}\n",
            m,
            m,
            kind,
            opt16(mean(group.iter().map(|r| r.objective))),
            opt16(mean(group.iter().filter_map(|r| r.rel_err))),
            opt16(mean(group.iter().map(|r| r.outer_iterations as f64))),
            opt16(mean(group.iter().map(|r| r.subsolve_count as f64))),
            opt_time(mean(group.iter().filter_map(|r| r.wall_seconds))),
        ));
    }
    out
}
