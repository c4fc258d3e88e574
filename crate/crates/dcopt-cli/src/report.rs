//! Machine-readable run reports: one file per run, deterministic bytes.
//!
//! `report.tsv` is a tab-separated line protocol:
//!
//! ```text
//! dcopt-report v1
//! config<TAB><key><TAB><value>            (resolved configuration echo)
//! columns<TAB>k<TAB>rho<TAB>...           (fixed literal documenting rows)
//! row<TAB><k><TAB><rho><TAB><x_norm><TAB><objective><TAB><feasibility>
//!    <TAB><inner_accepts><TAB><inner_subsolves><TAB><lambda|->
//! summary<TAB>objective<TAB><value>
//! summary<TAB>rel_err<TAB><value|->
//! summary<TAB>outer_iterations<TAB><count>
//! summary<TAB>subsolve_count<TAB><count>
//! summary<TAB>stop<TAB><reason>
//! xfinal<TAB><v1><TAB><v2>...
//! end
//! ```
//!
//! Floats are printed `%.16e` (17 significant digits) so values survive a
//! parse/serialize round trip exactly; multipliers are comma-joined in one
//! field, `-` when the method carries none. Wall-clock time is deliberately
//! kept out of this file — identical configuration and seed must produce
//! byte-identical reports — and lives in the sibling `timing.tsv`.
//!
//! The parser accepts arbitrary untrusted bytes: strict structure, bounded
//! allocation, structured errors, no panics.

use std::path::Path;

use thiserror::Error;

/// Hard ceiling on per-file element counts; rejects absurd claims before
/// work proportional to them happens.
const MAX_ROWS: usize = 1 << 20;
const MAX_VEC: usize = 1 << 24;
const MAX_LAMBDA: usize = 1 << 16;
const MAX_CONFIG: usize = 1 << 12;

const HEADER: &str = "dcopt-report v1";
const COLUMNS: &str =
    "columns\tk\trho\tx_norm\tobjective\tfeasibility\tinner_accepts\tinner_subsolves\tlambda";

const TIMING_HEADER: &str = "dcopt-timing v1";

/// Structured failure of report IO or parsing.
#[derive(Debug, Error)]
pub enum ReportError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("unrecognized format header {got:?}")]
    Version { got: String },
    #[error("input ends early: expected {expected}")]
    Truncated { expected: String },
    #[error("line {line_no}: {reason}")]
    Malformed { line_no: usize, reason: String },
    #[error("invalid report: {reason}")]
    Invalid { reason: String },
}

/// One outer iteration of a solver run.
#[derive(Clone, Debug, PartialEq)]
pub struct IterRow {
    pub k: usize,
    /// Penalty weight used during this iteration.
    pub rho: f64,
    /// Euclidean norm of the iterate produced by this iteration.
    pub x_norm: f64,
    /// Objective value (not the merit) at the iterate.
    pub objective: f64,
    /// `max_i [c_i]₊` at the iterate.
    pub feasibility: f64,
    pub inner_accepts: usize,
    pub inner_subsolves: usize,
    /// Multipliers used during this iteration; absent for penalty runs.
    pub lambda: Option<Vec<f64>>,
}

/// The run's bottom-line row.
#[derive(Clone, Debug, PartialEq)]
pub struct Summary {
    pub objective: f64,
    /// `‖x̃ − x*‖/‖x*‖` when the instance carries a reference signal.
    pub rel_err: Option<f64>,
    pub outer_iterations: usize,
    pub subsolve_count: usize,
    /// One of `relative-change`, `max-outer`, `rho-cap`, `inner-failure`.
    pub stop: String,
}

/// A complete run report: configuration echo, per-iteration rows, summary,
/// and the final iterate.
#[derive(Clone, Debug, PartialEq)]
pub struct RunReport {
    /// Ordered key/value echo of the fully resolved configuration.
    pub config: Vec<(String, String)>,
    pub rows: Vec<IterRow>,
    pub summary: Summary,
    pub x_final: Vec<f64>,
}

pub const STOP_REASONS: [&str; 4] =
    ["relative-change", "max-outer", "rho-cap", "inner-failure"];

impl RunReport {
    /// Looks up a configuration key; last writer wins (there are no
    /// duplicate keys in reports this crate writes).
    pub fn config_get(&self, key: &str) -> Option<&str> {
        self.config
            .iter()
            .rev()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    /// Renders the canonical byte-exact form.
    pub fn serialize(&self) -> String {
        use std::fmt::Write as _;
        let mut out = String::new();
        let _ = writeln!(out, "{HEADER}");
        for (k, v) in &self.config {
            let _ = writeln!(out, "config\t{k}\t{v}");
        }
        let _ = writeln!(out, "{COLUMNS}");
        for r in &self.rows {
            let lambda = match &r.lambda {
                None => "-".to_string(),
                Some(l) => l
                    .iter()
                    .map(|v| format!("{v:.16e}"))
                    .collect::<Vec<_>>()
                    .join(","),
            };
            let _ = writeln!(
                out,
                "row\t{}\t{:.16e}\t{:.16e}\t{:.16e}\t{:.16e}\t{}\t{}\t{}",
                r.k,
                r.rho,
                r.x_norm,
                r.objective,
                r.feasibility,
                r.inner_accepts,
                r.inner_subsolves,
                lambda
            );
        }
        let _ = writeln!(out, "summary\tobjective\t{:.16e}", self.summary.objective);
        match self.summary.rel_err {
            Some(v) => {
                let _ = writeln!(out, "summary\trel_err\t{v:.16e}");
            }
            None => {
                let _ = writeln!(out, "summary\trel_err\t-");
            }
        }
        let _ = writeln!(
            out,
            "summary\touter_iterations\t{}",
            self.summary.outer_iterations
        );
        let _ = writeln!(out, "summary\tsubsolve_count\t{}", self.summary.subsolve_count);
        let _ = writeln!(out, "summary\tstop\t{}", self.summary.stop);
        let mut xline = String::from("xfinal");
        for v in &self.x_final {
            let _ = write!(xline, "\t{v:.16e}");
        }
        let _ = writeln!(out, "{xline}");
        out.push_str("end\n");
        out
    }
}

/// Writes a report to `path` in the canonical form.
pub fn save_report(report: &RunReport, path: impl AsRef<Path>) -> Result<(), ReportError> {
    std::fs::write(path, report.serialize())?;
    Ok(())
}

/// Reads and parses a report file.
pub fn load_report(path: impl AsRef<Path>) -> Result<RunReport, ReportError> {
    let text = std::fs::read_to_string(path)?;
    parse_report(&text)
}

/// Writes the non-deterministic sidecar with the run's wall-clock seconds.
pub fn save_timing(wall_seconds: f64, path: impl AsRef<Path>) -> Result<(), ReportError> {
    std::fs::write(
        path,
        format!("{TIMING_HEADER}\nwall_seconds\t{wall_seconds:.6e}\nend\n"),
    )?;
    Ok(())
}

/// Best-effort read of a timing sidecar; `None` when missing or malformed
/// (timings are informational, never load-bearing).
pub fn load_timing(path: impl AsRef<Path>) -> Option<f64> {
    let text = std::fs::read_to_string(path).ok()?;
    let mut lines = text.lines();
    if lines.next()? != TIMING_HEADER {
        return None;
    }
    let v: f64 = lines.next()?.strip_prefix("wall_seconds\t")?.parse().ok()?;
    v.is_finite().then_some(v)
}

/// Parses the canonical report form from memory. Total on arbitrary input:
/// strict structure, bounded allocation, no panics.
pub fn parse_report(text: &str) -> Result<RunReport, ReportError> {
    let mut lines = text.split('\n').enumerate().peekable();
    let mut next = |expected: &str| -> Result<(usize, &str), ReportError> {
        match lines.next() {
            // `split` yields one final empty piece when the text ends with a
            // newline; treat reaching it as end of input.
            Some((i, line)) if !(line.is_empty() && i > 0) => Ok((i + 1, line)),
            _ => Err(ReportError::Truncated {
                expected: expected.to_string(),
            }),
        }
    };
    let malformed = |line_no: usize, reason: String| ReportError::Malformed { line_no, reason };

    let (no, header) = next("format header")?;
    if header != HEADER {
        return Err(ReportError::Version {
            got: header.to_string(),
        });
    }
    let _ = no;

    // Config lines, then the fixed columns line.
    let mut config = Vec::new();
    loop {
        let (no, line) = next("config or columns line")?;
        if line == COLUMNS {
            break;
        }
        let mut f = line.split('\t');
        match (f.next(), f.next(), f.next(), f.next()) {
            (Some("config"), Some(k), Some(v), None) if !k.is_empty() => {
                if config.len() >= MAX_CONFIG {
                    return Err(ReportError::Invalid {
                        reason: "too many config entries".to_string(),
                    });
                }
                config.push((k.to_string(), v.to_string()));
            }
            _ => {
                return Err(malformed(
                    no,
                    format!("expected config or columns line, found {line:?}"),
                ))
            }
        }
    }

    let parse_count = |no: usize, tok: &str, what: &str| -> Result<usize, ReportError> {
        tok.parse()
            .map_err(|_| malformed(no, format!("bad {what} {tok:?}")))
    };
    let parse_float = |no: usize, tok: &str, what: &str| -> Result<f64, ReportError> {
        let v: f64 = tok
            .parse()
            .map_err(|_| malformed(no, format!("bad {what} {tok:?}")))?;
        if !v.is_finite() {
            return Err(malformed(no, format!("non-finite {what}")));
        }
        Ok(v)
    };

    // Iteration rows, then the summary block.
    let mut rows: Vec<IterRow> = Vec::new();
    let summary_objective;
    loop {
        let (no, line) = next("row or summary line")?;
        let fields: Vec<&str> = line.split('\t').collect();
        match fields.first().copied() {
            Some("row") => {
                if fields.len() != 9 {
                    return Err(malformed(no, format!("row needs 9 fields, got {}", fields.len())));
                }
                if rows.len() >= MAX_ROWS {
                    return Err(ReportError::Invalid {
                        reason: "too many rows".to_string(),
                    });
                }
                let k = parse_count(no, fields[1], "iteration index")?;
                if k != rows.len() {
                    return Err(malformed(no, format!("iteration index {k} out of order")));
                }
                let lambda = if fields[8] == "-" {
                    None
                } else {
                    let mut vals = Vec::new();
                    for tok in fields[8].split(',') {
                        if vals.len() >= MAX_LAMBDA {
                            return Err(ReportError::Invalid {
                                reason: "too many multipliers".to_string(),
                            });
                        }
                        vals.push(parse_float(no, tok, "multiplier")?);
                    }
                    Some(vals)
                };
                rows.push(IterRow {
                    k,
                    rho: parse_float(no, fields[2], "rho")?,
                    x_norm: parse_float(no, fields[3], "x_norm")?,
                    objective: parse_float(no, fields[4], "objective")?,
                    feasibility: parse_float(no, fields[5], "feasibility")?,
                    inner_accepts: parse_count(no, fields[6], "inner_accepts")?,
                    inner_subsolves: parse_count(no, fields[7], "inner_subsolves")?,
                    lambda,
                });
            }
            Some("summary")
                if fields.len() == 3 && fields[1] == "objective" =>
            {
                summary_objective = parse_float(no, fields[2], "summary objective")?;
                break;
            }
            _ => {
                return Err(malformed(
                    no,
                    format!("expected row or summary line, found {line:?}"),
                ))
            }
        }
    }

    let mut summary_field = |name: &str| -> Result<(usize, String), ReportError> {
        let (no, line) = next(&format!("summary {name}"))?;
        let mut f = line.split('\t');
        match (f.next(), f.next(), f.next(), f.next()) {
            (Some("summary"), Some(k), Some(v), None) if k == name => Ok((no, v.to_string())),
            _ => Err(malformed(no, format!("expected summary {name}, found {line:?}"))),
        }
    };
    let (no, rel_err_tok) = summary_field("rel_err")?;
    let rel_err = if rel_err_tok == "-" {
        None
    } else {
        Some(parse_float(no, &rel_err_tok, "rel_err")?)
    };
    let (no, outer_tok) = summary_field("outer_iterations")?;
    let outer_iterations = parse_count(no, &outer_tok, "outer_iterations")?;
    let (no, sub_tok) = summary_field("subsolve_count")?;
    let subsolve_count = parse_count(no, &sub_tok, "subsolve_count")?;
    let (no, stop) = summary_field("stop")?;
    if !STOP_REASONS.contains(&stop.as_str()) {
        return Err(malformed(no, format!("unknown stop reason {stop:?}")));
    }

    let (no, xline) = next("xfinal line")?;
    let mut xf = xline.split('\t');
    if xf.next() != Some("xfinal") {
        return Err(malformed(no, format!("expected xfinal line, found {xline:?}")));
    }
    let mut x_final = Vec::new();
    for tok in xf {
        if x_final.len() >= MAX_VEC {
            return Err(ReportError::Invalid {
                reason: "final iterate too long".to_string(),
            });
        }
        x_final.push(parse_float(no, tok, "final iterate entry")?);
    }

    let (_, endline) = next("end line")?;
    if endline != "end" {
        return Err(ReportError::Invalid {
            reason: format!("expected end line, found {endline:?}"),
        });
    }
    if let Some((i, extra)) = lines.next() {
        if !extra.is_empty() || lines.next().is_some() {
            return Err(malformed(i + 1, "content after end".to_string()));
        }
    }

    // Cross-field consistency.
    if rows.is_empty() {
        return Err(ReportError::Invalid {
            reason: "report carries no iterations".to_string(),
        });
    }
    if outer_iterations != rows.len() {
        return Err(ReportError::Invalid {
            reason: format!(
                "summary outer_iterations {} but {} rows",
                outer_iterations,
                rows.len()
            ),
        });
    }
    let total: usize = rows.iter().map(|r| r.inner_subsolves).sum();
    if subsolve_count != total {
        return Err(ReportError::Invalid {
            reason: format!("summary subsolve_count {subsolve_count} but rows sum to {total}"),
        });
    }
    if x_final.is_empty() {
        return Err(ReportError::Invalid {
            reason: "empty final iterate".to_string(),
        });
    }

    Ok(RunReport {
        config,
        rows,
        summary: Summary {
            objective: summary_objective,
            rel_err,
            outer_iterations,
            subsolve_count,
            stop,
        },
        x_final,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> RunReport {
        RunReport {
            config: vec![
                ("method".into(), "alm".into()),
                ("instance_kind".into(), "worked-1d".into()),
                ("run_seed".into(), "7".into()),
            ],
            rows: vec![
                IterRow {
                    k: 0,
                    rho: 0.1,
                    x_norm: 50.0,
                    objective: -250.0,
                    feasibility: 50.0,
                    inner_accepts: 1,
                    inner_subsolves: 12,
                    lambda: Some(vec![0.0]),
                },
                IterRow {
                    k: 1,
                    rho: 25.0,
                    x_norm: 0.0577,
                    objective: -0.28125,
                    feasibility: 0.0577,
                    inner_accepts: 1,
                    inner_subsolves: 9,
                    lambda: Some(vec![5.0]),
                },
            ],
            summary: Summary {
                objective: -0.28125,
                rel_err: None,
                outer_iterations: 2,
                subsolve_count: 21,
                stop: "max-outer".into(),
            },
            x_final: vec![-0.0577],
        }
    }

    #[test]
    fn round_trip_is_byte_identical() {
        let r = sample();
        let text = r.serialize();
        let back = parse_report(&text).unwrap();
        assert_eq!(back, r);
        assert_eq!(back.serialize(), text);
    }

    #[test]
    fn penalty_rows_without_multipliers_round_trip() {
        let mut r = sample();
        for row in &mut r.rows {
            row.lambda = None;
        }
        r.summary.rel_err = Some(2.0e-3);
        let back = parse_report(&r.serialize()).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn truncation_names_the_missing_element() {
        let text = sample().serialize();
        let cut_at = text.find("summary\trel_err").unwrap();
        match parse_report(&text[..cut_at]) {
            Err(ReportError::Truncated { expected }) => {
                assert!(expected.contains("rel_err"), "{expected}");
            }
            other => panic!("expected truncation, got {other:?}"),
        }
    }

    #[test]
    fn structural_corruption_is_reported_with_line_numbers() {
        let text = sample().serialize();
        // Wrong header.
        assert!(matches!(
            parse_report("dcopt-report v9\n"),
            Err(ReportError::Version { .. })
        ));
        // Garbage float in a row: header + 3 config + columns + row 0 put
        // row 1's rho on line 7.
        let bad = text.replace("2.5000000000000000e1", "2.5x");
        match parse_report(&bad) {
            Err(ReportError::Malformed { line_no, reason }) => {
                assert_eq!(line_no, 7);
                assert!(reason.contains("rho"), "{reason}");
            }
            other => panic!("{other:?}"),
        }
        // Out-of-order iteration index.
        let bad = text.replace("row\t1\t", "row\t3\t");
        assert!(parse_report(&bad).is_err());
        // Non-finite value.
        let bad = text.replace("summary\tobjective\t-2.8125000000000000e-1", "summary\tobjective\tinf");
        assert!(matches!(parse_report(&bad), Err(ReportError::Malformed { .. })));
        // Unknown stop reason.
        let bad = text.replace("stop\tmax-outer", "stop\tran-out-of-tea");
        assert!(matches!(parse_report(&bad), Err(ReportError::Malformed { .. })));
        // Trailing content.
        let bad = format!("{text}more\n");
        assert!(matches!(parse_report(&bad), Err(ReportError::Malformed { .. })));
    }

    #[test]
    fn cross_field_inconsistency_is_invalid() {
        let mut r = sample();
        r.summary.subsolve_count = 99;
        assert!(matches!(
            parse_report(&r.serialize()),
            Err(ReportError::Invalid { reason }) if reason.contains("subsolve_count")
        ));
        let mut r = sample();
        r.summary.outer_iterations = 5;
        assert!(matches!(
            parse_report(&r.serialize()),
            Err(ReportError::Invalid { .. })
        ));
        let mut r = sample();
        r.x_final.clear();
        assert!(matches!(
            parse_report(&r.serialize()),
            Err(ReportError::Invalid { reason }) if reason.contains("final iterate")
        ));
    }

    #[test]
    fn timing_sidecar_round_trips_loosely() {
        let dir = std::env::temp_dir();
        let path = dir.join(format!("dcopt-timing-test-{}.tsv", std::process::id()));
        save_timing(1.25, &path).unwrap();
        let got = load_timing(&path).unwrap();
        std::fs::remove_file(&path).unwrap();
        assert!((got - 1.25).abs() <= 1e-6);
        assert_eq!(load_timing(dir.join("dcopt-no-such-timing.tsv")), None);
    }

    #[test]
    fn config_lookup_returns_the_value() {
        let r = sample();
        assert_eq!(r.config_get("method"), Some("alm"));
        assert_eq!(r.config_get("run_seed"), Some("7"));
        assert_eq!(r.config_get("missing"), None);
    }
}
