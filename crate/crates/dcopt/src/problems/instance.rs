//! On-disk instance format: a line-oriented text file that round-trips
//! every generated problem byte-for-byte.
//!
//! Layout (every line `\n`-terminated, single spaces, no padding):
//!
//! ```text
//! dcopt-instance v1
//! kind <worked-1d|quadratic-dc|sparse-recovery>
//! seed <u64>
//! param <name> <value>        (kind-specific, fixed order)
//! section <name> <count>      (kind-specific, fixed order)
//! <count lines, one float each, printf %.16e>
//! checksum sha256 <64 hex digits>
//! end
//! ```
//!
//! The checksum covers every byte of the file before the checksum line.
//! Floats carry 17 significant digits, so `f64` values survive a
//! serialize/parse round trip exactly and re-serializing a parsed
//! instance reproduces the input byte-for-byte.
//!
//! The parser is strict — canonical order, exact token counts, finite
//! values, verified checksum — and total: any byte sequence returns
//! either an instance or a structured error, never a panic or an
//! unbounded allocation.

use std::fmt::Write as _;
use std::path::Path;

use sha2::{Digest, Sha256};
use thiserror::Error;

use super::{QuadConstraintData, QuadData, QuadraticDCSpec, SparseRecoverySpec};
use crate::model::DCProgram;

/// Upper bound on the total number of serialized values in one file;
/// rejects absurd dimension claims before any proportional work happens.
const MAX_TOTAL_VALUES: usize = 1 << 24;

const HEADER: &str = "dcopt-instance v1";

/// Structured failure of instance IO or parsing.
#[derive(Debug, Error)]
pub enum InstanceError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    /// First line is not the recognized format header.
    #[error("unrecognized format header {got:?}")]
    Version { got: String },
    #[error("unknown instance kind {got:?}")]
    UnknownKind { got: String },
    /// Input ended before the named element was read.
    #[error("input ends early: expected {expected}")]
    Truncated { expected: String },
    #[error("line {line_no}: {reason}")]
    Malformed { line_no: usize, reason: String },
    #[error("checksum mismatch: stored {stored}, computed {computed}")]
    ChecksumMismatch { stored: String, computed: String },
    /// Structurally well-formed but semantically inconsistent data.
    #[error("invalid instance: {reason}")]
    Invalid { reason: String },
}

/// A fully materialized problem instance: the data needed to rebuild the
/// program, keyed by the kind tag used in the file format.
#[derive(Clone, Debug, PartialEq)]
pub enum Instance {
    Worked1d,
    Quadratic(QuadraticDCSpec),
    SparseRecovery(SparseRecoverySpec),
}

impl Instance {
    /// The kind tag written to and read from the file format.
    pub fn kind(&self) -> &'static str {
        match self {
            Instance::Worked1d => "worked-1d",
            Instance::Quadratic(_) => "quadratic-dc",
            Instance::SparseRecovery(_) => "sparse-recovery",
        }
    }

    /// Builds the runnable program this instance describes.
    pub fn to_program(&self) -> DCProgram {
        match self {
            Instance::Worked1d => super::worked_example_1d(),
            Instance::Quadratic(s) => s.to_program(),
            Instance::SparseRecovery(s) => s.to_program(),
        }
    }

    /// Renders the canonical serialized form.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{HEADER}");
        let _ = writeln!(out, "kind {}", self.kind());
        match self {
            Instance::Worked1d => {
                let _ = writeln!(out, "seed 0");
            }
            Instance::Quadratic(s) => {
                let _ = writeln!(out, "seed {}", s.seed);
                let _ = writeln!(out, "param n {}", s.n);
                for (base, q) in quad_blocks(s) {
                    write_quad_sections(&mut out, &base, q);
                }
            }
            Instance::SparseRecovery(s) => {
                let _ = writeln!(out, "seed {}", s.seed);
                let _ = writeln!(out, "param m {}", s.m);
                let _ = writeln!(out, "param n {}", s.n);
                let _ = writeln!(out, "param k {}", s.k);
                let _ = writeln!(out, "param s {:.16e}", s.s);
                write_section(&mut out, "a", &s.a);
                write_section(&mut out, "b", &s.b);
                write_section(&mut out, "x_star", &s.x_star);
            }
        }
        let digest = Sha256::digest(out.as_bytes());
        let _ = write!(out, "checksum sha256 ");
        for byte in digest {
            let _ = write!(out, "{byte:02x}");
        }
        out.push('\n');
        out.push_str("end\n");
        out
    }
}

/// The seven quadratic-form blocks of a quadratic instance in canonical
/// serialization order.
fn quad_blocks(s: &QuadraticDCSpec) -> Vec<(String, &QuadData)> {
    let mut blocks = vec![("objective".to_string(), &s.objective)];
    for (i, c) in s.constraints.iter().enumerate() {
        blocks.push((format!("cons{i}.convex"), &c.convex));
        blocks.push((format!("cons{i}.piece0"), &c.pieces[0]));
        blocks.push((format!("cons{i}.piece1"), &c.pieces[1]));
    }
    blocks
}

fn write_quad_sections(out: &mut String, base: &str, q: &QuadData) {
    write_section(out, &format!("{base}.mat"), &q.mat);
    write_section(out, &format!("{base}.lam_max"), &[q.lam_max]);
    write_section(out, &format!("{base}.vec"), &q.vec);
    write_section(out, &format!("{base}.constant"), &[q.constant]);
}

fn write_section(out: &mut String, name: &str, values: &[f64]) {
    let _ = writeln!(out, "section {name} {}", values.len());
    for v in values {
        let _ = writeln!(out, "{v:.16e}");
    }
}

/// Serializes `inst` to `path` in the canonical form.
pub fn save_instance(inst: &Instance, path: impl AsRef<Path>) -> Result<(), InstanceError> {
    std::fs::write(path, inst.serialize())?;
    Ok(())
}

/// Reads and parses an instance file.
pub fn load_instance(path: impl AsRef<Path>) -> Result<Instance, InstanceError> {
    let text = std::fs::read_to_string(path)?;
    load_instance_from_str(&text)
}

/// Parses the canonical serialized form from memory. Total on arbitrary
/// input: strict structure, bounded allocation, no panics.
pub fn load_instance_from_str(text: &str) -> Result<Instance, InstanceError> {
    Parser::new(text).parse()
}

struct Parser<'a> {
    text: &'a str,
    /// Byte offset of the next unread character.
    pos: usize,
    /// 1-based number of the most recently consumed line.
    line_no: usize,
}

impl<'a> Parser<'a> {
    fn new(text: &'a str) -> Self {
        Parser {
            text,
            pos: 0,
            line_no: 0,
        }
    }

    fn truncated(&self, expected: &str) -> InstanceError {
        InstanceError::Truncated {
            expected: expected.to_string(),
        }
    }

    fn malformed(&self, reason: impl Into<String>) -> InstanceError {
        InstanceError::Malformed {
            line_no: self.line_no,
            reason: reason.into(),
        }
    }

    fn next_line(&mut self, expected: &str) -> Result<&'a str, InstanceError> {
        if self.pos >= self.text.len() {
            return Err(self.truncated(expected));
        }
        let rest = &self.text[self.pos..];
        let (line, advance) = match rest.find('\n') {
            Some(i) => (&rest[..i], i + 1),
            None => (rest, rest.len()),
        };
        self.pos += advance;
        self.line_no += 1;
        Ok(line)
    }

    /// Consumes a line that must equal `literal` exactly.
    fn expect_line(&mut self, literal: &str) -> Result<(), InstanceError> {
        let line = self.next_line(&format!("{literal:?}"))?;
        if line != literal {
            return Err(self.malformed(format!("expected {literal:?}, found {line:?}")));
        }
        Ok(())
    }

    /// Consumes `param <name> <value>` and parses the value token.
    fn param<T: std::str::FromStr>(&mut self, name: &str) -> Result<T, InstanceError> {
        let line = self.next_line(&format!("param {name}"))?;
        let mut it = line.split(' ');
        if it.next() != Some("param") || it.next() != Some(name) {
            return Err(self.malformed(format!("expected \"param {name} <value>\", found {line:?}")));
        }
        let tok = match (it.next(), it.next()) {
            (Some(t), None) => t,
            _ => return Err(self.malformed(format!("expected \"param {name} <value>\", found {line:?}"))),
        };
        tok.parse()
            .map_err(|_| self.malformed(format!("bad value for param {name}: {tok:?}")))
    }

    /// Consumes one `section` header plus its values; the declared count
    /// must equal `count` exactly.
    fn section(&mut self, name: &str, count: usize) -> Result<Vec<f64>, InstanceError> {
        let line = self.next_line(&format!("section {name}"))?;
        let mut it = line.split(' ');
        if it.next() != Some("section") || it.next() != Some(name) {
            return Err(self.malformed(format!("expected section {name}, found {line:?}")));
        }
        let declared: usize = match (it.next(), it.next()) {
            (Some(t), None) => t
                .parse()
                .map_err(|_| self.malformed(format!("bad count for section {name}: {t:?}")))?,
            _ => return Err(self.malformed(format!("malformed header for section {name}"))),
        };
        if declared != count {
            return Err(self.malformed(format!(
                "section {name} declares {declared} values, expected {count}"
            )));
        }
        let mut values = Vec::new();
        for i in 0..count {
            let line = self.next_line(&format!("value {i} of section {name}"))?;
            let v: f64 = line
                .parse()
                .map_err(|_| self.malformed(format!("bad float {line:?} in section {name}")))?;
            if !v.is_finite() {
                return Err(self.malformed(format!("non-finite value in section {name}")));
            }
            values.push(v);
        }
        Ok(values)
    }

    fn quad_data(&mut self, base: &str, n: usize) -> Result<QuadData, InstanceError> {
        let nn = n * n; // guarded by the caller's total-size check
        let mat = self.section(&format!("{base}.mat"), nn)?;
        let lam_max = self.section(&format!("{base}.lam_max"), 1)?[0];
        let vec = self.section(&format!("{base}.vec"), n)?;
        let constant = self.section(&format!("{base}.constant"), 1)?[0];
        Ok(QuadData {
            mat,
            lam_max,
            vec,
            constant,
        })
    }

    /// Verifies the checksum line against everything consumed so far, then
    /// requires the terminating `end` line and nothing after it.
    fn finish(&mut self) -> Result<(), InstanceError> {
        let payload_end = self.pos;
        let line = self.next_line("checksum line")?;
        let stored = match line.strip_prefix("checksum sha256 ") {
            Some(rest) if !rest.contains(' ') => rest,
            _ => return Err(self.malformed(format!("expected checksum line, found {line:?}"))),
        };
        let digest = Sha256::digest(self.text[..payload_end].as_bytes());
        let mut computed = String::with_capacity(64);
        for byte in digest {
            let _ = write!(computed, "{byte:02x}");
        }
        if stored != computed {
            return Err(InstanceError::ChecksumMismatch {
                stored: stored.to_string(),
                computed,
            });
        }
        self.expect_line("end")?;
        if self.pos < self.text.len() {
            self.line_no += 1;
            return Err(self.malformed("content after end"));
        }
        Ok(())
    }

    fn parse(mut self) -> Result<Instance, InstanceError> {
        let header = self.next_line("format header")?;
        if header != HEADER {
            return Err(InstanceError::Version {
                got: header.to_string(),
            });
        }
        let kind_line = self.next_line("kind line")?;
        let kind = match kind_line.strip_prefix("kind ") {
            Some(k) => k,
            None => return Err(self.malformed(format!("expected kind line, found {kind_line:?}"))),
        };
        match kind {
            "worked-1d" => {
                let seed: u64 = self.param_seed()?;
                self.finish()?;
                if seed != 0 {
                    return Err(InstanceError::Invalid {
                        reason: "worked-1d instances carry seed 0".to_string(),
                    });
                }
                Ok(Instance::Worked1d)
            }
            "quadratic-dc" => {
                let seed = self.param_seed()?;
                let n: usize = self.param("n")?;
                // 7 blocks of n² + 1 + n + 1 values; reject absurd sizes
                // before reading anything proportional to them.
                let per_block = n
                    .checked_mul(n)
                    .and_then(|nn| nn.checked_add(n))
                    .and_then(|t| t.checked_add(2));
                let total = per_block.and_then(|p| p.checked_mul(7));
                match total {
                    Some(t) if t <= MAX_TOTAL_VALUES => {}
                    _ => {
                        return Err(InstanceError::Invalid {
                            reason: "dimensions too large".to_string(),
                        })
                    }
                }
                let objective = self.quad_data("objective", n)?;
                let mut cons = Vec::with_capacity(2);
                for i in 0..2 {
                    let convex = self.quad_data(&format!("cons{i}.convex"), n)?;
                    let piece0 = self.quad_data(&format!("cons{i}.piece0"), n)?;
                    let piece1 = self.quad_data(&format!("cons{i}.piece1"), n)?;
                    cons.push(QuadConstraintData {
                        convex,
                        pieces: [piece0, piece1],
                    });
                }
                self.finish()?;
                if n < 2 {
                    return Err(InstanceError::Invalid {
                        reason: format!("quadratic instances need n >= 2, got {n}"),
                    });
                }
                let curvature_ok = std::iter::once(&objective)
                    .chain(cons.iter().flat_map(|c| {
                        std::iter::once(&c.convex).chain(c.pieces.iter())
                    }))
                    .all(|q| q.lam_max >= 0.0);
                if !curvature_ok {
                    return Err(InstanceError::Invalid {
                        reason: "negative curvature bound".to_string(),
                    });
                }
                let c1 = cons.pop().expect("two constraints");
                let c0 = cons.pop().expect("two constraints");
                Ok(Instance::Quadratic(QuadraticDCSpec {
                    n,
                    seed,
                    objective,
                    constraints: [c0, c1],
                }))
            }
            "sparse-recovery" => {
                let seed = self.param_seed()?;
                let m: usize = self.param("m")?;
                let n: usize = self.param("n")?;
                let k: usize = self.param("k")?;
                let s: f64 = self.param("s")?;
                if !s.is_finite() {
                    return Err(self.malformed("non-finite value for param s"));
                }
                let total = m
                    .checked_mul(n)
                    .and_then(|mn| mn.checked_add(m))
                    .and_then(|t| t.checked_add(n));
                match total {
                    Some(t) if t <= MAX_TOTAL_VALUES => {}
                    _ => {
                        return Err(InstanceError::Invalid {
                            reason: "dimensions too large".to_string(),
                        })
                    }
                }
                let a = self.section("a", m * n)?;
                let b = self.section("b", m)?;
                let x_star = self.section("x_star", n)?;
                self.finish()?;
                if k < 1 || k > n {
                    return Err(InstanceError::Invalid {
                        reason: format!("sparsity level k = {k} out of range for n = {n}"),
                    });
                }
                if s <= 0.0 {
                    return Err(InstanceError::Invalid {
                        reason: "knot s must be positive".to_string(),
                    });
                }
                let nnz = x_star.iter().filter(|v| **v != 0.0).count();
                if nnz != k || x_star.iter().any(|v| *v != 0.0 && v.abs() != 1.0) {
                    return Err(InstanceError::Invalid {
                        reason: "planted signal must have exactly k entries, each +1 or -1"
                            .to_string(),
                    });
                }
                Ok(Instance::SparseRecovery(SparseRecoverySpec {
                    m,
                    n,
                    k,
                    s,
                    seed,
                    a,
                    b,
                    x_star,
                }))
            }
            other => Err(InstanceError::UnknownKind {
                got: other.to_string(),
            }),
        }
    }

    fn param_seed(&mut self) -> Result<u64, InstanceError> {
        let line = self.next_line("seed line")?;
        let tok = match line.strip_prefix("seed ") {
            Some(t) if !t.contains(' ') => t,
            _ => return Err(self.malformed(format!("expected seed line, found {line:?}"))),
        };
        tok.parse()
            .map_err(|_| self.malformed(format!("bad seed {tok:?}")))
    }
}

#[cfg(test)]
mod tests {
    use super::super::{gen_quadratic_dc, gen_sparse_recovery};
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;
    use rand_distr::StandardNormal;

    fn sample_instances() -> Vec<Instance> {
        let (_, q) = gen_quadratic_dc(3, 21);
        let (_, s) = gen_sparse_recovery(6, 10, 2, 0.1, 22).unwrap();
        vec![
            Instance::Worked1d,
            Instance::Quadratic(q),
            Instance::SparseRecovery(s),
        ]
    }

    #[test]
    fn round_trip_is_byte_identical() {
        for inst in sample_instances() {
            let text = inst.serialize();
            let back = load_instance_from_str(&text).unwrap();
            assert_eq!(back, inst, "round-trip equality for {}", inst.kind());
            assert_eq!(back.serialize(), text, "byte identity for {}", inst.kind());
        }
    }

    #[test]
    fn save_and_load_through_a_file() {
        let dir = std::env::temp_dir();
        for inst in sample_instances() {
            let path = dir.join(format!(
                "dcopt-instance-test-{}-{}.txt",
                std::process::id(),
                inst.kind()
            ));
            save_instance(&inst, &path).unwrap();
            let back = load_instance(&path).unwrap();
            std::fs::remove_file(&path).unwrap();
            assert_eq!(back, inst);
        }
        assert!(matches!(
            load_instance(dir.join("dcopt-no-such-file.txt")),
            Err(InstanceError::Io(_))
        ));
    }

    #[test]
    fn loaded_program_matches_generator_pointwise() {
        let (prog, spec) = gen_quadratic_dc(4, 31);
        let text = Instance::Quadratic(spec).serialize();
        let loaded = load_instance_from_str(&text).unwrap().to_program();
        let mut rng = ChaCha20Rng::seed_from_u64(7);
        for _ in 0..20 {
            let x: Vec<f64> = (0..4).map(|_| rng.sample(StandardNormal)).collect();
            let (a, b) = (prog.objective_value(&x), loaded.objective_value(&x));
            assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()), "{a} vs {b}");
            for i in 0..2 {
                let (a, b) = (prog.constraint_value(i, &x), loaded.constraint_value(i, &x));
                assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()), "{a} vs {b}");
            }
        }

        let (prog, spec) = gen_sparse_recovery(6, 10, 2, 0.1, 33).unwrap();
        let text = Instance::SparseRecovery(spec).serialize();
        let loaded = load_instance_from_str(&text).unwrap().to_program();
        for _ in 0..20 {
            let x: Vec<f64> = (0..10).map(|_| rng.sample(StandardNormal)).collect();
            let (a, b) = (prog.objective_value(&x), loaded.objective_value(&x));
            assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()));
            let (a, b) = (prog.constraint_value(0, &x), loaded.constraint_value(0, &x));
            assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()));
        }
    }

    #[test]
    fn truncated_input_names_the_missing_piece() {
        let text = Instance::Quadratic(gen_quadratic_dc(2, 5).1).serialize();
        // Cut at a line boundary near the middle: the error must say which
        // element was expected next.
        let mid = text[..text.len() / 2].rfind('\n').unwrap() + 1;
        let cut = &text[..mid];
        match load_instance_from_str(cut) {
            Err(InstanceError::Truncated { expected }) => {
                assert!(expected.contains("section") || expected.contains("value"), "{expected}");
            }
            other => panic!("expected truncation error, got {other:?}"),
        }
        // Cutting right before the checksum names the checksum line.
        let head = text.find("checksum").unwrap();
        match load_instance_from_str(&text[..head]) {
            Err(InstanceError::Truncated { expected }) => {
                assert!(expected.contains("checksum"), "{expected}");
            }
            other => panic!("expected truncation error, got {other:?}"),
        }
    }

    #[test]
    fn corrupted_payload_fails_the_checksum() {
        let text = Instance::SparseRecovery(gen_sparse_recovery(4, 6, 2, 0.1, 9).unwrap().1)
            .serialize();
        // Flip one digit inside a value line (the first '3' after the params).
        let body_at = text.find("section a").unwrap();
        let digit_at = body_at + text[body_at..].find('3').unwrap();
        let mut bytes = text.into_bytes();
        bytes[digit_at] = b'4';
        let corrupted = String::from_utf8(bytes).unwrap();
        assert!(matches!(
            load_instance_from_str(&corrupted),
            Err(InstanceError::ChecksumMismatch { .. })
        ));
    }

    #[test]
    fn malformed_inputs_return_structured_errors() {
        assert!(matches!(
            load_instance_from_str("dcopt-instance v2\n"),
            Err(InstanceError::Version { .. })
        ));
        assert!(matches!(
            load_instance_from_str("dcopt-instance v1\nkind banana\n"),
            Err(InstanceError::UnknownKind { got }) if got == "banana"
        ));
        assert!(matches!(
            load_instance_from_str(""),
            Err(InstanceError::Truncated { .. })
        ));
        // A garbage float is reported with its line number.
        let good = Instance::Worked1d.serialize();
        let with_junk = good.replace("seed 0", "seed zero");
        match load_instance_from_str(&with_junk) {
            Err(InstanceError::Malformed { line_no, .. }) => assert_eq!(line_no, 3),
            other => panic!("expected malformed error, got {other:?}"),
        }
        // Content after the final line is rejected.
        let trailing = format!("{good}extra\n");
        assert!(matches!(
            load_instance_from_str(&trailing),
            Err(InstanceError::Malformed { .. })
        ));
        // Oversized dimension claims are rejected before any allocation.
        let huge = "dcopt-instance v1\nkind sparse-recovery\nseed 1\nparam m 99999999\nparam n 99999999\nparam k 1\nparam s 1.0000000000000000e-1\n";
        assert!(matches!(
            load_instance_from_str(huge),
            Err(InstanceError::Invalid { reason }) if reason.contains("dimensions")
        ));
    }

    #[test]
    fn semantically_inconsistent_data_is_rejected_after_checksum() {
        let (_, mut spec) = gen_sparse_recovery(4, 6, 2, 0.1, 9).unwrap();
        // Break the planted-signal invariant but keep the file well-formed:
        // serialization recomputes the checksum over the broken data.
        spec.x_star[0] = 0.5;
        let text = Instance::SparseRecovery(spec).serialize();
        assert!(matches!(
            load_instance_from_str(&text),
            Err(InstanceError::Invalid { reason }) if reason.contains("planted signal")
        ));
    }

    #[test]
    fn float_formatting_survives_extreme_values() {
        let (_, mut spec) = gen_sparse_recovery(4, 6, 2, 0.1, 9).unwrap();
        spec.b[0] = 1.0e-300;
        spec.b[1] = -2.2250738585072014e-308;
        spec.b[2] = 1.7976931348623157e308;
        spec.b[3] = -0.0;
        let inst = Instance::SparseRecovery(spec);
        let back = load_instance_from_str(&inst.serialize()).unwrap();
        match &back {
            Instance::SparseRecovery(s) => {
                assert_eq!(s.b[0].to_bits(), 1.0e-300f64.to_bits());
                assert_eq!(s.b[1].to_bits(), (-2.2250738585072014e-308f64).to_bits());
                assert_eq!(s.b[2].to_bits(), 1.7976931348623157e308f64.to_bits());
                assert_eq!(s.b[3].to_bits(), (-0.0f64).to_bits());
            }
            other => panic!("wrong kind {other:?}"),
        }
        assert_eq!(back.serialize(), inst.serialize());
    }

    #[test]
    fn worked_example_serialization_is_canonical() {
        let text = Instance::Worked1d.serialize();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "dcopt-instance v1");
        assert_eq!(lines[1], "kind worked-1d");
        assert_eq!(lines[2], "seed 0");
        assert!(lines[3].starts_with("checksum sha256 "));
        assert_eq!(lines[3].len(), "checksum sha256 ".len() + 64);
        assert_eq!(lines[4], "end");
        assert_eq!(lines.len(), 5);
        // The program it denotes is the hand-checkable 1-D example.
        let p = Instance::Worked1d.to_program();
        assert_eq!(p.dim, 1);
        assert!((p.objective_value(&[1.0]) - (-5.0)).abs() <= 1e-12);
        // A tampered seed is structurally fine but semantically rejected.
        let tampered = Instance::Worked1d
            .serialize()
            .replace("seed 0", "seed 7");
        // Fix up the checksum so the semantic check is what fires.
        let payload_end = tampered.find("checksum").unwrap();
        let digest = Sha256::digest(tampered[..payload_end].as_bytes());
        let mut hex = String::new();
        for byte in digest {
            let _ = write!(hex, "{byte:02x}");
        }
        let old_line: String = tampered[payload_end..].lines().next().unwrap().to_string();
        let fixed = tampered.replace(&old_line, &format!("checksum sha256 {hex}"));
        assert!(matches!(
            load_instance_from_str(&fixed),
            Err(InstanceError::Invalid { reason }) if reason.contains("seed 0")
        ));
    }
}
