//! Outer augmented Lagrangian loop: at each outer iteration the merit
//! function
//!
//! ```text
//!   F(x) + (1/2ρ_k) Σ_i ([λ_i^k + ρ_k c_i(x)]₊² − (λ_i^k)²)
//! ```
//!
//! is driven to the inexact stationarity condition, the multipliers update as
//! `λ^{k+1} = [λ^k + ρ_k c(x^k)]₊`, and the penalty weight follows
//! `ρ_{k+1} = max{σ·ρ_k, ‖λ^{k+1}‖^{1+α}}`.
//!
//! Per-selection auxiliary multiplier estimates are available on demand: for
//! a piece selection `(j₀, 𝕛)`, the selection-restricted merit (maxes
//! replaced by the selected pieces, no anchoring) is minimized by a
//! proximal-point loop whose every step is one certified anchored-majorant
//! solve re-anchored at the previous output. The limit `z` is judged against
//! the majorant anchored at the outer iterate `x^k`: the reported residual is
//! the exact distance from 0 to `∂Q̃(z)` (computed through the componentwise
//! subdifferential descriptors), and the estimate is
//! `λ_i^{k,j₀,𝕛} = [λ_i^k + ρ_k m̂_i(z)]₊` with the hinge interiors `m̂_i`
//! anchored at `x^k`.
//!
//! `pair_table_step` switches the outer step itself to the tabular variant:
//! every enumerated selection's restricted merit is minimized, and the next
//! iterate is the minimizer with the smallest merit value (lexicographically
//! first selection on ties). This reproduces the closed-form iteration of the
//! 1-D worked example exactly; the default remains the inner-loop step.

use thiserror::Error;

use crate::diagnostics::{feasibility_violation, relative_change};
use crate::linalg::{dist, norm, pos};
use crate::majorant::{al_value, MajorantInstance, MeritKind};
use crate::model::{ConvexSet, DCProgram, MultiIndex, SubdiffDescriptor};
use crate::penalty::{OuterError, SCASummary, SolveReport, StopReason};
use crate::sca::{sca_solve, SCAConfig, SCAError, Schedule};
use crate::subsolve::solve_certified;

#[derive(Clone, Debug)]
pub struct ALConfig {
    /// Activation margin ε for piece selection.
    pub eps: f64,
    pub rho0: f64,
    /// Geometric growth factor σ > 1.
    pub sigma: f64,
    /// Multiplier-norm exponent offset α > 0 in `‖λ‖^{1+α}`.
    pub alpha: f64,
    /// Initial multipliers λ⁰ ≥ 0 (zeros when absent).
    pub lambda0: Option<Vec<f64>>,
    /// Outer decrease thresholds `k → η_k` (default `10^(−k−3)`).
    pub eta_schedule: Schedule,
    pub outer_rel_tol: f64,
    pub max_outer: usize,
    pub rho_cap: f64,
    /// Inner-loop template; `eps` and `eta` are overridden per call.
    pub sca: SCAConfig,
    /// Auxiliary-solve stationarity targets are `γ_k = gamma_scale/ρ_k`.
    pub gamma_scale: f64,
    /// Record an auxiliary multiplier table at every outer iteration.
    pub aux_multipliers: bool,
    /// Take the tabular outer step instead of running the inner loop.
    pub pair_table_step: bool,
}

impl Default for ALConfig {
    fn default() -> Self {
        Self {
            eps: 0.01,
            rho0: 0.1,
            sigma: 2.0,
            alpha: 1.05,
            lambda0: None,
            eta_schedule: Schedule::Geometric {
                base: 1e-3,
                factor: 0.1,
                floor: 0.0,
            },
            outer_rel_tol: 1e-5,
            max_outer: 50,
            rho_cap: 1e12,
            sca: SCAConfig::default(),
            gamma_scale: 10.0,
            aux_multipliers: false,
            pair_table_step: false,
        }
    }
}

/// One row of an auxiliary multiplier table.
#[derive(Clone, Debug)]
pub struct AuxEntry {
    pub index: MultiIndex,
    /// Minimizer of the selection-restricted merit.
    pub x: Vec<f64>,
    /// Multiplier estimates `[λ_i + ρ·m̂_i(x)]₊` (hinges anchored at the
    /// outer iterate).
    pub lambda: Vec<f64>,
    /// Exact `dist(0, ∂Q̃(x))` for the majorant anchored at the outer
    /// iterate.
    pub residual: f64,
    /// Stationarity target the residual is judged against.
    pub gamma: f64,
    pub certified: bool,
    /// Merit value at `x`.
    pub merit: f64,
    /// Certified subsolves spent by the proximal-point loop.
    pub inner_solves: usize,
}

/// Auxiliary multiplier estimates for one outer iteration.
#[derive(Clone, Debug)]
pub struct AuxTable {
    pub entries: Vec<AuxEntry>,
}

impl AuxTable {
    /// Entry with the smallest merit, lexicographically first on ties
    /// (entries keep enumeration order).
    pub fn argmin_entry(&self) -> Option<&AuxEntry> {
        let mut best: Option<&AuxEntry> = None;
        for e in &self.entries {
            if best.map_or(true, |b| e.merit < b.merit) {
                best = Some(e);
            }
        }
        best
    }
}

#[derive(Clone, Debug)]
pub struct ALReport {
    pub base: SolveReport,
    /// `λ⁰, λ¹, …` — entry `k` is the multiplier used at outer iteration
    /// `k`, with the final update appended.
    pub lambda_history: Vec<Vec<f64>>,
    /// Per-iteration auxiliary tables when requested.
    pub aux_tables: Option<Vec<AuxTable>>,
}

impl ALReport {
    pub fn x_final(&self) -> Option<&[f64]> {
        self.base.x_final()
    }
}

/// An augmented Lagrangian solve that could not run to a declared stop.
#[derive(Debug, Error)]
#[error("outer solve failed after {} iterations: {error}", partial.base.outer_iterations())]
pub struct ALFailure {
    pub error: OuterError,
    pub partial: ALReport,
}

/// Componentwise multiplier update `[λ_i + ρ·c_i]₊`.
pub fn multiplier_update(lambda: &[f64], rho: f64, constraint_values: &[f64]) -> Vec<f64> {
    lambda
        .iter()
        .zip(constraint_values)
        .map(|(&l, &c)| pos(l + rho * c))
        .collect()
}

/// Penalty growth `max{σ·ρ, ‖λ‖^{1+α}}`.
pub fn al_rho_update(rho: f64, sigma: f64, lambda_next: &[f64], alpha: f64) -> f64 {
    (sigma * rho).max(norm(lambda_next).powf(1.0 + alpha))
}

const AUX_DELTA: f64 = 1e-9;
const AUX_SUBSOLVE_MAX_ITER: usize = 200_000;
const AUX_PROX_MAX_LOOPS: usize = 2_000;

/// Minimizes the selection-restricted merit by proximal-point iteration:
/// each step is one certified solve of the majorant re-anchored at the
/// previous output, until the anchor stops moving. Returns the limit, the
/// subsolves spent, and whether every step certified.
fn selection_argmin(
    prog: &DCProgram,
    rho: f64,
    lambda: &[f64],
    index: &MultiIndex,
    start: &[f64],
) -> Result<(Vec<f64>, usize, bool), SCAError> {
    let kind = MeritKind::Augmented {
        lambda: lambda.to_vec(),
    };
    let mut z = prog.set.project(start);
    let mut solves = 0usize;
    let mut all_certified = true;
    let mut restricted_prev = f64::INFINITY;
    for _ in 0..AUX_PROX_MAX_LOOPS {
        let maj = MajorantInstance::new(prog, rho, &z, index.clone(), &kind)?;
        // At its own anchor the majorant equals the selection-restricted
        // merit, giving an exact monotonicity check for the loop.
        let restricted = maj.value(&z);
        if restricted >= restricted_prev - 1e-15 * (1.0 + restricted_prev.abs()) {
            break;
        }
        restricted_prev = restricted;
        let out = solve_certified(&maj, &z, AUX_DELTA, AUX_SUBSOLVE_MAX_ITER)?;
        solves += 1;
        all_certified &= out.certified;
        let moved = dist(&out.x, &z);
        z = out.x;
        if moved <= 1e-12 * (1.0 + norm(&z)) {
            break;
        }
    }
    Ok((z, solves, all_certified))
}

/// Exact distance from 0 to `∂Q̃(z) + N_X(z)`, computed per coordinate from
/// the subdifferential descriptors of the nonsmooth terms. Falls back to the
/// norm of a subgradient selection (a valid upper bound) when a descriptor is
/// missing or not componentwise.
fn majorant_stationarity_residual(maj: &MajorantInstance, z: &[f64]) -> f64 {
    let n = maj.dim();
    let m = maj.hinge_values(z);
    let w = maj.hinge_weights(&m);
    let mut lo = vec![0.0; n];
    let mut hi = vec![0.0; n];
    for c in 0..n {
        let mut g = maj.base_lin[c] + maj.l0 * (z[c] - maj.anchor[c]);
        for (h, &wi) in maj.hinges.iter().zip(&w) {
            g += wi * (h.lin[c] + h.curv * (z[c] - maj.anchor[c]));
        }
        lo[c] = g;
        hi[c] = g;
    }
    let add_term = |zeta: &crate::model::NonsmoothConvexFn, weight: f64, lo: &mut [f64], hi: &mut [f64]| -> bool {
        if zeta.is_zero || weight == 0.0 {
            return true;
        }
        match &zeta.subdiff {
            Some(SubdiffDescriptor::Box { bounds }) => {
                let (blo, bhi) = bounds(z);
                for c in 0..lo.len() {
                    lo[c] += weight * blo[c];
                    hi[c] += weight * bhi[c];
                }
                true
            }
            _ => false,
        }
    };
    let mut exact = add_term(&maj.zeta0, 1.0, &mut lo, &mut hi);
    if exact {
        for (h, &wi) in maj.hinges.iter().zip(&w) {
            if !add_term(&h.zeta, wi, &mut lo, &mut hi) {
                exact = false;
                break;
            }
        }
    }
    if !exact {
        return norm(&maj.subgradient(z));
    }
    match &maj.set {
        ConvexSet::WholeSpace => {}
        ConvexSet::Box { lo: blo, hi: bhi } => {
            for c in 0..n {
                if (z[c] - blo[c]).abs() <= 1e-12 * (1.0 + blo[c].abs()) {
                    lo[c] = f64::NEG_INFINITY;
                }
                if (z[c] - bhi[c]).abs() <= 1e-12 * (1.0 + bhi[c].abs()) {
                    hi[c] = f64::INFINITY;
                }
            }
        }
        ConvexSet::Custom { .. } => return norm(&maj.subgradient(z)),
    }
    let mut sq = 0.0;
    for c in 0..n {
        let d = if lo[c] <= 0.0 && 0.0 <= hi[c] {
            0.0
        } else {
            lo[c].abs().min(hi[c].abs())
        };
        sq += d * d;
    }
    sq.sqrt()
}

fn aux_entry(
    prog: &DCProgram,
    rho: f64,
    lambda: &[f64],
    x_k: &[f64],
    index: &MultiIndex,
    z: Vec<f64>,
    gamma: f64,
    inner_solves: usize,
    inner_certified: bool,
) -> Result<AuxEntry, SCAError> {
    let kind = MeritKind::Augmented {
        lambda: lambda.to_vec(),
    };
    let maj_k = MajorantInstance::new(prog, rho, x_k, index.clone(), &kind)?;
    let m = maj_k.hinge_values(&z);
    let lambda_est = maj_k.hinge_weights(&m);
    let residual = majorant_stationarity_residual(&maj_k, &z);
    let merit = al_value(prog, rho, lambda, &z);
    Ok(AuxEntry {
        index: index.clone(),
        lambda: lambda_est,
        residual,
        gamma,
        certified: inner_certified && residual <= gamma,
        merit,
        inner_solves,
        x: z,
    })
}

/// Auxiliary multiplier estimates at the iterate `x_k` for the given piece
/// selections: each selection-restricted merit is minimized (starting from
/// `x_k`), and the estimate, exact stationarity residual, and certification
/// against `gamma` are reported per selection. A selection whose solves or
/// residual fail certification is reported with `certified: false` rather
/// than failing the call.
pub fn auxiliary_multipliers(
    prog: &DCProgram,
    rho: f64,
    lambda: &[f64],
    x_k: &[f64],
    pairs: &[MultiIndex],
    gamma: f64,
) -> Result<AuxTable, SCAError> {
    let mut entries = Vec::with_capacity(pairs.len());
    for index in pairs {
        let (z, solves, ok) = selection_argmin(prog, rho, lambda, index, x_k)?;
        entries.push(aux_entry(prog, rho, lambda, x_k, index, z, gamma, solves, ok)?);
    }
    Ok(AuxTable { entries })
}

fn validated(cfg: &ALConfig, prog: &DCProgram) -> Result<Vec<f64>, OuterError> {
    if !(cfg.rho0 > 0.0) {
        return Err(OuterError::Config(format!("rho0 must be > 0, got {}", cfg.rho0)));
    }
    if !(cfg.sigma > 1.0) {
        return Err(OuterError::Config(format!("sigma must be > 1, got {}", cfg.sigma)));
    }
    if !(cfg.alpha > 0.0) {
        return Err(OuterError::Config(format!("alpha must be > 0, got {}", cfg.alpha)));
    }
    if !(cfg.eps > 0.0) {
        return Err(OuterError::Config(format!("eps must be > 0, got {}", cfg.eps)));
    }
    let lambda = match &cfg.lambda0 {
        None => vec![0.0; prog.constraints.len()],
        Some(l) => {
            if l.len() != prog.constraints.len() {
                return Err(OuterError::Config(format!(
                    "lambda0 has {} entries for {} constraints",
                    l.len(),
                    prog.constraints.len()
                )));
            }
            if let Some(bad) = l.iter().find(|v| !(**v >= 0.0)) {
                return Err(OuterError::Config(format!(
                    "lambda0 entries must be >= 0, got {bad}"
                )));
            }
            l.clone()
        }
    };
    Ok(lambda)
}

/// Runs the outer augmented Lagrangian loop from `x0 ∈ X` (projected there
/// if not). Inner calls warm-start at the previous outer iterate; stopping
/// follows the relative-change rule, the iteration cap, or the ρ cap.
pub fn al_solve(
    prog: &DCProgram,
    cfg: &ALConfig,
    x0: &[f64],
) -> Result<ALReport, Box<ALFailure>> {
    let fail = |error: OuterError, partial: ALReport| -> Box<ALFailure> {
        Box::new(ALFailure { error, partial })
    };
    let empty = |lambda0: Vec<f64>| ALReport {
        base: SolveReport {
            x_history: Vec::new(),
            rho_history: Vec::new(),
            sca_summaries: Vec::new(),
            final_feasibility: f64::NAN,
            final_objective: f64::NAN,
            stop: StopReason::InnerFailure,
        },
        lambda_history: vec![lambda0],
        aux_tables: None,
    };
    let mut lambda = match validated(cfg, prog) {
        Ok(l) => l,
        Err(e) => return Err(fail(e, empty(Vec::new()))),
    };
    let mut report = empty(lambda.clone());
    report.aux_tables = cfg.aux_multipliers.then(Vec::new);
    let mut x = prog.set.project(x0);
    let mut rho = cfg.rho0;
    let finish = |mut report: ALReport, x: &[f64], stop: StopReason| -> ALReport {
        report.base.final_feasibility = feasibility_violation(prog, x);
        report.base.final_objective = prog.objective_value(x);
        report.base.stop = stop;
        report
    };
    for k in 0..cfg.max_outer {
        let eta = cfg.eta_schedule.at(k);
        let gamma = cfg.gamma_scale / rho;
        let x_new;
        if cfg.pair_table_step {
            let enumeration = prog.enumerate_pairs(&x, cfg.eps, cfg.sca.pair_cap);
            if enumeration.truncated {
                let err = SCAError::PairCapOverflow {
                    total: enumeration.total,
                    cap: cfg.sca.pair_cap,
                };
                report.base.stop = StopReason::InnerFailure;
                return Err(fail(err.into(), report));
            }
            // Minimize every selection-restricted merit, then move to the
            // best minimizer (lexicographically first on merit ties).
            let mut solved = Vec::with_capacity(enumeration.indices.len());
            for index in &enumeration.indices {
                match selection_argmin(prog, rho, &lambda, index, &x) {
                    Ok(got) => solved.push(got),
                    Err(e) => {
                        report.base.stop = StopReason::InnerFailure;
                        return Err(fail(e.into(), report));
                    }
                }
            }
            let mut best: Option<(usize, f64)> = None;
            for (i, (z, _, _)) in solved.iter().enumerate() {
                let merit = al_value(prog, rho, &lambda, z);
                if best.map_or(true, |(_, bm)| merit < bm) {
                    best = Some((i, merit));
                }
            }
            let Some((best_i, best_merit)) = best else {
                report.base.stop = StopReason::InnerFailure;
                return Err(fail(
                    OuterError::Config("no piece selections to choose from".into()),
                    report,
                ));
            };
            x_new = solved[best_i].0.clone();
            let mut total_solves = 0usize;
            if let Some(tables) = report.aux_tables.as_mut() {
                let mut entries = Vec::with_capacity(solved.len());
                for (index, (z, solves, ok)) in enumeration.indices.iter().zip(solved) {
                    total_solves += solves;
                    match aux_entry(prog, rho, &lambda, &x_new, index, z, gamma, solves, ok) {
                        Ok(e) => entries.push(e),
                        Err(e) => {
                            report.base.stop = StopReason::InnerFailure;
                            return Err(fail(e.into(), report));
                        }
                    }
                }
                tables.push(AuxTable { entries });
            } else {
                total_solves = solved.iter().map(|(_, s, _)| s).sum();
            }
            report.base.sca_summaries.push(SCASummary {
                eta,
                accepts: 1,
                subsolves: total_solves,
                blocked: 0,
                terminated: true,
                merit_final: best_merit,
            });
        } else {
            let mut sca_cfg = cfg.sca.clone();
            sca_cfg.eps = cfg.eps;
            sca_cfg.eta = eta;
            let kind = MeritKind::Augmented {
                lambda: lambda.clone(),
            };
            let res = match sca_solve(prog, rho, &kind, &x, &sca_cfg) {
                Ok(res) => res,
                Err(e) => {
                    report.base.stop = StopReason::InnerFailure;
                    return Err(fail(e.into(), report));
                }
            };
            report.base.sca_summaries.push(SCASummary::new(eta, &res));
            x_new = res.x_final;
            if report.aux_tables.is_some() {
                let enumeration = prog.enumerate_pairs(&x_new, cfg.eps, cfg.sca.pair_cap);
                match auxiliary_multipliers(prog, rho, &lambda, &x_new, &enumeration.indices, gamma)
                {
                    Ok(table) => report.aux_tables.as_mut().unwrap().push(table),
                    Err(e) => {
                        report.base.stop = StopReason::InnerFailure;
                        return Err(fail(e.into(), report));
                    }
                }
            }
        }
        report.base.rho_history.push(rho);
        report.base.x_history.push(x_new.clone());
        let lambda_next = multiplier_update(&lambda, rho, &prog.constraint_values(&x_new));
        debug_assert!(lambda_next.iter().all(|v| *v >= 0.0));
        report.lambda_history.push(lambda_next.clone());
        if k > 0 {
            let (rel, _) = relative_change(&x_new, &x);
            if rel <= cfg.outer_rel_tol {
                return Ok(finish(report, &x_new, StopReason::RelativeChange));
            }
        }
        x = x_new;
        lambda = lambda_next;
        let next_rho = al_rho_update(rho, cfg.sigma, &lambda, cfg.alpha);
        if !(next_rho <= cfg.rho_cap) {
            return Ok(finish(report, &x, StopReason::RhoCap));
        }
        rho = next_rho;
    }
    let last = x.clone();
    Ok(finish(report, &last, StopReason::MaxOuter))
}
