//! Outer penalty loop: at each outer iteration `k` the merit function
//! `F(x) + ρ_k Σ_i [c_i(x)]₊^p` is driven to the inexact stationarity
//! condition by the inner loop, the penalty weight grows geometrically
//! (`ρ_{k+1} = σ·ρ_k`), and the decrease threshold `η_k` shrinks along a
//! schedule. The starting point need not be feasible.

use thiserror::Error;

use crate::diagnostics::{feasibility_violation, relative_change};
use crate::majorant::MeritKind;
use crate::model::DCProgram;
use crate::sca::{sca_solve, SCAConfig, SCAError, SCAResult, Schedule};

#[derive(Clone, Debug)]
pub struct PenaltyConfig {
    /// Activation margin ε for the inner loop's piece selection.
    pub eps: f64,
    pub rho0: f64,
    /// Geometric growth factor σ > 1.
    pub sigma: f64,
    /// Hinge power p ∈ {1, 2}.
    pub p: u8,
    /// Outer decrease thresholds `k → η_k` (default `10^(−k−3)`).
    pub eta_schedule: Schedule,
    /// Stop once `‖x^{k+1} − x^k‖/‖x^{k+1}‖` falls to this.
    pub outer_rel_tol: f64,
    pub max_outer: usize,
    /// Stop before ρ would exceed this (float-overflow guard).
    pub rho_cap: f64,
    /// Inner-loop template; `eps` and `eta` are overridden per call.
    pub sca: SCAConfig,
}

impl Default for PenaltyConfig {
    fn default() -> Self {
        Self {
            eps: 0.01,
            rho0: 0.1,
            sigma: 2.0,
            p: 2,
            eta_schedule: Schedule::Geometric {
                base: 1e-3,
                factor: 0.1,
                floor: 0.0,
            },
            outer_rel_tol: 1e-5,
            max_outer: 50,
            rho_cap: 1e12,
            sca: SCAConfig::default(),
        }
    }
}

/// Why an outer loop stopped.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopReason {
    /// Relative iterate change fell to the tolerance.
    RelativeChange,
    MaxOuter,
    /// The next penalty weight would exceed the cap.
    RhoCap,
    /// The inner loop failed; the report is partial.
    InnerFailure,
}

/// Compact record of one inner-loop call.
#[derive(Clone, Debug)]
pub struct SCASummary {
    pub eta: f64,
    pub accepts: usize,
    pub subsolves: usize,
    /// Size of the blocking cover at exit.
    pub blocked: usize,
    pub terminated: bool,
    pub merit_final: f64,
}

impl SCASummary {
    pub fn new(eta: f64, res: &SCAResult) -> Self {
        Self {
            eta,
            accepts: res.outer_iterations,
            subsolves: res.total_subsolves,
            blocked: res.certified_pairs.len(),
            terminated: res.terminated,
            merit_final: res.merit_final,
        }
    }
}

/// History of one outer solve. Entry `k` of each history column belongs to
/// outer iteration `k`.
#[derive(Clone, Debug)]
pub struct SolveReport {
    pub x_history: Vec<Vec<f64>>,
    pub rho_history: Vec<f64>,
    pub sca_summaries: Vec<SCASummary>,
    /// `max_i [c_i]_+` at the final iterate.
    pub final_feasibility: f64,
    /// Objective value (not the merit) at the final iterate.
    pub final_objective: f64,
    pub stop: StopReason,
}

impl SolveReport {
    fn empty() -> Self {
        Self {
            x_history: Vec::new(),
            rho_history: Vec::new(),
            sca_summaries: Vec::new(),
            final_feasibility: f64::NAN,
            final_objective: f64::NAN,
            stop: StopReason::InnerFailure,
        }
    }

    pub fn x_final(&self) -> Option<&[f64]> {
        self.x_history.last().map(|v| v.as_slice())
    }

    pub fn outer_iterations(&self) -> usize {
        self.x_history.len()
    }

    fn finish(mut self, prog: &DCProgram, stop: StopReason) -> Self {
        if let Some(x) = self.x_history.last() {
            self.final_feasibility = feasibility_violation(prog, x);
            self.final_objective = prog.objective_value(x);
        }
        self.stop = stop;
        self
    }
}

#[derive(Debug, Error)]
pub enum OuterError {
    #[error("configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Inner(#[from] SCAError),
}

/// An outer solve that could not run to a declared stop; carries whatever
/// history was accumulated before the failure.
#[derive(Debug, Error)]
#[error("outer solve failed after {} iterations: {error}", partial.outer_iterations())]
pub struct SolveFailure {
    pub error: OuterError,
    pub partial: SolveReport,
}

/// Geometric penalty growth `ρ_{k+1} = σ·ρ_k`, kept as a bare product so the
/// reported sequence is exactly `ρ_0·σ^k`.
pub fn rho_update(rho: f64, sigma: f64) -> f64 {
    sigma * rho
}

fn validated(cfg: &PenaltyConfig) -> Result<(), OuterError> {
    if !(cfg.rho0 > 0.0) {
        return Err(OuterError::Config(format!("rho0 must be > 0, got {}", cfg.rho0)));
    }
    if !(cfg.sigma > 1.0) {
        return Err(OuterError::Config(format!("sigma must be > 1, got {}", cfg.sigma)));
    }
    if cfg.p != 1 && cfg.p != 2 {
        return Err(OuterError::Config(format!("p must be 1 or 2, got {}", cfg.p)));
    }
    if !(cfg.eps > 0.0) {
        return Err(OuterError::Config(format!("eps must be > 0, got {}", cfg.eps)));
    }
    Ok(())
}

/// Runs the outer penalty loop from `x0 ∈ X` (projected there if not).
/// Inner calls warm-start at the previous outer iterate, so a repeated run
/// with the same inputs replays identically.
pub fn penalty_solve(
    prog: &DCProgram,
    cfg: &PenaltyConfig,
    x0: &[f64],
) -> Result<SolveReport, Box<SolveFailure>> {
    if let Err(error) = validated(cfg) {
        return Err(Box::new(SolveFailure {
            error,
            partial: SolveReport::empty().finish(prog, StopReason::InnerFailure),
        }));
    }
    let mut report = SolveReport::empty();
    let mut x = prog.set.project(x0);
    let mut rho = cfg.rho0;
    for k in 0..cfg.max_outer {
        let eta = cfg.eta_schedule.at(k);
        let mut sca_cfg = cfg.sca.clone();
        sca_cfg.eps = cfg.eps;
        sca_cfg.eta = eta;
        let kind = MeritKind::Penalty { p: cfg.p };
        let res = match sca_solve(prog, rho, &kind, &x, &sca_cfg) {
            Ok(res) => res,
            Err(err) => {
                return Err(Box::new(SolveFailure {
                    error: err.into(),
                    partial: report.finish(prog, StopReason::InnerFailure),
                }));
            }
        };
        report.sca_summaries.push(SCASummary::new(eta, &res));
        report.rho_history.push(rho);
        report.x_history.push(res.x_final.clone());
        let moved = res.x_final;
        if k > 0 {
            let (rel, _) = relative_change(&moved, &x);
            if rel <= cfg.outer_rel_tol {
                return Ok(report.finish(prog, StopReason::RelativeChange));
            }
        }
        x = moved;
        let next_rho = rho_update(rho, cfg.sigma);
        if !(next_rho <= cfg.rho_cap) {
            return Ok(report.finish(prog, StopReason::RhoCap));
        }
        rho = next_rho;
    }
    Ok(report.finish(prog, StopReason::MaxOuter))
}
