//! Certified minimization of anchored majorants.
//!
//! Every inner step of the outer loops needs a point `x̂` with a proof that
//! `Q(x̂) − min Q ≤ δ²/(2L₀)`, where `Q` is a strongly convex
//! [`MajorantInstance`] and `L₀` its convexity modulus. Three backends produce
//! such proofs:
//!
//! * **dual-hinge** — exploits the isotropic quadratic structure: for a fixed
//!   weight vector `u` on the hinge terms, the primal minimizer is a single
//!   prox (or projection) of a gradient point, so the exact concave dual
//!   `g(u) = min_x L(x, u)` can be maximized by projected gradient ascent
//!   with backtracking. The certificate is the measured duality gap
//!   `Q(x̂) − g(û)`, sound by weak duality. Applies when at most one
//!   nonsmooth term is present (with a prox oracle, over the whole space) or
//!   none (over any projectable set).
//! * **prox-gradient** — when the hinge terms are smooth (squared or
//!   multiplier-shifted hinges, no constraint nonsmooth parts), runs
//!   backtracking proximal gradient and certifies via the exact composite
//!   residual `v = M(x−y) + ∇f(y) − ∇f(x) ∈ ∂Q(y)`, giving
//!   `dist(0, ∂Q(y)) ≤ ‖v‖`.
//! * **subgradient** — universal fallback: projected subgradient with steps
//!   `2/(L₀(t+1))` and weighted averaging; the standard strongly convex bound
//!   `2G²/(L₀(T+1))` certifies the averaged point, with `G` the largest
//!   subgradient norm observed along the trajectory.
//!
//! [`solve_certified`] picks the first applicable backend in that order;
//! [`solve_with`] forces one. Both never return a point worse than the start:
//! the incumbent is initialized at `x0` and a certificate for the averaged or
//! dual-optimal point transfers to any point of lower majorant value.
//!
//! Measured-gap certificates carry a floating-point allowance: certification
//! accepts a gap within `32·ε·(1 + |Q| + |g|)` of the target, since the
//! subtraction of two merit-scale values cannot resolve differences below
//! that. The reported residual is clamped to `δ` in that case.

use crate::linalg;
use crate::majorant::MajorantInstance;
use crate::model::ConvexSet;
use thiserror::Error;

/// Which backend produced a certificate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SubsolveMethod {
    DualHinge,
    ProxGradient,
    Subgradient,
}

impl SubsolveMethod {
    /// Stable lowercase tag for reports.
    pub fn tag(&self) -> &'static str {
        match self {
            SubsolveMethod::DualHinge => "dual-hinge",
            SubsolveMethod::ProxGradient => "prox-gradient",
            SubsolveMethod::Subgradient => "subgradient",
        }
    }
}

/// Proof object accompanying a subproblem solution: the solution is within
/// `gap_bound = delta²/(2L₀)` of the majorant minimum.
#[derive(Clone, Debug)]
pub struct SubsolveCertificate {
    /// Requested residual level.
    pub delta: f64,
    /// `delta² / (2 L₀)`, computed exactly from `delta` and the modulus.
    pub gap_bound: f64,
    pub method: SubsolveMethod,
    /// Achieved residual: duality-gap equivalent `√(2L₀·gap)`, composite
    /// stationarity norm, or averaging bound `2G/√(T+1)` depending on the
    /// backend. At most `delta` when the solve certified.
    pub residual: f64,
    /// Inner evaluations spent (prox/projection calls or subgradient steps).
    pub iterations: usize,
}

/// Result of a certified solve. `certified` is false only when the iteration
/// budget ran out first; the point returned is still the best one found and
/// never worse than the start point.
#[derive(Clone, Debug)]
pub struct SubsolveOutcome {
    pub x: Vec<f64>,
    pub certificate: SubsolveCertificate,
    pub certified: bool,
}

#[derive(Debug, Error)]
pub enum SubsolveError {
    #[error("delta must be positive and finite, got {0}")]
    BadDelta(f64),
    #[error("start point has dimension {got}, majorant has dimension {expected}")]
    DimensionMismatch { got: usize, expected: usize },
    #[error("majorant convexity modulus must be positive, got {0}")]
    NotStronglyConvex(f64),
    #[error("{} backend does not apply: {reason}", method.tag())]
    MethodInapplicable {
        method: SubsolveMethod,
        reason: String,
    },
}

/// Which single nonsmooth term the dual-hinge inner prox handles.
#[derive(Clone, Copy, Debug)]
enum ProxTarget {
    /// No nonsmooth term: the inner minimizer is a projection onto the set.
    Projection,
    /// The objective nonsmooth term, coefficient 1.
    Zeta0,
    /// The nonsmooth term of hinge `i`, coefficient `u_i`.
    Hinge(usize),
}

/// Hinge combiner shape, fixed per majorant.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Combiner {
    PlusOne,
    PlusSquare,
    Shifted,
}

fn combiner_of(m: &MajorantInstance) -> Combiner {
    if m.is_augmented() {
        Combiner::Shifted
    } else if m.p == 1 {
        Combiner::PlusOne
    } else {
        Combiner::PlusSquare
    }
}

/// Conjugate offset `h*(u)` of the combiner, so that the combined hinge term
/// equals `max_u Σ u_i m_i − h*(u)` over the weight domain.
fn conjugate_offset(m: &MajorantInstance, comb: Combiner, u: &[f64]) -> f64 {
    match comb {
        Combiner::PlusOne => 0.0,
        Combiner::PlusSquare => u.iter().map(|v| v * v).sum::<f64>() / (4.0 * m.rho),
        Combiner::Shifted => {
            let lam = m.lambda.as_ref().expect("shifted combiner carries multipliers");
            u.iter()
                .zip(lam)
                .map(|(v, l)| (v - l) * (v - l))
                .sum::<f64>()
                / (2.0 * m.rho)
        }
    }
}

fn conjugate_offset_grad(m: &MajorantInstance, comb: Combiner, i: usize, ui: f64) -> f64 {
    match comb {
        Combiner::PlusOne => 0.0,
        Combiner::PlusSquare => ui / (2.0 * m.rho),
        Combiner::Shifted => (ui - m.lambda.as_ref().expect("multipliers")[i]) / m.rho,
    }
}

/// Decides whether the dual-hinge backend applies and which prox it uses.
fn dual_plan(m: &MajorantInstance) -> Result<ProxTarget, String> {
    let mut nontrivial = Vec::new();
    if !m.zeta0.is_zero {
        nontrivial.push(ProxTarget::Zeta0);
    }
    for (i, h) in m.hinges.iter().enumerate() {
        if !h.zeta.is_zero {
            nontrivial.push(ProxTarget::Hinge(i));
        }
    }
    match nontrivial.len() {
        0 => Ok(ProxTarget::Projection),
        1 => {
            if !matches!(m.set, ConvexSet::WholeSpace) {
                return Err(
                    "a nonsmooth term and a constrained set cannot share one prox".to_string()
                );
            }
            let target = nontrivial[0];
            let has_prox = match target {
                ProxTarget::Zeta0 => m.zeta0.prox.is_some(),
                ProxTarget::Hinge(i) => m.hinges[i].zeta.prox.is_some(),
                ProxTarget::Projection => unreachable!(),
            };
            if has_prox {
                Ok(target)
            } else {
                Err("the nonsmooth term has no prox oracle".to_string())
            }
        }
        _ => Err("more than one nonsmooth term".to_string()),
    }
}

/// Decides whether the prox-gradient backend applies.
fn prox_gradient_plan(m: &MajorantInstance) -> Result<(), String> {
    if !m.is_augmented() && m.p == 1 && !m.hinges.is_empty() {
        return Err("p = 1 combined hinges are nonsmooth in the hinge interior".to_string());
    }
    if m.hinges.iter().any(|h| !h.zeta.is_zero) {
        return Err("constraint nonsmooth terms do not fit the smooth-plus-prox split".to_string());
    }
    if !m.zeta0.is_zero {
        if m.zeta0.prox.is_none() {
            return Err("objective nonsmooth term has no prox oracle".to_string());
        }
        if !matches!(m.set, ConvexSet::WholeSpace) {
            return Err(
                "objective nonsmooth term over a constrained set needs a joint prox".to_string()
            );
        }
    }
    Ok(())
}

/// Backend [`solve_certified`] would pick for this majorant.
pub fn select_method(m: &MajorantInstance) -> SubsolveMethod {
    if dual_plan(m).is_ok() {
        SubsolveMethod::DualHinge
    } else if prox_gradient_plan(m).is_ok() {
        SubsolveMethod::ProxGradient
    } else {
        SubsolveMethod::Subgradient
    }
}

fn validate(m: &MajorantInstance, x0: &[f64], delta: f64) -> Result<(), SubsolveError> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(SubsolveError::BadDelta(delta));
    }
    if x0.len() != m.dim() {
        return Err(SubsolveError::DimensionMismatch {
            got: x0.len(),
            expected: m.dim(),
        });
    }
    if !(m.l0 > 0.0) {
        return Err(SubsolveError::NotStronglyConvex(m.l0));
    }
    Ok(())
}

/// Minimizes the majorant to a certified `delta²/(2L₀)` suboptimality,
/// choosing the first applicable backend (dual-hinge, then prox-gradient,
/// then subgradient). Deterministic; safe to call concurrently on shared
/// majorants.
pub fn solve_certified(
    m: &MajorantInstance,
    x0: &[f64],
    delta: f64,
    max_iter: usize,
) -> Result<SubsolveOutcome, SubsolveError> {
    validate(m, x0, delta)?;
    Ok(match select_method(m) {
        SubsolveMethod::DualHinge => {
            let target = dual_plan(m).expect("selected backend applies");
            dual_hinge(m, x0, delta, max_iter, target)
        }
        SubsolveMethod::ProxGradient => prox_gradient(m, x0, delta, max_iter),
        SubsolveMethod::Subgradient => subgradient(m, x0, delta, max_iter),
    })
}

/// Like [`solve_certified`] but forces a backend; errors when it does not
/// apply to this majorant's structure.
pub fn solve_with(
    m: &MajorantInstance,
    x0: &[f64],
    delta: f64,
    max_iter: usize,
    method: SubsolveMethod,
) -> Result<SubsolveOutcome, SubsolveError> {
    validate(m, x0, delta)?;
    match method {
        SubsolveMethod::DualHinge => {
            let target = dual_plan(m).map_err(|reason| SubsolveError::MethodInapplicable {
                method,
                reason,
            })?;
            Ok(dual_hinge(m, x0, delta, max_iter, target))
        }
        SubsolveMethod::ProxGradient => {
            prox_gradient_plan(m).map_err(|reason| SubsolveError::MethodInapplicable {
                method,
                reason,
            })?;
            Ok(prox_gradient(m, x0, delta, max_iter))
        }
        SubsolveMethod::Subgradient => Ok(subgradient(m, x0, delta, max_iter)),
    }
}

/// One dual evaluation: primal minimizer for the weights `u`, the dual value
/// `g(u)`, the primal majorant value at that minimizer, and the hinge
/// interiors there (whose vector is the dual gradient before the conjugate
/// correction).
struct DualPoint {
    x: Vec<f64>,
    dual: f64,
    primal: f64,
    hinge_vals: Vec<f64>,
}

fn dual_eval(m: &MajorantInstance, comb: Combiner, target: ProxTarget, u: &[f64]) -> DualPoint {
    let mut curvature = m.l0;
    let mut lin = m.base_lin.clone();
    for (ui, h) in u.iter().zip(&m.hinges) {
        if *ui != 0.0 {
            curvature += ui * h.curv;
            linalg::axpy(&mut lin, *ui, &h.lin);
        }
    }
    let mut y = m.anchor.clone();
    linalg::axpy(&mut y, -1.0 / curvature, &lin);
    let x = match target {
        ProxTarget::Projection => m.set.project(&y),
        ProxTarget::Zeta0 => m.zeta0.prox_point(&y, 1.0 / curvature),
        ProxTarget::Hinge(i) => {
            if u[i] > 0.0 {
                m.hinges[i].zeta.prox_point(&y, u[i] / curvature)
            } else {
                y
            }
        }
    };
    let dx = linalg::sub(&x, &m.anchor);
    let sq = linalg::dot(&dx, &dx);
    let hinge_vals: Vec<f64> = m.hinges.iter().map(|h| h.value(&dx, sq, &x)).collect();
    let mut base = m.base_const + linalg::dot(&m.base_lin, &dx) + 0.5 * m.l0 * sq;
    if !m.zeta0.is_zero {
        base += m.zeta0.value(&x);
    }
    let weighted: f64 = u.iter().zip(&hinge_vals).map(|(ui, mv)| ui * mv).sum();
    let dual = base + weighted - conjugate_offset(m, comb, u);
    let primal = base + m.combine(&hinge_vals);
    DualPoint {
        x,
        dual,
        primal,
        hinge_vals,
    }
}

/// Floating-point allowance for a measured gap between values of this scale.
fn gap_guard(primal: f64, dual: f64) -> f64 {
    32.0 * f64::EPSILON * (1.0 + primal.abs() + dual.abs())
}

fn dual_hinge(
    m: &MajorantInstance,
    x0: &[f64],
    delta: f64,
    max_iter: usize,
    target: ProxTarget,
) -> SubsolveOutcome {
    let comb = combiner_of(m);
    let gap_target = delta * delta / (2.0 * m.l0);
    let u_hi = if comb == Combiner::PlusOne {
        m.rho
    } else {
        f64::INFINITY
    };

    // Incumbent starts at x0 so the outcome never regresses past the start.
    let mut best_primal = m.value(x0);
    let mut best_x = x0.to_vec();

    // Warm start at the exact combiner weights of the start point.
    let mut u = m.hinge_weights(&m.hinge_values(x0));
    let mut here = dual_eval(m, comb, target, &u);
    let mut evals = 1usize;
    let mut best_dual = here.dual;
    if here.primal < best_primal {
        best_primal = here.primal;
        best_x = here.x.clone();
    }

    // Initial ascent step from a curvature estimate of the dual; backtracking
    // corrects it either way.
    let mut curv_est = 1e-12;
    for h in &m.hinges {
        let ln = linalg::norm(&h.lin);
        curv_est += ln * ln / m.l0;
    }
    curv_est += match comb {
        Combiner::PlusOne => 0.0,
        Combiner::PlusSquare => m.hinges.len() as f64 / (2.0 * m.rho),
        Combiner::Shifted => m.hinges.len() as f64 / m.rho,
    };
    let mut step = (1.0 / curv_est).clamp(1e-14, 1e14);

    let mut certified = best_primal - best_dual <= gap_target + gap_guard(best_primal, best_dual);
    'outer: while !certified && evals < max_iter && !m.hinges.is_empty() {
        let grad: Vec<f64> = here
            .hinge_vals
            .iter()
            .enumerate()
            .map(|(i, mv)| mv - conjugate_offset_grad(m, comb, i, u[i]))
            .collect();
        // One wide re-sweep per ascent step: before trusting "the projected
        // gradient cannot move" or a collapsed step, retry from a huge step so
        // a spuriously backtracked step cannot mask remaining ascent.
        let mut swept = false;
        loop {
            let trial: Vec<f64> = u
                .iter()
                .zip(&grad)
                .map(|(ui, gi)| (ui + step * gi).clamp(0.0, u_hi))
                .collect();
            if trial == u {
                if !swept && step < 1e12 {
                    swept = true;
                    step = 1e12;
                    continue;
                }
                // Projected gradient cannot move: dual optimum reached.
                break 'outer;
            }
            let cand = dual_eval(m, comb, target, &trial);
            evals += 1;
            let along: f64 = grad
                .iter()
                .zip(trial.iter().zip(&u))
                .map(|(gi, (ti, ui))| gi * (ti - ui))
                .sum();
            let move_sq: f64 = trial
                .iter()
                .zip(&u)
                .map(|(ti, ui)| (ti - ui) * (ti - ui))
                .sum();
            // Rounding allowance: near the optimum the predicted and measured
            // increases both sit at noise level; without it the test fails
            // spuriously and the step collapses long before the gap closes.
            let allow = 16.0 * f64::EPSILON * (1.0 + here.dual.abs() + cand.dual.abs());
            let sufficient = cand.dual >= here.dual + along - move_sq / (2.0 * step) - allow;
            if sufficient {
                u = trial;
                here = cand;
                if here.dual > best_dual {
                    best_dual = here.dual;
                }
                if here.primal < best_primal {
                    best_primal = here.primal;
                    best_x = here.x.clone();
                }
                step = (step * 1.25).min(1e14);
                break;
            }
            step *= 0.25;
            if evals >= max_iter {
                break 'outer;
            }
            if step < 1e-16 {
                if !swept {
                    swept = true;
                    step = 1e12;
                    continue;
                }
                break 'outer;
            }
        }
        certified = best_primal - best_dual <= gap_target + gap_guard(best_primal, best_dual);
    }
    certified = best_primal - best_dual <= gap_target + gap_guard(best_primal, best_dual);

    let gap = (best_primal - best_dual).max(0.0);
    let mut residual = (2.0 * m.l0 * gap).sqrt();
    if certified {
        residual = residual.min(delta);
    }
    SubsolveOutcome {
        x: best_x,
        certificate: SubsolveCertificate {
            delta,
            gap_bound: delta * delta / (2.0 * m.l0),
            method: SubsolveMethod::DualHinge,
            residual,
            iterations: evals,
        },
        certified,
    }
}

/// Smooth part of the majorant (everything except `zeta0` and the set):
/// value and gradient. Hinge combiners here are smooth by applicability.
fn smooth_eval(m: &MajorantInstance, x: &[f64]) -> (f64, Vec<f64>) {
    let dx = linalg::sub(x, &m.anchor);
    let sq = linalg::dot(&dx, &dx);
    let hinge_vals: Vec<f64> = m.hinges.iter().map(|h| h.value(&dx, sq, x)).collect();
    let value = m.base_const + linalg::dot(&m.base_lin, &dx) + 0.5 * m.l0 * sq
        + m.combine(&hinge_vals);
    let weights = m.hinge_weights(&hinge_vals);
    let mut grad = m.base_lin.clone();
    linalg::axpy(&mut grad, m.l0, &dx);
    for (h, w) in m.hinges.iter().zip(&weights) {
        if *w != 0.0 {
            linalg::axpy(&mut grad, *w, &h.lin);
            linalg::axpy(&mut grad, w * h.curv, &dx);
        }
    }
    (value, grad)
}

fn prox_gradient(
    m: &MajorantInstance,
    x0: &[f64],
    delta: f64,
    max_iter: usize,
) -> SubsolveOutcome {
    let mut x = m.set.project(x0);
    let mut coef = m.l0;
    let mut residual = f64::INFINITY;
    let mut certified = false;
    let mut iterations = 0usize;
    while iterations < max_iter {
        iterations += 1;
        let (fx, gx) = smooth_eval(m, &x);
        let y = loop {
            let mut y: Vec<f64> = x
                .iter()
                .zip(&gx)
                .map(|(xi, gi)| xi - gi / coef)
                .collect();
            y = if !m.zeta0.is_zero {
                m.zeta0.prox_point(&y, 1.0 / coef)
            } else {
                m.set.project(&y)
            };
            let (fy, _) = smooth_eval(m, &y);
            let along: f64 = gx.iter().zip(y.iter().zip(&x)).map(|(g, (yi, xi))| g * (yi - xi)).sum();
            let dsq = linalg::dist(&y, &x).powi(2);
            if fy <= fx + along + 0.5 * coef * dsq + 1e-12 * (1.0 + fx.abs()) {
                break y;
            }
            coef *= 2.0;
            if coef > 1e30 {
                break y;
            }
        };
        let (_, gy) = smooth_eval(m, &y);
        // v = M(x−y) + ∇f(y) − ∇f(x) is an exact element of ∂Q(y).
        let v: Vec<f64> = x
            .iter()
            .zip(&y)
            .zip(gy.iter().zip(&gx))
            .map(|((xi, yi), (gyi, gxi))| coef * (xi - yi) + gyi - gxi)
            .collect();
        residual = linalg::norm(&v);
        x = y;
        if residual <= delta {
            certified = true;
            break;
        }
        coef = (coef * 0.97).max(m.l0);
    }
    SubsolveOutcome {
        x,
        certificate: SubsolveCertificate {
            delta,
            gap_bound: delta * delta / (2.0 * m.l0),
            method: SubsolveMethod::ProxGradient,
            residual,
            iterations,
        },
        certified,
    }
}

fn subgradient(
    m: &MajorantInstance,
    x0: &[f64],
    delta: f64,
    max_iter: usize,
) -> SubsolveOutcome {
    let gap_target = delta * delta / (2.0 * m.l0);
    let mut x = m.set.project(x0);
    let mut best_primal = m.value(x0);
    let mut best_x = x0.to_vec();
    let mut avg: Vec<f64> = vec![0.0; x.len()];
    let mut weight_sum = 0.0;
    let mut gmax: f64 = 0.0;
    let mut certified = false;
    let mut iterations = 0usize;
    let mut residual = f64::INFINITY;
    for t in 1..=max_iter {
        iterations = t;
        let sg = m.subgradient(&x);
        gmax = gmax.max(linalg::norm(&sg));
        let step = 2.0 / (m.l0 * (t as f64 + 1.0));
        let mut next = x.clone();
        linalg::axpy(&mut next, -step, &sg);
        x = m.set.project(&next);
        let w = t as f64;
        linalg::axpy(&mut avg, w, &x);
        weight_sum += w;
        let bound = 2.0 * gmax * gmax / (m.l0 * (t as f64 + 1.0));
        if bound <= gap_target || t == max_iter || t % 64 == 0 {
            let candidate: Vec<f64> = avg.iter().map(|a| a / weight_sum).collect();
            let q = m.value(&candidate);
            if q < best_primal {
                best_primal = q;
                best_x = candidate;
            }
            residual = 2.0 * gmax / ((t as f64 + 1.0).sqrt());
            if bound <= gap_target {
                certified = true;
                break;
            }
        }
    }
    SubsolveOutcome {
        x: best_x,
        certificate: SubsolveCertificate {
            delta,
            gap_bound: delta * delta / (2.0 * m.l0),
            method: SubsolveMethod::Subgradient,
            residual,
            iterations,
        },
        certified,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bruteforce::grid_min_1d;
    use crate::majorant::MeritKind;
    use crate::model::{
        Constraint, DCProgram, MaxSmoothFn, MultiIndex, NonsmoothConvexFn, PieceSel, PsiForm,
        SmoothConvexFn,
    };
    use std::sync::Arc;

    /// Normalized 1-D program: minimize |x| − max{6x, x} s.t. 2x − max{−x, x} ≤ 0.
    fn worked_example() -> DCProgram {
        DCProgram {
            dim: 1,
            phi0: SmoothConvexFn::zero(),
            zeta0: NonsmoothConvexFn::l1(),
            psi0: MaxSmoothFn::new(vec![
                SmoothConvexFn::affine(vec![6.0], 0.0),
                SmoothConvexFn::affine(vec![1.0], 0.0),
            ]),
            constraints: vec![Constraint {
                phi: SmoothConvexFn::affine(vec![2.0], 0.0),
                zeta: NonsmoothConvexFn::zero(),
                psi: PsiForm::Joint(MaxSmoothFn::new(vec![
                    SmoothConvexFn::affine(vec![-1.0], 0.0),
                    SmoothConvexFn::affine(vec![1.0], 0.0),
                ])),
            }],
            set: ConvexSet::WholeSpace,
        }
        .normalize_l0()
    }

    fn pair(j0: usize, j1: usize) -> MultiIndex {
        MultiIndex {
            j0,
            jj: vec![PieceSel::Joint(j1)],
        }
    }

    /// 2-D program whose objective is ‖x − c‖² with no constraints, so the
    /// majorant equals the objective exactly and the minimum is at c.
    fn shifted_quadratic(c: [f64; 2]) -> DCProgram {
        let cv = c.to_vec();
        let cg = c.to_vec();
        DCProgram {
            dim: 2,
            phi0: SmoothConvexFn::new(
                Arc::new(move |x: &[f64]| {
                    x.iter().zip(&cv).map(|(xi, ci)| (xi - ci) * (xi - ci)).sum()
                }),
                Arc::new(move |x: &[f64]| {
                    x.iter().zip(&cg).map(|(xi, ci)| 2.0 * (xi - ci)).collect()
                }),
                2.0,
            ),
            zeta0: NonsmoothConvexFn::zero(),
            psi0: MaxSmoothFn::zero(),
            constraints: vec![],
            set: ConvexSet::WholeSpace,
        }
    }

    /// 1-D smooth-hinge model: objective x², one affine constraint 3x + 1 with
    /// p = 2 penalty. For rho = 2 the minimum is x = −6/19 with the hinge
    /// active.
    fn smooth_hinge_example() -> DCProgram {
        DCProgram {
            dim: 1,
            phi0: SmoothConvexFn::new(
                Arc::new(|x: &[f64]| x[0] * x[0]),
                Arc::new(|x: &[f64]| vec![2.0 * x[0]]),
                2.0,
            ),
            zeta0: NonsmoothConvexFn::zero(),
            psi0: MaxSmoothFn::zero(),
            constraints: vec![Constraint {
                phi: SmoothConvexFn::affine(vec![3.0], 1.0),
                zeta: NonsmoothConvexFn::zero(),
                psi: PsiForm::Joint(MaxSmoothFn::zero()),
            }],
            set: ConvexSet::WholeSpace,
        }
    }

    #[test]
    fn certifies_worked_example_model_against_grid() {
        // Majorant at anchor 0, pair (0, 0), augmented mode with λ = 0:
        // |x| − 6x + x²/2 + (ρ/2)[3x]₊², minimized at 5/1.9 for ρ = 0.1.
        let p = worked_example();
        let m = MajorantInstance::new(
            &p,
            0.1,
            &[0.0],
            pair(0, 0),
            &MeritKind::Augmented { lambda: vec![0.0] },
        )
        .unwrap();
        assert_eq!(select_method(&m), SubsolveMethod::DualHinge);
        let out = solve_certified(&m, &[0.0], 1e-6, 10_000).unwrap();
        assert!(out.certified);
        assert!(out.certificate.residual <= 1e-6);
        let want = 5.0 / 1.9;
        assert!(
            (out.x[0] - want).abs() <= 2e-6,
            "got {}, want {want}",
            out.x[0]
        );
        let (xg, qg) = grid_min_1d(|x| m.value(&[x]), -10.0, 10.0, 2001, 6);
        assert!((out.x[0] - xg).abs() <= 1e-5);
        assert!(m.value(&out.x) <= qg + out.certificate.gap_bound + 1e-9);
    }

    #[test]
    fn newton_accuracy_on_smooth_quadratic() {
        let p = shifted_quadratic([1.0, 2.0]);
        let kind = MeritKind::Penalty { p: 2 };
        let m = MajorantInstance::new(
            &p,
            1.0,
            &[0.0, 0.0],
            MultiIndex { j0: 0, jj: vec![] },
            &kind,
        )
        .unwrap();
        let delta = 1e-6;
        let out = solve_certified(&m, &[0.0, 0.0], delta, 1000).unwrap();
        assert!(out.certified);
        let err = linalg::dist(&out.x, &[1.0, 2.0]);
        assert!(err <= delta / m.l0 + 1e-9, "distance {err}");
    }

    #[test]
    fn anchor_optimal_certifies_in_one_evaluation() {
        let p = shifted_quadratic([1.0, 2.0]);
        let m = MajorantInstance::new(
            &p,
            1.0,
            &[1.0, 2.0],
            MultiIndex { j0: 0, jj: vec![] },
            &MeritKind::Penalty { p: 2 },
        )
        .unwrap();
        let out = solve_certified(&m, &[1.0, 2.0], 1e-10, 50).unwrap();
        assert!(out.certified);
        assert_eq!(out.certificate.iterations, 1);
        assert!(out.certificate.residual <= 1e-10);
        assert!(linalg::dist(&out.x, &[1.0, 2.0]) <= 1e-10);
    }

    #[test]
    fn monotone_refinement_in_delta() {
        let p = worked_example();
        let m = MajorantInstance::new(
            &p,
            0.1,
            &[0.0],
            pair(0, 0),
            &MeritKind::Augmented { lambda: vec![0.0] },
        )
        .unwrap();
        let mut prev = f64::INFINITY;
        for delta in [1e-2, 1e-4, 1e-6] {
            let out = solve_certified(&m, &[0.0], delta, 10_000).unwrap();
            assert!(out.certified, "delta {delta}");
            let q = m.value(&out.x);
            assert!(q <= prev + 1e-12, "delta {delta}: {q} > {prev}");
            prev = q;
        }
    }

    #[test]
    fn outcome_never_worse_than_start() {
        let p = smooth_hinge_example();
        let kind = MeritKind::Penalty { p: 2 };
        let m = MajorantInstance::new(&p, 2.0, &[0.3], pair(0, 0), &kind).unwrap();
        for method in [
            SubsolveMethod::DualHinge,
            SubsolveMethod::ProxGradient,
            SubsolveMethod::Subgradient,
        ] {
            // A one-iteration budget cannot certify; the point must still not
            // regress past the start.
            let start = [-6.0 / 19.0 + 1e-3];
            let out = solve_with(&m, &start, 1e-9, 1, method).unwrap();
            assert!(
                m.value(&out.x) <= m.value(&start) + 1e-12,
                "{method:?} regressed"
            );
        }
    }

    #[test]
    fn backends_agree_on_smooth_hinge_model() {
        let p = smooth_hinge_example();
        let kind = MeritKind::Penalty { p: 2 };
        let m = MajorantInstance::new(&p, 2.0, &[0.0], pair(0, 0), &kind).unwrap();
        let want = -6.0 / 19.0;

        let dual = solve_with(&m, &[0.0], 1e-8, 10_000, SubsolveMethod::DualHinge).unwrap();
        assert!(dual.certified);
        assert!((dual.x[0] - want).abs() <= 1e-7, "dual {}", dual.x[0]);

        let prox = solve_with(&m, &[0.0], 1e-8, 10_000, SubsolveMethod::ProxGradient).unwrap();
        assert!(prox.certified);
        assert!((prox.x[0] - want).abs() <= 1e-7, "prox {}", prox.x[0]);

        let sub = solve_with(&m, &[0.0], 5e-2, 2_000_000, SubsolveMethod::Subgradient).unwrap();
        assert!(sub.certified);
        // ‖x − x*‖ ≤ √(2·gap_bound / l0) with l0 = 2.
        let radius = (2.0 * sub.certificate.gap_bound / m.l0).sqrt();
        assert!(
            (sub.x[0] - want).abs() <= radius + 1e-9,
            "subgradient {} vs {want} (radius {radius})",
            sub.x[0]
        );
    }

    #[test]
    fn one_sided_hinge_weight_box_in_p1_mode() {
        // p = 1 majorant of the worked example, anchor 1, pair (0, 1):
        // |x| − 6x + (x−1)²/2 + 5[x]₊, minimized at x = 1 with value 0.
        let p = worked_example();
        let m = MajorantInstance::new(&p, 5.0, &[1.0], pair(0, 1), &MeritKind::Penalty { p: 1 })
            .unwrap();
        for start in [[2.0], [-1.0]] {
            let out = solve_certified(&m, &start, 1e-7, 10_000).unwrap();
            assert_eq!(out.certificate.method, SubsolveMethod::DualHinge);
            assert!(out.certified, "start {start:?}");
            assert!((out.x[0] - 1.0).abs() <= 1e-6, "start {start:?} -> {}", out.x[0]);
            assert!(m.value(&out.x) <= 1e-10);
        }
    }

    #[test]
    fn certificate_fields_are_exact() {
        let p = shifted_quadratic([0.5, -0.5]);
        let m = MajorantInstance::new(
            &p,
            1.0,
            &[0.0, 0.0],
            MultiIndex { j0: 0, jj: vec![] },
            &MeritKind::Penalty { p: 2 },
        )
        .unwrap();
        let delta = 3e-4;
        let out = solve_certified(&m, &[1.0, 1.0], delta, 1000).unwrap();
        assert_eq!(out.certificate.delta, delta);
        assert_eq!(out.certificate.gap_bound, delta * delta / (2.0 * m.l0));
        assert!(out.certified && out.certificate.residual <= delta);
        assert_eq!(out.certificate.method.tag(), "dual-hinge");
        assert_eq!(SubsolveMethod::ProxGradient.tag(), "prox-gradient");
        assert_eq!(SubsolveMethod::Subgradient.tag(), "subgradient");
    }

    #[test]
    fn forced_backend_rejects_inapplicable_structure() {
        let p = worked_example();
        // p = 1 with a hinge: prox-gradient does not apply.
        let m1 = MajorantInstance::new(&p, 1.0, &[0.0], pair(0, 0), &MeritKind::Penalty { p: 1 })
            .unwrap();
        let err = solve_with(&m1, &[0.0], 1e-4, 100, SubsolveMethod::ProxGradient).unwrap_err();
        assert!(matches!(err, SubsolveError::MethodInapplicable { .. }));
        assert!(err.to_string().contains("prox-gradient"));

        // Nonsmooth objective over a box: dual-hinge does not apply.
        let mut boxed = worked_example();
        boxed.set = ConvexSet::Box {
            lo: vec![-1.0],
            hi: vec![1.0],
        };
        let m2 = MajorantInstance::new(
            &boxed,
            1.0,
            &[0.0],
            pair(0, 0),
            &MeritKind::Penalty { p: 2 },
        )
        .unwrap();
        let err = solve_with(&m2, &[0.0], 1e-4, 100, SubsolveMethod::DualHinge).unwrap_err();
        assert!(matches!(err, SubsolveError::MethodInapplicable { .. }));
        // The automatic choice falls back to the subgradient backend.
        assert_eq!(select_method(&m2), SubsolveMethod::Subgradient);
    }

    #[test]
    fn rejects_bad_delta_and_dimension() {
        let p = shifted_quadratic([0.0, 0.0]);
        let m = MajorantInstance::new(
            &p,
            1.0,
            &[0.0, 0.0],
            MultiIndex { j0: 0, jj: vec![] },
            &MeritKind::Penalty { p: 2 },
        )
        .unwrap();
        assert!(matches!(
            solve_certified(&m, &[0.0, 0.0], 0.0, 10),
            Err(SubsolveError::BadDelta(_))
        ));
        assert!(matches!(
            solve_certified(&m, &[0.0], 1e-3, 10),
            Err(SubsolveError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn box_constrained_projection_solve() {
        // Smooth quadratic over a box that cuts off the free minimum: the
        // certified point lands on the boundary.
        let mut p = shifted_quadratic([1.0, 2.0]);
        p.set = ConvexSet::Box {
            lo: vec![-0.5, -0.5],
            hi: vec![0.5, 0.5],
        };
        let m = MajorantInstance::new(
            &p,
            1.0,
            &[0.0, 0.0],
            MultiIndex { j0: 0, jj: vec![] },
            &MeritKind::Penalty { p: 2 },
        )
        .unwrap();
        let out = solve_certified(&m, &[0.0, 0.0], 1e-8, 1000).unwrap();
        assert!(out.certified);
        assert!(linalg::dist(&out.x, &[0.5, 0.5]) <= 1e-7);
    }
}
