//! Merit functions and their anchored convex upper models.
//!
//! For a program with objective `F = phi0 + zeta0 - psi0` and constraints
//! `c_i = phi_i + zeta_i - psi_i`, two merit functions drive the outer loops:
//!
//! * penalty:   `F_rho(x) = F(x) + rho * Σ_i [c_i(x)]₊^p`, `p ∈ {1, 2}`;
//! * augmented: `F~_rho(x, λ) = F(x) + (1/2rho) * Σ_i ([λ_i + rho c_i(x)]₊² − λ_i²)`.
//!
//! At an anchor point and a piece selection `(j0, jj)`, replacing each smooth
//! convex `phi` by its quadratic upper model and each selected `psi`-piece by
//! its linearization produces a strongly convex majorant of the merit function
//! that touches it at the anchor whenever the selected pieces are active
//! there. [`MajorantInstance`] precomputes the anchored data once; the convex
//! subsolver then minimizes it to a certified accuracy.

use crate::linalg;
use crate::model::{ConvexSet, DCProgram, ModelError, MultiIndex, NonsmoothConvexFn};

/// Which merit function a majorant (or an inner solve) targets.
#[derive(Clone, Debug)]
pub enum MeritKind {
    /// `rho * Σ [c_i]₊^p` with `p ∈ {1, 2}`.
    Penalty { p: u8 },
    /// `(1/2rho) * Σ ([λ_i + rho c_i]₊² − λ_i²)`.
    Augmented { lambda: Vec<f64> },
}

impl MeritKind {
    pub fn is_augmented(&self) -> bool {
        matches!(self, MeritKind::Augmented { .. })
    }
}

/// Penalty merit value `F(x) + rho * Σ [c_i(x)]₊^p`.
pub fn penalty_value(prog: &DCProgram, rho: f64, p: u8, x: &[f64]) -> f64 {
    assert!(p == 1 || p == 2, "penalty exponent must be 1 or 2");
    let mut pen = 0.0;
    for i in 0..prog.constraints.len() {
        let c = linalg::pos(prog.constraint_value(i, x));
        pen += if p == 1 { c } else { c * c };
    }
    prog.objective_value(x) + rho * pen
}

/// Augmented-Lagrangian merit value
/// `F(x) + (1/2rho) * Σ ([λ_i + rho c_i(x)]₊² − λ_i²)`.
pub fn al_value(prog: &DCProgram, rho: f64, lambda: &[f64], x: &[f64]) -> f64 {
    assert_eq!(lambda.len(), prog.constraints.len());
    let mut term = 0.0;
    for (i, l) in lambda.iter().enumerate() {
        let c = prog.constraint_value(i, x);
        let h = linalg::pos(l + rho * c);
        term += h * h - l * l;
    }
    prog.objective_value(x) + term / (2.0 * rho)
}

/// Merit value for either kind.
pub fn merit_value(prog: &DCProgram, rho: f64, kind: &MeritKind, x: &[f64]) -> f64 {
    match kind {
        MeritKind::Penalty { p } => penalty_value(prog, rho, *p, x),
        MeritKind::Augmented { lambda } => al_value(prog, rho, lambda, x),
    }
}

/// Anchored data of one penalized constraint term. The hinge interior is
///
/// `m_i(x) = const_term + lin·(x − anchor) + (curv/2)‖x − anchor‖² + zeta_i(x)`,
///
/// i.e. the quadratic upper model of `phi_i` minus the linearization of the
/// selected `psi_i` piece, both taken at the anchor, plus the untouched
/// nonsmooth part.
#[derive(Clone)]
pub struct HingeTerm {
    pub const_term: f64,
    pub lin: Vec<f64>,
    pub curv: f64,
    pub zeta: NonsmoothConvexFn,
    /// Multiplier `λ_i` in augmented mode; 0 in penalty mode.
    pub lambda_i: f64,
}

impl HingeTerm {
    /// Hinge interior value at `x` (relative to the stored anchor difference).
    pub(crate) fn value(&self, dx: &[f64], sq: f64, x: &[f64]) -> f64 {
        let mut v = self.const_term + linalg::dot(&self.lin, dx) + 0.5 * self.curv * sq;
        if !self.zeta.is_zero {
            v += self.zeta.value(x);
        }
        v
    }
}

/// A strongly convex majorant of the selected merit function, anchored at a
/// point and a piece selection. All quadratic curvature is isotropic, which
/// the subsolver exploits.
#[derive(Clone)]
pub struct MajorantInstance {
    pub rho: f64,
    pub anchor: Vec<f64>,
    pub index: MultiIndex,
    /// Present in augmented mode.
    pub lambda: Option<Vec<f64>>,
    /// Penalty exponent; meaningful only when `lambda` is absent.
    pub p: u8,
    /// Strong-convexity modulus (the objective curvature constant).
    pub l0: f64,
    /// `phi0(anchor) − psi0_piece(anchor)`.
    pub base_const: f64,
    /// `∇phi0(anchor) − ∇psi0_piece(anchor)`.
    pub base_lin: Vec<f64>,
    pub zeta0: NonsmoothConvexFn,
    pub hinges: Vec<HingeTerm>,
    pub set: ConvexSet,
}

impl MajorantInstance {
    /// Builds the anchored majorant for `(rho, anchor, index)` in the given
    /// merit mode. Fails when the objective has no curvature (normalize the
    /// program first), when the index does not match the piece structure, or
    /// when the multiplier vector is malformed.
    pub fn new(
        prog: &DCProgram,
        rho: f64,
        anchor: &[f64],
        index: MultiIndex,
        kind: &MeritKind,
    ) -> Result<Self, ModelError> {
        let l0 = prog.l0();
        if l0 <= 0.0 {
            return Err(ModelError::NotStronglyConvex(l0));
        }
        prog.check_index(&index)?;
        let lambda = match kind {
            MeritKind::Penalty { .. } => None,
            MeritKind::Augmented { lambda } => {
                if lambda.len() != prog.constraints.len() {
                    return Err(ModelError::LambdaLength {
                        got: lambda.len(),
                        expected: prog.constraints.len(),
                    });
                }
                if lambda.iter().any(|l| *l < 0.0) {
                    return Err(ModelError::LambdaNegative);
                }
                Some(lambda.clone())
            }
        };
        let p = match kind {
            MeritKind::Penalty { p } => {
                assert!(*p == 1 || *p == 2, "penalty exponent must be 1 or 2");
                *p
            }
            MeritKind::Augmented { .. } => 2,
        };

        let piece0 = &prog.psi0.pieces[index.j0];
        let base_const = prog.phi0.value(anchor) - piece0.value(anchor);
        let base_lin = linalg::sub(&prog.phi0.grad(anchor), &piece0.grad(anchor));

        let mut hinges = Vec::with_capacity(prog.constraints.len());
        for (i, (c, sel)) in prog.constraints.iter().zip(&index.jj).enumerate() {
            let const_term = c.phi.value(anchor) - c.psi.piece_value(sel, anchor);
            let lin = linalg::sub(&c.phi.grad(anchor), &c.psi.piece_grad(sel, anchor));
            hinges.push(HingeTerm {
                const_term,
                lin,
                curv: c.phi.lipschitz_grad,
                zeta: c.zeta.clone(),
                lambda_i: lambda.as_ref().map_or(0.0, |l| l[i]),
            });
        }

        Ok(Self {
            rho,
            anchor: anchor.to_vec(),
            index,
            lambda,
            p,
            l0,
            base_const,
            base_lin,
            zeta0: prog.zeta0.clone(),
            hinges,
            set: prog.set.clone(),
        })
    }

    pub fn dim(&self) -> usize {
        self.anchor.len()
    }

    pub fn is_augmented(&self) -> bool {
        self.lambda.is_some()
    }

    /// Smooth anchored base `base_const + base_lin·dx + (l0/2)‖dx‖²`.
    fn smooth_base(&self, dx: &[f64], sq: f64) -> f64 {
        self.base_const + linalg::dot(&self.base_lin, dx) + 0.5 * self.l0 * sq
    }

    /// All hinge interior values at `x`.
    pub fn hinge_values(&self, x: &[f64]) -> Vec<f64> {
        let dx = linalg::sub(x, &self.anchor);
        let sq = linalg::dot(&dx, &dx);
        self.hinges.iter().map(|h| h.value(&dx, sq, x)).collect()
    }

    /// Combines hinge interior values into the penalty/augmented term.
    pub fn combine(&self, m: &[f64]) -> f64 {
        match &self.lambda {
            None => {
                let s: f64 = m
                    .iter()
                    .map(|v| {
                        let h = linalg::pos(*v);
                        if self.p == 1 {
                            h
                        } else {
                            h * h
                        }
                    })
                    .sum();
                self.rho * s
            }
            Some(lambda) => {
                let s: f64 = m
                    .iter()
                    .zip(lambda)
                    .map(|(v, l)| {
                        let h = linalg::pos(l + self.rho * v);
                        h * h - l * l
                    })
                    .sum();
                s / (2.0 * self.rho)
            }
        }
    }

    /// Derivative of the combined term with respect to each hinge interior —
    /// the hinge weights. At a hinge kink (`m_i = 0`) the weight takes the
    /// zero side, matching the subgradient selection convention.
    pub fn hinge_weights(&self, m: &[f64]) -> Vec<f64> {
        match &self.lambda {
            None => m
                .iter()
                .map(|v| {
                    if self.p == 1 {
                        if *v > 0.0 {
                            self.rho
                        } else {
                            0.0
                        }
                    } else {
                        2.0 * self.rho * linalg::pos(*v)
                    }
                })
                .collect(),
            Some(lambda) => m
                .iter()
                .zip(lambda)
                .map(|(v, l)| linalg::pos(l + self.rho * v))
                .collect(),
        }
    }

    /// Majorant value at `x`.
    pub fn value(&self, x: &[f64]) -> f64 {
        let dx = linalg::sub(x, &self.anchor);
        let sq = linalg::dot(&dx, &dx);
        let mut v = self.smooth_base(&dx, sq);
        if !self.zeta0.is_zero {
            v += self.zeta0.value(x);
        }
        let m: Vec<f64> = self.hinges.iter().map(|h| h.value(&dx, sq, x)).collect();
        v + self.combine(&m)
    }

    /// One element of the majorant's subdifferential at `x`: subgradient
    /// selections at kinks take the zero side of each hinge and the interior
    /// selection of each `zeta`.
    pub fn subgradient(&self, x: &[f64]) -> Vec<f64> {
        let dx = linalg::sub(x, &self.anchor);
        let sq = linalg::dot(&dx, &dx);
        let mut g = self.base_lin.clone();
        linalg::axpy(&mut g, self.l0, &dx);
        if !self.zeta0.is_zero {
            linalg::axpy(&mut g, 1.0, &self.zeta0.subgrad(x));
        }
        let m: Vec<f64> = self.hinges.iter().map(|h| h.value(&dx, sq, x)).collect();
        let w = self.hinge_weights(&m);
        for (h, wi) in self.hinges.iter().zip(&w) {
            if *wi == 0.0 {
                continue;
            }
            linalg::axpy(&mut g, *wi, &h.lin);
            linalg::axpy(&mut g, wi * h.curv, &dx);
            if !h.zeta.is_zero {
                linalg::axpy(&mut g, *wi, &h.zeta.subgrad(x));
            }
        }
        g
    }
}

/// Majorant value at `x` (free-function form of [`MajorantInstance::value`]).
pub fn majorant_value(m: &MajorantInstance, x: &[f64]) -> f64 {
    m.value(x)
}

/// Majorant subgradient at `x`.
pub fn majorant_subgradient(m: &MajorantInstance, x: &[f64]) -> Vec<f64> {
    m.subgradient(x)
}
