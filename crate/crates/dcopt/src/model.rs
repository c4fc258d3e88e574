//! Problem model: convex oracles, max-of-smooth structures, feasible sets, and
//! the assembled program
//!
//! ```text
//!   minimize   phi0(x) + zeta0(x) - psi0(x)
//!   subject to phi_i(x) + zeta_i(x) - psi_i(x) <= 0,  i = 1..I,   x in X,
//! ```
//!
//! where every `phi` is smooth convex with a known gradient-Lipschitz constant,
//! every `zeta` is nonsmooth convex (prox-capable where possible), and every
//! `psi` is a pointwise maximum of finitely many smooth convex pieces. The
//! solver modules only ever touch problems through the oracles collected here.

use std::sync::Arc;

use thiserror::Error;

use crate::linalg;

/// Absolute tolerance for deciding that a max-piece is active at a point
/// (used by directional derivatives and 0-active membership checks). Piece
/// values are compared to the block maximum; anything within this distance
/// counts as active. Absolute rather than relative: piece gaps near a kink
/// scale with the distance to the kink, not with the function value.
pub const ACTIVATION_TOL: f64 = 1e-9;

/// Default tolerance for classifying constraint values as positive / zero /
/// negative. Scaled by `1 + |value|` so that huge infeasibilities and tiny
/// boundary values are classified consistently.
pub const CLASSIFY_TOL: f64 = 1e-8;

/// Value oracle: `x -> f(x)`.
pub type ValueFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
/// Gradient (or subgradient) oracle: `x -> g ∈ ∂f(x)`.
pub type GradFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;
/// Proximal oracle: `(x, step) -> argmin_z f(z) + ‖z − x‖²/(2·step)`.
pub type ProxFn = Arc<dyn Fn(&[f64], f64) -> Vec<f64> + Send + Sync>;
/// Projection oracle: `x -> nearest point of the set`.
pub type ProjFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;
/// Pointwise subdifferential box: `x -> (lower, upper)` componentwise bounds.
pub type BoundsFn = Arc<dyn Fn(&[f64]) -> (Vec<f64>, Vec<f64>) + Send + Sync>;
/// Pointwise subdifferential vertex list: `x -> vertices of conv ∂f(x)`.
pub type VerticesFn = Arc<dyn Fn(&[f64]) -> Vec<Vec<f64>> + Send + Sync>;

/// Smooth convex function with a value oracle, a gradient oracle, and a known
/// Lipschitz constant for the gradient (`0` for affine functions).
#[derive(Clone)]
pub struct SmoothConvexFn {
    value: ValueFn,
    grad: GradFn,
    /// Lipschitz constant of the gradient; the curvature constant used by the
    /// quadratic upper models. Zero exactly when the function is affine.
    pub lipschitz_grad: f64,
    /// True when the function is affine (gradient constant, zero curvature).
    pub is_affine: bool,
}

impl SmoothConvexFn {
    pub fn new(value: ValueFn, grad: GradFn, lipschitz_grad: f64) -> Self {
        Self {
            value,
            grad,
            lipschitz_grad,
            is_affine: false,
        }
    }

    /// The affine function `a·x + b`.
    pub fn affine(a: Vec<f64>, b: f64) -> Self {
        let a = Arc::new(a);
        let a2 = Arc::clone(&a);
        Self {
            value: Arc::new(move |x| linalg::dot(&a, x) + b),
            grad: Arc::new(move |_| a2.as_ref().clone()),
            lipschitz_grad: 0.0,
            is_affine: true,
        }
    }

    /// The identically-zero function (any dimension).
    pub fn zero() -> Self {
        Self {
            value: Arc::new(|_| 0.0),
            grad: Arc::new(|x| vec![0.0; x.len()]),
            lipschitz_grad: 0.0,
            is_affine: true,
        }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        (self.value)(x)
    }

    pub fn grad(&self, x: &[f64]) -> Vec<f64> {
        (self.grad)(x)
    }

    /// Linearization `f(anchor) + ∇f(anchor)·(x − anchor)`.
    pub fn linearization(&self, anchor: &[f64], x: &[f64]) -> f64 {
        self.value(anchor) + linalg::dot(&self.grad(anchor), &linalg::sub(x, anchor))
    }

    /// Maximum absolute deviation between the gradient oracle and a central
    /// finite difference with stepsize `h`. Test helper for oracle soundness.
    pub fn finite_diff_error(&self, x: &[f64], h: f64) -> f64 {
        let g = self.grad(x);
        let mut worst: f64 = 0.0;
        let mut xp = x.to_vec();
        for i in 0..x.len() {
            xp[i] = x[i] + h;
            let fp = self.value(&xp);
            xp[i] = x[i] - h;
            let fm = self.value(&xp);
            xp[i] = x[i];
            worst = worst.max(((fp - fm) / (2.0 * h) - g[i]).abs());
        }
        worst
    }

    /// Returns a new function `f(x) + ‖x‖²/2`, with the curvature constant
    /// increased by one. Used by the objective normalization.
    fn plus_half_sq_norm(&self) -> Self {
        let value = Arc::clone(&self.value);
        let grad = Arc::clone(&self.grad);
        Self {
            value: Arc::new(move |x| value(x) + 0.5 * linalg::dot(x, x)),
            grad: Arc::new(move |x| {
                let mut g = grad(x);
                linalg::axpy(&mut g, 1.0, x);
                g
            }),
            lipschitz_grad: self.lipschitz_grad + 1.0,
            is_affine: false,
        }
    }
}

/// How a nonsmooth convex function exposes its subdifferential to the
/// stationarity diagnostics: either componentwise interval bounds or an
/// explicit vertex list of the (polytopal) subdifferential.
#[derive(Clone)]
pub enum SubdiffDescriptor {
    Box { bounds: BoundsFn },
    Vertices { vertices: VerticesFn },
}

/// Nonsmooth convex function with a value oracle, a subgradient selection, an
/// optional proximal oracle, and an optional subdifferential descriptor.
#[derive(Clone)]
pub struct NonsmoothConvexFn {
    value: ValueFn,
    subgrad: GradFn,
    /// Present when the proximal map has a cheap exact implementation.
    pub prox: Option<ProxFn>,
    /// Present when the subdifferential is finitely representable; required by
    /// the stationarity diagnostics.
    pub subdiff: Option<SubdiffDescriptor>,
    /// True for the identically-zero function; lets the solvers skip terms.
    pub is_zero: bool,
}

impl NonsmoothConvexFn {
    /// The identically-zero function.
    pub fn zero() -> Self {
        Self {
            value: Arc::new(|_| 0.0),
            subgrad: Arc::new(|x| vec![0.0; x.len()]),
            prox: Some(Arc::new(|x, _| x.to_vec())),
            subdiff: Some(SubdiffDescriptor::Box {
                bounds: Arc::new(|x| (vec![0.0; x.len()], vec![0.0; x.len()])),
            }),
            is_zero: true,
        }
    }

    /// The l1 norm `‖x‖₁` with soft-threshold prox and the sign-box
    /// subdifferential. The subgradient selection at a kink takes the interior
    /// value 0.
    pub fn l1() -> Self {
        Self {
            value: Arc::new(|x| x.iter().map(|v| v.abs()).sum()),
            subgrad: Arc::new(|x| x.iter().map(|v| sgn(*v)).collect()),
            prox: Some(Arc::new(|x, step| {
                x.iter()
                    .map(|v| sgn(*v) * linalg::pos(v.abs() - step))
                    .collect()
            })),
            subdiff: Some(SubdiffDescriptor::Box {
                bounds: Arc::new(|x| {
                    let lo = x
                        .iter()
                        .map(|v| if *v > 0.0 { 1.0 } else { -1.0 })
                        .collect::<Vec<_>>();
                    let hi = x
                        .iter()
                        .map(|v| if *v < 0.0 { -1.0 } else { 1.0 })
                        .collect::<Vec<_>>();
                    (lo, hi)
                }),
            }),
            is_zero: false,
        }
    }

    pub fn new(value: ValueFn, subgrad: GradFn) -> Self {
        Self {
            value,
            subgrad,
            prox: None,
            subdiff: None,
            is_zero: false,
        }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        (self.value)(x)
    }

    pub fn subgrad(&self, x: &[f64]) -> Vec<f64> {
        (self.subgrad)(x)
    }

    /// Applies the prox oracle; callers must check `prox.is_some()` first.
    pub fn prox_point(&self, x: &[f64], step: f64) -> Vec<f64> {
        (self.prox.as_ref().expect("prox oracle missing"))(x, step)
    }
}

fn sgn(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Pointwise maximum of finitely many smooth convex pieces.
#[derive(Clone)]
pub struct MaxSmoothFn {
    pub pieces: Vec<SmoothConvexFn>,
}

impl MaxSmoothFn {
    pub fn new(pieces: Vec<SmoothConvexFn>) -> Self {
        assert!(!pieces.is_empty(), "a max needs at least one piece");
        Self { pieces }
    }

    /// Single identically-zero piece; the neutral element used when a program
    /// has no concave part in its objective.
    pub fn zero() -> Self {
        Self {
            pieces: vec![SmoothConvexFn::zero()],
        }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.pieces
            .iter()
            .map(|p| p.value(x))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Piece indices whose value is within `eps` of the maximum.
    pub fn eps_active(&self, x: &[f64], eps: f64) -> Vec<usize> {
        let vals: Vec<f64> = self.pieces.iter().map(|p| p.value(x)).collect();
        let top = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        vals.iter()
            .enumerate()
            .filter(|(_, v)| top <= **v + eps)
            .map(|(j, _)| j)
            .collect()
    }
}

/// Per-coordinate max of scalar affine pieces `slope * x[coord] + intercept`.
/// Building block of separable constraint structures.
#[derive(Clone, Debug, PartialEq)]
pub struct CoordMax {
    pub coord: usize,
    /// `(slope, intercept)` per piece, in fixed order.
    pub pieces: Vec<(f64, f64)>,
}

impl CoordMax {
    pub fn value(&self, x: &[f64]) -> f64 {
        let v = x[self.coord];
        self.pieces
            .iter()
            .map(|(s, b)| s * v + b)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn piece_value(&self, j: usize, x: &[f64]) -> f64 {
        let (s, b) = self.pieces[j];
        s * x[self.coord] + b
    }

    pub fn eps_active(&self, x: &[f64], eps: f64) -> Vec<usize> {
        let v = x[self.coord];
        let vals: Vec<f64> = self.pieces.iter().map(|(s, b)| s * v + b).collect();
        let top = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        vals.iter()
            .enumerate()
            .filter(|(_, pv)| top <= **pv + eps)
            .map(|(j, _)| j)
            .collect()
    }
}

/// The concave part of a constraint: either a joint max over smooth pieces or
/// a sum of independent per-coordinate maxes of affine pieces. The separable
/// form keeps piece enumeration implicit — a sum of `n` three-piece maxes is
/// never expanded into `3^n` joint pieces.
#[derive(Clone)]
pub enum PsiForm {
    Joint(MaxSmoothFn),
    SeparableSum(Vec<CoordMax>),
}

impl PsiForm {
    pub fn value(&self, x: &[f64]) -> f64 {
        match self {
            PsiForm::Joint(m) => m.value(x),
            PsiForm::SeparableSum(blocks) => blocks.iter().map(|b| b.value(x)).sum(),
        }
    }

    /// Value of the selected piece (joint index or per-coordinate selection).
    pub fn piece_value(&self, sel: &PieceSel, x: &[f64]) -> f64 {
        match (self, sel) {
            (PsiForm::Joint(m), PieceSel::Joint(j)) => m.pieces[*j].value(x),
            (PsiForm::SeparableSum(blocks), PieceSel::PerCoord(js)) => {
                debug_assert_eq!(blocks.len(), js.len());
                blocks
                    .iter()
                    .zip(js)
                    .map(|(b, j)| b.piece_value(*j, x))
                    .sum()
            }
            _ => panic!("piece selector shape does not match the constraint"),
        }
    }

    /// Dense gradient of the selected piece.
    pub fn piece_grad(&self, sel: &PieceSel, x: &[f64]) -> Vec<f64> {
        match (self, sel) {
            (PsiForm::Joint(m), PieceSel::Joint(j)) => m.pieces[*j].grad(x),
            (PsiForm::SeparableSum(blocks), PieceSel::PerCoord(js)) => {
                let mut g = vec![0.0; x.len()];
                for (b, j) in blocks.iter().zip(js) {
                    g[b.coord] += b.pieces[*j].0;
                }
                g
            }
            _ => panic!("piece selector shape does not match the constraint"),
        }
    }

    /// Per-block lists of eps-active piece indices.
    pub fn eps_active(&self, x: &[f64], eps: f64) -> ActiveSel {
        match self {
            PsiForm::Joint(m) => ActiveSel::Joint(m.eps_active(x, eps)),
            PsiForm::SeparableSum(blocks) => {
                ActiveSel::PerCoord(blocks.iter().map(|b| b.eps_active(x, eps)).collect())
            }
        }
    }
}

/// Piece selection for one constraint: a joint piece index, or one piece index
/// per separable block.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum PieceSel {
    Joint(usize),
    PerCoord(Vec<usize>),
}

/// Active piece indices for one constraint, mirroring the two selector shapes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ActiveSel {
    Joint(Vec<usize>),
    PerCoord(Vec<Vec<usize>>),
}

impl ActiveSel {
    /// Number of selections in this constraint's active product.
    /// Saturating so separable blocks cannot overflow.
    pub fn count(&self) -> usize {
        match self {
            ActiveSel::Joint(js) => js.len(),
            ActiveSel::PerCoord(blocks) => blocks
                .iter()
                .fold(1usize, |acc, b| acc.saturating_mul(b.len())),
        }
    }

    /// Whether `sel` belongs to this active set.
    pub fn contains(&self, sel: &PieceSel) -> bool {
        match (self, sel) {
            (ActiveSel::Joint(js), PieceSel::Joint(j)) => js.contains(j),
            (ActiveSel::PerCoord(blocks), PieceSel::PerCoord(sel_js)) => {
                blocks.len() == sel_js.len()
                    && blocks.iter().zip(sel_js).all(|(b, j)| b.contains(j))
            }
            _ => false,
        }
    }
}

/// A full piece selection `(j0, jj)`: one objective piece plus one selection
/// per constraint.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct MultiIndex {
    pub j0: usize,
    pub jj: Vec<PieceSel>,
}

/// One inequality constraint `phi + zeta - psi <= 0`.
#[derive(Clone)]
pub struct Constraint {
    pub phi: SmoothConvexFn,
    pub zeta: NonsmoothConvexFn,
    pub psi: PsiForm,
}

/// Closed convex feasible set with a projection oracle.
#[derive(Clone)]
pub enum ConvexSet {
    WholeSpace,
    Box { lo: Vec<f64>, hi: Vec<f64> },
    Custom { project: ProjFn, label: String },
}

impl ConvexSet {
    pub fn project(&self, x: &[f64]) -> Vec<f64> {
        match self {
            ConvexSet::WholeSpace => x.to_vec(),
            ConvexSet::Box { lo, hi } => linalg::clamp_vec(x, lo, hi),
            ConvexSet::Custom { project, .. } => project(x),
        }
    }

    /// Membership up to `tol`, measured by the distance to the projection.
    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        match self {
            ConvexSet::WholeSpace => true,
            _ => linalg::dist(x, &self.project(x)) <= tol,
        }
    }

    pub fn kind_label(&self) -> &str {
        match self {
            ConvexSet::WholeSpace => "whole-space",
            ConvexSet::Box { .. } => "box",
            ConvexSet::Custom { label, .. } => label,
        }
    }
}

/// Errors raised by model-level operations.
#[derive(Debug, Error)]
pub enum ModelError {
    #[error("constraint index {0} out of range (program has {1} constraints)")]
    ConstraintIndex(usize, usize),
    #[error("piece selector shape does not match constraint {0}")]
    SelectorShape(usize),
    #[error("objective curvature constant must be positive (got {0}); normalize the program first")]
    NotStronglyConvex(f64),
    #[error("multiplier vector has length {got}, expected {expected}")]
    LambdaLength { got: usize, expected: usize },
    #[error("multiplier vector must be componentwise nonnegative")]
    LambdaNegative,
}

/// The assembled program.
#[derive(Clone)]
pub struct DCProgram {
    pub dim: usize,
    pub phi0: SmoothConvexFn,
    pub zeta0: NonsmoothConvexFn,
    pub psi0: MaxSmoothFn,
    pub constraints: Vec<Constraint>,
    pub set: ConvexSet,
}

/// Classification of constraint indices by sign of the constraint value.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Classification {
    pub positive: Vec<usize>,
    pub zero: Vec<usize>,
    pub negative: Vec<usize>,
}

/// The eps-active piece product at a point, plus an enumeration of full
/// selections in lexicographic order (objective piece most significant, then
/// constraints in order, then separable blocks in coordinate order).
#[derive(Clone, Debug)]
pub struct PairEnumeration {
    pub indices: Vec<MultiIndex>,
    /// True when the product size exceeded the cap and `indices` holds only
    /// the lexicographic prefix.
    pub truncated: bool,
    /// Saturating total product size.
    pub total: usize,
}

impl DCProgram {
    /// Objective `phi0 + zeta0 - psi0`.
    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.phi0.value(x) + self.zeta0.value(x) - self.psi0.value(x)
    }

    /// Constraint value `phi_i + zeta_i - psi_i`.
    pub fn constraint_value(&self, i: usize, x: &[f64]) -> f64 {
        let c = &self.constraints[i];
        c.phi.value(x) + c.zeta.value(x) - c.psi.value(x)
    }

    /// All constraint values at `x`.
    pub fn constraint_values(&self, x: &[f64]) -> Vec<f64> {
        (0..self.constraints.len())
            .map(|i| self.constraint_value(i, x))
            .collect()
    }

    /// Curvature constant of the smooth objective part; the strong-convexity
    /// modulus of every majorant built from this program.
    pub fn l0(&self) -> f64 {
        self.phi0.lipschitz_grad
    }

    /// Objective pieces within `eps` of the objective max.
    pub fn eps_active_obj(&self, x: &[f64], eps: f64) -> Vec<usize> {
        self.psi0.eps_active(x, eps)
    }

    /// Per-constraint active piece sets at `x`.
    pub fn eps_active_constraints(&self, x: &[f64], eps: f64) -> Vec<ActiveSel> {
        self.constraints
            .iter()
            .map(|c| c.psi.eps_active(x, eps))
            .collect()
    }

    /// Enumerates the eps-active product `J0_eps(x) × J_eps(x)` in
    /// lexicographic order, stopping after `cap` selections.
    pub fn enumerate_pairs(&self, x: &[f64], eps: f64, cap: usize) -> PairEnumeration {
        let j0s = self.eps_active_obj(x, eps);
        let actives = self.eps_active_constraints(x, eps);
        enumerate_product(&j0s, &actives, cap)
    }

    /// Partitions constraint indices by sign of the constraint value using a
    /// tolerance scaled by `1 + |value|`.
    pub fn classify_constraints(&self, x: &[f64], tol: f64) -> Classification {
        let mut out = Classification::default();
        for i in 0..self.constraints.len() {
            let v = self.constraint_value(i, x);
            let thr = tol * (1.0 + v.abs());
            if v > thr {
                out.positive.push(i);
            } else if v < -thr {
                out.negative.push(i);
            } else {
                out.zero.push(i);
            }
        }
        out
    }

    /// Directional derivative of `psi_i` at `x` along `d`: the maximum of
    /// active-piece gradients applied to `d`. `i = 0` addresses the objective
    /// part `psi0`; `i = 1..I` address constraints. Active pieces are selected
    /// with [`ACTIVATION_TOL`].
    pub fn psi_directional_derivative(&self, i: usize, x: &[f64], d: &[f64]) -> f64 {
        if i == 0 {
            let act = self.psi0.eps_active(x, ACTIVATION_TOL);
            return act
                .iter()
                .map(|j| linalg::dot(&self.psi0.pieces[*j].grad(x), d))
                .fold(f64::NEG_INFINITY, f64::max);
        }
        let c = &self.constraints[i - 1];
        match &c.psi {
            PsiForm::Joint(m) => {
                let act = m.eps_active(x, ACTIVATION_TOL);
                act.iter()
                    .map(|j| linalg::dot(&m.pieces[*j].grad(x), d))
                    .fold(f64::NEG_INFINITY, f64::max)
            }
            PsiForm::SeparableSum(blocks) => blocks
                .iter()
                .map(|b| {
                    b.eps_active(x, ACTIVATION_TOL)
                        .iter()
                        .map(|j| b.pieces[*j].0 * d[b.coord])
                        .fold(f64::NEG_INFINITY, f64::max)
                })
                .sum(),
        }
    }

    /// Ensures the smooth objective part has positive curvature. When `phi0`
    /// is affine, adds `‖x‖²/2` to `phi0` and to every `psi0` piece — the
    /// objective is unchanged pointwise, but every majorant built afterwards
    /// is strongly convex with modulus 1. Programs with positive curvature are
    /// returned unchanged.
    pub fn normalize_l0(self) -> DCProgram {
        if self.phi0.lipschitz_grad > 0.0 {
            return self;
        }
        let phi0 = self.phi0.plus_half_sq_norm();
        let psi0 = MaxSmoothFn {
            pieces: self
                .psi0
                .pieces
                .iter()
                .map(|p| p.plus_half_sq_norm())
                .collect(),
        };
        DCProgram {
            phi0,
            psi0,
            ..self
        }
    }

    /// Validates a multi-index against the program's piece structure.
    pub fn check_index(&self, index: &MultiIndex) -> Result<(), ModelError> {
        if index.j0 >= self.psi0.pieces.len() {
            return Err(ModelError::SelectorShape(0));
        }
        if index.jj.len() != self.constraints.len() {
            return Err(ModelError::SelectorShape(0));
        }
        for (i, (sel, c)) in index.jj.iter().zip(&self.constraints).enumerate() {
            let ok = match (sel, &c.psi) {
                (PieceSel::Joint(j), PsiForm::Joint(m)) => *j < m.pieces.len(),
                (PieceSel::PerCoord(js), PsiForm::SeparableSum(blocks)) => {
                    js.len() == blocks.len()
                        && js.iter().zip(blocks).all(|(j, b)| *j < b.pieces.len())
                }
                _ => false,
            };
            if !ok {
                return Err(ModelError::SelectorShape(i + 1));
            }
        }
        Ok(())
    }
}

/// Lexicographic product enumeration over the objective's active pieces and
/// each constraint's active selections. Positions advance odometer-style with
/// the last position fastest, making the objective piece most significant.
pub fn enumerate_product(j0s: &[usize], actives: &[ActiveSel], cap: usize) -> PairEnumeration {
    // Flatten each constraint's active structure into a list of positions,
    // where each position holds its candidate piece indices.
    let mut positions: Vec<&[usize]> = Vec::new();
    for a in actives {
        match a {
            ActiveSel::Joint(js) => positions.push(js),
            ActiveSel::PerCoord(blocks) => {
                for b in blocks {
                    positions.push(b);
                }
            }
        }
    }
    let mut total = j0s.len();
    for p in &positions {
        total = total.saturating_mul(p.len());
    }
    let mut out = Vec::new();
    let mut truncated = false;
    'outer: for &j0 in j0s {
        if positions.iter().any(|p| p.is_empty()) {
            break;
        }
        let mut odo = vec![0usize; positions.len()];
        loop {
            if out.len() >= cap {
                truncated = true;
                break 'outer;
            }
            // Materialize the current selection.
            let mut jj = Vec::with_capacity(actives.len());
            let mut cursor = 0;
            for a in actives {
                match a {
                    ActiveSel::Joint(_) => {
                        jj.push(PieceSel::Joint(positions[cursor][odo[cursor]]));
                        cursor += 1;
                    }
                    ActiveSel::PerCoord(blocks) => {
                        let js = (0..blocks.len())
                            .map(|t| positions[cursor + t][odo[cursor + t]])
                            .collect();
                        jj.push(PieceSel::PerCoord(js));
                        cursor += blocks.len();
                    }
                }
            }
            out.push(MultiIndex { j0, jj });
            // Advance the odometer, last position fastest.
            let mut pos = positions.len();
            loop {
                if pos == 0 {
                    break;
                }
                pos -= 1;
                odo[pos] += 1;
                if odo[pos] < positions[pos].len() {
                    break;
                }
                odo[pos] = 0;
                if pos == 0 {
                    pos = usize::MAX;
                    break;
                }
            }
            if positions.is_empty() || pos == usize::MAX {
                break;
            }
        }
    }
    PairEnumeration {
        indices: out,
        truncated,
        total,
    }
}
