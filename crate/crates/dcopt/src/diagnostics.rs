//! Solution-quality diagnostics: feasibility, iterate change, and
//! stationarity residuals.
//!
//! The stationarity check measures, for one piece selection `(j0, jj)`,
//! how close the gradient inclusion
//!
//! ```text
//! 0 ∈ ∇phi0(x) + ∂zeta0(x) − ∇psi0_{j0}(x)
//!       + Σ_i λ_i (∇phi_i(x) + ∂zeta_i(x) − ∇psi_i_{j_i}(x)) + N_X(x)
//! ```
//!
//! comes to holding with some multipliers `λ ≥ 0`. Multipliers are allowed
//! only on constraints whose value is zero at `x` (within the activation
//! tolerance); slack and violated constraints are pinned to `λ_i = 0`, so an
//! unexplained gradient remainder shows up in the residual rather than being
//! absorbed by a bogus multiplier.
//!
//! The search is a convex least-squares problem over a product of simple
//! sets once the bilinear terms `λ_i v_i` are replaced by their joint cone:
//! for an interval descriptor `∂zeta_i(x) = [lo, hi]` the pair
//! `(λ_i, t_i = λ_i v_i)` ranges over `{λ ≥ 0, λ·lo ≤ t ≤ λ·hi}`, and for a
//! vertex descriptor the scaled hull is parametrized by nonnegative vertex
//! weights summing to `λ_i`. It is solved by projected gradient with a
//! conservative fixed step derived from a Frobenius bound on the linear
//! operator, restarted from `λ = 0`.

use crate::linalg::{axpy, dist, dot, norm, pos};
use crate::model::{
    ConvexSet, DCProgram, ModelError, MultiIndex, NonsmoothConvexFn, PieceSel, SubdiffDescriptor,
    ACTIVATION_TOL,
};
use thiserror::Error;

/// Maximum constraint violation `max_i [c_i(x)]_+` (0 when there are no
/// constraints).
pub fn feasibility_violation(prog: &DCProgram, x: &[f64]) -> f64 {
    prog.constraint_values(x)
        .iter()
        .fold(0.0, |acc, &c| acc.max(pos(c)))
}

/// Relative iterate change `‖curr − prev‖ / ‖curr‖`.
///
/// Returns the value together with a flag marking a degenerate denominator:
/// when `‖curr‖ = 0` the value is 0 if the iterates coincide and ∞
/// otherwise.
pub fn relative_change(curr: &[f64], prev: &[f64]) -> (f64, bool) {
    let denom = norm(curr);
    let diff = dist(curr, prev);
    if denom == 0.0 {
        let value = if diff == 0.0 { 0.0 } else { f64::INFINITY };
        (value, true)
    } else {
        (diff / denom, false)
    }
}

/// Errors raised by the stationarity diagnostics.
#[derive(Debug, Error)]
pub enum KKTError {
    /// The feasible set has no finitely representable normal cone here.
    #[error("stationarity search supports whole-space or box feasible sets, got {kind}")]
    UnsupportedSet { kind: String },
    /// A nonsmooth part has no subdifferential descriptor attached.
    #[error("missing subdifferential descriptor for {location}")]
    MissingDescriptor { location: String },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Multiplier search result for one piece selection.
#[derive(Clone, Debug)]
pub struct KKTEntry {
    pub index: MultiIndex,
    /// Best multiplier vector found (one entry per constraint; zero off the
    /// active set).
    pub lambda: Vec<f64>,
    /// Norm of the best inclusion element: 0 means the selection's
    /// stationarity system holds at `x`.
    pub stationarity: f64,
    /// `max_i |λ_i · c_i(x)|` for the returned multipliers.
    pub complementarity: f64,
}

/// Stationarity assessment over every active piece selection at a point.
#[derive(Clone, Debug)]
pub struct KKTReport {
    /// One entry per enumerated selection, in lexicographic order.
    pub entries: Vec<KKTEntry>,
    pub worst_stationarity: f64,
    pub worst_complementarity: f64,
    /// Constraint violation at the assessed point.
    pub feasibility: f64,
    /// True when the selection product overflowed the cap and `entries` is
    /// only a prefix; the verdict is then withheld.
    pub truncated: bool,
    /// Tolerance the verdict was taken at.
    pub tol: f64,
    /// True when every enumerated selection satisfies its stationarity
    /// system, complementarity holds, and the point is feasible, all at
    /// `tol`.
    pub stationary: bool,
}

const KKT_PG_ITERS: usize = 500;
const CONE_TERNARY_ITERS: usize = 160;

/// `lam * b` with the convention that a zero factor annihilates an infinite
/// bound (the scaled interval at `lam = 0` is the origin).
fn scale_bound(lam: f64, b: f64) -> f64 {
    if lam == 0.0 || b == 0.0 {
        0.0
    } else {
        lam * b
    }
}

/// Euclidean projection onto the unit simplex `{θ ≥ 0, Σθ = 1}`.
fn project_unit_simplex(v: &mut [f64]) {
    if v.is_empty() {
        return;
    }
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut shift = 0.0;
    for (k, &uk) in u.iter().enumerate() {
        cumsum += uk;
        let candidate = (cumsum - 1.0) / (k as f64 + 1.0);
        if uk - candidate > 0.0 {
            shift = candidate;
        }
    }
    for c in v.iter_mut() {
        *c = (*c - shift).max(0.0);
    }
}

/// Euclidean projection onto `{(λ, t) : λ ≥ 0, λ·lo ≤ t ≤ λ·hi}`.
///
/// For fixed `λ` the best `t` is a clamp, and the resulting section
/// distance is strictly convex in `λ`, so a ternary search over a safe
/// bracket finds the joint projection.
fn project_scaled_interval(
    lam_hat: f64,
    t_hat: &[f64],
    lo: &[f64],
    hi: &[f64],
) -> (f64, Vec<f64>) {
    let clamp_at = |lam: f64, c: usize| -> f64 {
        t_hat[c]
            .max(scale_bound(lam, lo[c]))
            .min(scale_bound(lam, hi[c]))
    };
    let section = |lam: f64| -> f64 {
        let mut d2 = (lam - lam_hat) * (lam - lam_hat);
        for c in 0..t_hat.len() {
            let t = clamp_at(lam, c);
            d2 += (t_hat[c] - t) * (t_hat[c] - t);
        }
        d2
    };
    // The minimizer is within the section distance of the anchor, so this
    // bracket always contains it.
    let anchor = lam_hat.max(0.0);
    let mut a = 0.0;
    let mut b = anchor + section(anchor).sqrt() + 1.0;
    for _ in 0..CONE_TERNARY_ITERS {
        let m1 = a + (b - a) / 3.0;
        let m2 = b - (b - a) / 3.0;
        if section(m1) <= section(m2) {
            b = m2;
        } else {
            a = m1;
        }
    }
    let lam = 0.5 * (a + b);
    let t = (0..t_hat.len()).map(|c| clamp_at(lam, c)).collect();
    (lam, t)
}

/// One variable block of the stationarity least-squares problem, together
/// with its contribution to the inclusion expression.
enum VarBlock {
    /// Componentwise interval (arms may be infinite); contributes the
    /// variable itself. Used for `∂zeta0` and for box-set normal cones.
    Interval { lo: Vec<f64>, hi: Vec<f64> },
    /// Convex hull of fixed vertices; the variable is the weight vector on
    /// the unit simplex; contributes `Σ_j θ_j v_j`.
    Simplex { verts: Vec<Vec<f64>> },
    /// A constraint whose nonsmooth part is identically zero: the single
    /// variable `λ ≥ 0` contributes `λ·g`.
    Ray { cons: usize, g: Vec<f64> },
    /// A constraint with an interval descriptor: variable `(λ, t)` in the
    /// cone `λ ≥ 0, λ·lo ≤ t ≤ λ·hi`, contributing `λ·g + t`.
    ScaledInterval {
        cons: usize,
        g: Vec<f64>,
        lo: Vec<f64>,
        hi: Vec<f64>,
    },
    /// A constraint with a vertex descriptor: variable `θ ≥ 0` with
    /// `λ = Σθ_j`, contributing `Σ_j θ_j (g + v_j)`.
    ScaledVertices {
        cons: usize,
        g: Vec<f64>,
        verts: Vec<Vec<f64>>,
    },
}

impl VarBlock {
    fn len(&self) -> usize {
        match self {
            VarBlock::Interval { lo, .. } => lo.len(),
            VarBlock::Simplex { verts } => verts.len(),
            VarBlock::Ray { .. } => 1,
            VarBlock::ScaledInterval { lo, .. } => 1 + lo.len(),
            VarBlock::ScaledVertices { verts, .. } => verts.len(),
        }
    }

    /// Sum of squared column norms of this block's linear map — a Frobenius
    /// contribution bounding its spectral norm.
    fn column_norm_sq(&self) -> f64 {
        match self {
            VarBlock::Interval { lo, .. } => lo.len() as f64,
            VarBlock::Simplex { verts } => verts.iter().map(|v| dot(v, v)).sum(),
            VarBlock::Ray { g, .. } => dot(g, g),
            VarBlock::ScaledInterval { g, lo, .. } => dot(g, g) + lo.len() as f64,
            VarBlock::ScaledVertices { g, verts, .. } => verts
                .iter()
                .map(|v| g.iter().zip(v).map(|(a, b)| (a + b) * (a + b)).sum::<f64>())
                .sum(),
        }
    }

    /// `r += M_block · z`.
    fn contribute(&self, z: &[f64], r: &mut [f64]) {
        match self {
            VarBlock::Interval { .. } => axpy(r, 1.0, z),
            VarBlock::Simplex { verts } => {
                for (j, v) in verts.iter().enumerate() {
                    axpy(r, z[j], v);
                }
            }
            VarBlock::Ray { g, .. } => axpy(r, z[0], g),
            VarBlock::ScaledInterval { g, .. } => {
                axpy(r, z[0], g);
                axpy(r, 1.0, &z[1..]);
            }
            VarBlock::ScaledVertices { g, verts, .. } => {
                for (j, v) in verts.iter().enumerate() {
                    axpy(r, z[j], g);
                    axpy(r, z[j], v);
                }
            }
        }
    }

    /// `out = M_blockᵀ · r`.
    fn adjoint(&self, r: &[f64], out: &mut [f64]) {
        match self {
            VarBlock::Interval { .. } => out.copy_from_slice(r),
            VarBlock::Simplex { verts } => {
                for (j, v) in verts.iter().enumerate() {
                    out[j] = dot(v, r);
                }
            }
            VarBlock::Ray { g, .. } => out[0] = dot(g, r),
            VarBlock::ScaledInterval { g, .. } => {
                out[0] = dot(g, r);
                out[1..].copy_from_slice(r);
            }
            VarBlock::ScaledVertices { g, verts, .. } => {
                for (j, v) in verts.iter().enumerate() {
                    out[j] = dot(g, r) + dot(v, r);
                }
            }
        }
    }

    fn project(&self, z: &mut [f64]) {
        match self {
            VarBlock::Interval { lo, hi } => {
                for c in 0..z.len() {
                    z[c] = z[c].max(lo[c]).min(hi[c]);
                }
            }
            VarBlock::Simplex { .. } => project_unit_simplex(z),
            VarBlock::Ray { .. } => z[0] = z[0].max(0.0),
            VarBlock::ScaledInterval { lo, hi, .. } => {
                let (lam, t) = project_scaled_interval(z[0], &z[1..], lo, hi);
                z[0] = lam;
                z[1..].copy_from_slice(&t);
            }
            VarBlock::ScaledVertices { .. } => {
                for c in z.iter_mut() {
                    *c = c.max(0.0);
                }
            }
        }
    }

    /// The constraint multiplier this block carries, if any.
    fn multiplier(&self, z: &[f64]) -> Option<(usize, f64)> {
        match self {
            VarBlock::Interval { .. } | VarBlock::Simplex { .. } => None,
            VarBlock::Ray { cons, .. } | VarBlock::ScaledInterval { cons, .. } => {
                Some((*cons, z[0]))
            }
            VarBlock::ScaledVertices { cons, .. } => Some((*cons, z.iter().sum())),
        }
    }
}

/// Block for the unit-weight term `v0 ∈ ∂zeta0(x)`.
fn unit_block(
    f: &NonsmoothConvexFn,
    x: &[f64],
    location: &str,
) -> Result<Option<VarBlock>, KKTError> {
    if f.is_zero {
        return Ok(None);
    }
    match &f.subdiff {
        Some(SubdiffDescriptor::Box { bounds }) => {
            let (lo, hi) = bounds(x);
            Ok(Some(VarBlock::Interval { lo, hi }))
        }
        Some(SubdiffDescriptor::Vertices { vertices }) => Ok(Some(VarBlock::Simplex {
            verts: vertices(x),
        })),
        None => Err(KKTError::MissingDescriptor {
            location: location.to_string(),
        }),
    }
}

/// Block for one active constraint's scaled term `λ_i (g_i + ∂zeta_i(x))`.
fn scaled_block(
    f: &NonsmoothConvexFn,
    x: &[f64],
    cons: usize,
    g: Vec<f64>,
    location: &str,
) -> Result<VarBlock, KKTError> {
    if f.is_zero {
        return Ok(VarBlock::Ray { cons, g });
    }
    match &f.subdiff {
        Some(SubdiffDescriptor::Box { bounds }) => {
            let (lo, hi) = bounds(x);
            Ok(VarBlock::ScaledInterval { cons, g, lo, hi })
        }
        Some(SubdiffDescriptor::Vertices { vertices }) => Ok(VarBlock::ScaledVertices {
            cons,
            g,
            verts: vertices(x),
        }),
        None => Err(KKTError::MissingDescriptor {
            location: location.to_string(),
        }),
    }
}

/// Normal-cone block of a box feasible set at `x`: per coordinate the arm is
/// `(−∞, 0]` at the lower bound, `[0, +∞)` at the upper bound, `{0}` in the
/// interior, and the whole line on a pinned coordinate.
fn normal_cone_block(x: &[f64], lo: &[f64], hi: &[f64]) -> VarBlock {
    let mut wlo = vec![0.0; x.len()];
    let mut whi = vec![0.0; x.len()];
    for c in 0..x.len() {
        if lo[c].is_finite() && x[c] - lo[c] <= 1e-12 * (1.0 + lo[c].abs()) {
            wlo[c] = f64::NEG_INFINITY;
        }
        if hi[c].is_finite() && hi[c] - x[c] <= 1e-12 * (1.0 + hi[c].abs()) {
            whi[c] = f64::INFINITY;
        }
    }
    VarBlock::Interval { lo: wlo, hi: whi }
}

/// The stacked least-squares problem `min ‖base + Σ_b M_b z_b‖` over the
/// blocks' constraint sets.
struct StackedProblem {
    blocks: Vec<VarBlock>,
    offsets: Vec<usize>,
    total: usize,
    dim: usize,
}

impl StackedProblem {
    fn new(blocks: Vec<VarBlock>, dim: usize) -> Self {
        let mut offsets = Vec::with_capacity(blocks.len());
        let mut total = 0;
        for b in &blocks {
            offsets.push(total);
            total += b.len();
        }
        Self {
            blocks,
            offsets,
            total,
            dim,
        }
    }

    fn residual(&self, z: &[f64], base: &[f64]) -> Vec<f64> {
        let mut r = base.to_vec();
        for (b, &off) in self.blocks.iter().zip(&self.offsets) {
            b.contribute(&z[off..off + b.len()], &mut r);
        }
        r
    }

    fn project(&self, z: &mut [f64]) {
        for (b, &off) in self.blocks.iter().zip(&self.offsets) {
            b.project(&mut z[off..off + b.len()]);
        }
    }

    /// Projected gradient from the zero start (all multipliers at 0), with a
    /// fixed step that is descent-safe by the Frobenius bound.
    fn solve(&self, base: &[f64]) -> (Vec<f64>, f64) {
        let frobenius_sq: f64 = self.blocks.iter().map(|b| b.column_norm_sq()).sum();
        let step = 1.0 / (2.0 * frobenius_sq).max(1e-12);
        let mut z = vec![0.0; self.total];
        self.project(&mut z);
        let mut grad_block = vec![0.0; self.total];
        for _ in 0..KKT_PG_ITERS {
            let r = self.residual(&z, base);
            for (b, &off) in self.blocks.iter().zip(&self.offsets) {
                b.adjoint(&r, &mut grad_block[off..off + b.len()]);
            }
            let mut z_next = z.clone();
            for c in 0..self.total {
                z_next[c] -= step * 2.0 * grad_block[c];
            }
            self.project(&mut z_next);
            let moved = dist(&z_next, &z);
            z = z_next;
            if moved <= 1e-15 * (1.0 + norm(&z)) {
                break;
            }
        }
        let r = self.residual(&z, base);
        let _ = self.dim;
        (z, norm(&r))
    }
}

/// Best multipliers and stationarity residual for the selection `(j0, jj)`
/// at `x`.
///
/// Minimizes the norm of the inclusion expression over `λ ≥ 0` (nonzero only
/// on constraints with value 0 at `x`), subdifferential elements described
/// by each nonsmooth part's descriptor, and the feasible set's normal cone.
/// Returns the full multiplier vector (zeros off the active set) and the
/// achieved residual norm.
///
/// Supports whole-space and box feasible sets, and nonsmooth parts that are
/// identically zero or carry an interval/vertex descriptor; anything else is
/// a structured error.
pub fn kkt_residual(
    prog: &DCProgram,
    x: &[f64],
    j0: usize,
    jj: &[PieceSel],
) -> Result<(Vec<f64>, f64), KKTError> {
    let index = MultiIndex {
        j0,
        jj: jj.to_vec(),
    };
    prog.check_index(&index)?;

    let mut base = prog.phi0.grad(x);
    axpy(&mut base, -1.0, &prog.psi0.pieces[j0].grad(x));

    let mut blocks = Vec::new();
    if let Some(b) = unit_block(&prog.zeta0, x, "objective nonsmooth part")? {
        blocks.push(b);
    }
    let active = prog.classify_constraints(x, ACTIVATION_TOL).zero;
    for &i in &active {
        let c = &prog.constraints[i];
        let mut g = c.phi.grad(x);
        axpy(&mut g, -1.0, &c.psi.piece_grad(&index.jj[i], x));
        blocks.push(scaled_block(
            &c.zeta,
            x,
            i,
            g,
            &format!("constraint {i} nonsmooth part"),
        )?);
    }
    match &prog.set {
        ConvexSet::WholeSpace => {}
        ConvexSet::Box { lo, hi } => blocks.push(normal_cone_block(x, lo, hi)),
        ConvexSet::Custom { .. } => {
            return Err(KKTError::UnsupportedSet {
                kind: prog.set.kind_label().to_string(),
            })
        }
    }

    let problem = StackedProblem::new(blocks, x.len());
    let (z, residual) = problem.solve(&base);
    let mut lambda = vec![0.0; prog.constraints.len()];
    for (b, &off) in problem.blocks.iter().zip(&problem.offsets) {
        if let Some((i, l)) = b.multiplier(&z[off..off + b.len()]) {
            lambda[i] = l.max(0.0);
        }
    }
    Ok((lambda, residual))
}

/// Runs the multiplier search for every active selection at `x` and collects
/// the results with an overall verdict at `tol`.
///
/// Selections are enumerated with the activation tolerance; at most
/// `pair_cap` are assessed, and an overflow withholds the verdict.
pub fn kkt_report(
    prog: &DCProgram,
    x: &[f64],
    tol: f64,
    pair_cap: usize,
) -> Result<KKTReport, KKTError> {
    let enumeration = prog.enumerate_pairs(x, ACTIVATION_TOL, pair_cap);
    let cvals = prog.constraint_values(x);
    let mut entries = Vec::with_capacity(enumeration.indices.len());
    let mut worst_stationarity: f64 = 0.0;
    let mut worst_complementarity: f64 = 0.0;
    for index in enumeration.indices {
        let (lambda, stationarity) = kkt_residual(prog, x, index.j0, &index.jj)?;
        let complementarity = lambda
            .iter()
            .zip(&cvals)
            .fold(0.0f64, |acc, (l, c)| acc.max((l * c).abs()));
        worst_stationarity = worst_stationarity.max(stationarity);
        worst_complementarity = worst_complementarity.max(complementarity);
        entries.push(KKTEntry {
            index,
            lambda,
            stationarity,
            complementarity,
        });
    }
    let feasibility = feasibility_violation(prog, x);
    let stationary = !enumeration.truncated
        && worst_stationarity <= tol
        && worst_complementarity <= tol
        && feasibility <= tol;
    Ok(KKTReport {
        entries,
        worst_stationarity,
        worst_complementarity,
        feasibility,
        truncated: enumeration.truncated,
        tol,
        stationary,
    })
}
