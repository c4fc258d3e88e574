//! Problem families: the hand-checkable 1-D example, seeded random
//! quadratic difference-of-convex programs, and seeded sparse-recovery
//! instances, plus their on-disk serialization ([`instance`]).
//!
//! Every generator is a pure function of its arguments: the same seed
//! produces bit-identical data on every platform, because all randomness
//! flows through a counter-based generator and all linear algebra used
//! during generation is deterministic.

mod instance;

pub use instance::{
    load_instance, load_instance_from_str, save_instance, Instance, InstanceError,
};

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::linalg::{dot, matvec, matvec_transpose, quad_form};
use crate::model::{
    Constraint, ConvexSet, CoordMax, DCProgram, MaxSmoothFn, NonsmoothConvexFn, PsiForm,
    SmoothConvexFn,
};

/// Standard deviation of the measurement noise in sparse-recovery
/// instances.
const NOISE_STD: f64 = 1e-3;

/// Eigenvalues of generated quadratic forms are uniform on `[0, EIG_SPAN)`.
const EIG_SPAN: f64 = 20.0;

/// A generation request with inconsistent shape parameters.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum GenError {
    #[error("sparsity level k = {k} must satisfy 1 <= k <= n = {n}")]
    SparsityRange { k: usize, n: usize },
}

/// The 1-D program `min |x| + x²/2 − max{6x + x²/2, x + x²/2}` subject to
/// `2x − |x| ≤ 0` over the whole line. Its subproblems solve in closed form,
/// which makes it the reference case for regression tests: the unconstrained
/// shape rewards large positive `x` while the constraint pins the feasible
/// set to `x ≤ 0`, so every solver layer can be checked against hand
/// arithmetic.
pub fn worked_example_1d() -> DCProgram {
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

/// Data of one quadratic form `x ↦ xᵀ M x + vᵀ x + c` with `M` symmetric
/// positive semidefinite, stored dense row-major alongside its exact largest
/// eigenvalue (known by construction, so the gradient Lipschitz constant
/// `2·lam_max` carries no estimation error).
#[derive(Clone, Debug, PartialEq)]
pub struct QuadData {
    /// Row-major symmetric PSD matrix, `n·n` entries.
    pub mat: Vec<f64>,
    /// Largest eigenvalue of `mat`.
    pub lam_max: f64,
    /// Linear coefficient vector, `n` entries.
    pub vec: Vec<f64>,
    /// Constant offset.
    pub constant: f64,
}

impl QuadData {
    /// Direct evaluation from the stored data; used to cross-check oracles.
    pub fn value(&self, n: usize, x: &[f64]) -> f64 {
        quad_form(&self.mat, n, x) + dot(&self.vec, x) + self.constant
    }

    /// Packages the data as a smooth convex oracle with gradient
    /// `2Mx + v` and exact curvature constant `2·lam_max`.
    pub fn smooth_fn(&self, n: usize) -> SmoothConvexFn {
        let (mv, vv, c) = (self.mat.clone(), self.vec.clone(), self.constant);
        let (mg, vg) = (self.mat.clone(), self.vec.clone());
        SmoothConvexFn::new(
            Arc::new(move |x: &[f64]| quad_form(&mv, n, x) + dot(&vv, x) + c),
            Arc::new(move |x: &[f64]| {
                let mut g = matvec(&mg, n, n, x);
                for (gi, vi) in g.iter_mut().zip(&vg) {
                    *gi = 2.0 * *gi + vi;
                }
                g
            }),
            2.0 * self.lam_max,
        )
    }
}

/// One constraint of a quadratic program: convex part minus a max of two
/// quadratic pieces.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadConstraintData {
    pub convex: QuadData,
    pub pieces: [QuadData; 2],
}

/// Full data of a random quadratic program: minimize a PSD quadratic
/// subject to two constraints of the form
/// `quad_i(x) − max{piece_i1(x), piece_i2(x)} ≤ 0` over the whole space.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadraticDCSpec {
    pub n: usize,
    pub seed: u64,
    pub objective: QuadData,
    pub constraints: [QuadConstraintData; 2],
}

impl QuadraticDCSpec {
    /// Builds the runnable program from the stored matrices.
    pub fn to_program(&self) -> DCProgram {
        let n = self.n;
        let constraints = self
            .constraints
            .iter()
            .map(|c| Constraint {
                phi: c.convex.smooth_fn(n),
                zeta: NonsmoothConvexFn::zero(),
                psi: PsiForm::Joint(MaxSmoothFn::new(vec![
                    c.pieces[0].smooth_fn(n),
                    c.pieces[1].smooth_fn(n),
                ])),
            })
            .collect();
        DCProgram {
            dim: n,
            phi0: self.objective.smooth_fn(n),
            zeta0: NonsmoothConvexFn::zero(),
            psi0: MaxSmoothFn::zero(),
            constraints,
            set: ConvexSet::WholeSpace,
        }
    }
}

/// Draws `n` independent standard normals.
fn draw_normal_vec(rng: &mut ChaCha20Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

/// A reproducible standard-normal vector, for seeded starting points.
pub fn seeded_normal_vec(seed: u64, n: usize) -> Vec<f64> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    draw_normal_vec(&mut rng, n)
}

/// Orthonormalizes the columns of a square row-major matrix via QR, with
/// column signs fixed so the factorization (and hence the draw) is unique:
/// column `j` is negated when `R[j,j] < 0`.
fn orthonormal_columns(raw: &[f64], n: usize) -> nalgebra::DMatrix<f64> {
    let qr = nalgebra::DMatrix::from_row_slice(n, n, raw).qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            for i in 0..n {
                q[(i, j)] = -q[(i, j)];
            }
        }
    }
    q
}

/// Draws one PSD quadratic form: eigenvalues uniform on `[0, 20)`, then an
/// orthonormal eigenbasis from a QR-factored Gaussian matrix. The product
/// `U·Diag(d)·Uᵀ` is symmetrized entry-by-entry so the stored matrix is
/// exactly symmetric, and the exact largest eigenvalue rides along.
fn draw_psd(rng: &mut ChaCha20Rng, n: usize) -> (Vec<f64>, f64) {
    let d: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() * EIG_SPAN).collect();
    let raw = draw_normal_vec(rng, n * n);
    let u = orthonormal_columns(&raw, n);
    let mut m = nalgebra::DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        for r in 0..n {
            for c in 0..n {
                m[(r, c)] += u[(r, j)] * d[j] * u[(c, j)];
            }
        }
    }
    let mut out = vec![0.0; n * n];
    for r in 0..n {
        for c in 0..n {
            out[r * n + c] = 0.5 * (m[(r, c)] + m[(c, r)]);
        }
    }
    let lam_max = d.iter().cloned().fold(0.0, f64::max);
    (out, lam_max)
}

/// Generates a random quadratic program of dimension `n ≥ 2` from a seed.
///
/// Draw order is part of the format and never changes: the seven matrices
/// (objective, two constraint convex parts, four constraint pieces), then
/// the seven linear vectors in the same order, then the six constraint
/// constants. Reordering any draw would silently change every seeded
/// instance in circulation.
pub fn gen_quadratic_dc(n: usize, seed: u64) -> (DCProgram, QuadraticDCSpec) {
    assert!(n >= 2, "quadratic instances need n >= 2, got {n}");
    let mut rng = ChaCha20Rng::seed_from_u64(seed);

    let mats: Vec<(Vec<f64>, f64)> = (0..7).map(|_| draw_psd(&mut rng, n)).collect();
    let vecs: Vec<Vec<f64>> = (0..7).map(|_| draw_normal_vec(&mut rng, n)).collect();
    let cs: Vec<f64> = (0..6).map(|_| rng.sample(StandardNormal)).collect();

    let mut mats = mats.into_iter();
    let mut vecs = vecs.into_iter();
    let mut quad = |constant: f64| -> QuadData {
        let (mat, lam_max) = mats.next().expect("matrix draw count");
        QuadData {
            mat,
            lam_max,
            vec: vecs.next().expect("vector draw count"),
            constant,
        }
    };

    let objective = quad(0.0);
    let conv0 = quad(cs[0]);
    let conv1 = quad(cs[1]);
    let p00 = quad(cs[2]);
    let p01 = quad(cs[3]);
    let p10 = quad(cs[4]);
    let p11 = quad(cs[5]);
    let spec = QuadraticDCSpec {
        n,
        seed,
        objective,
        constraints: [
            QuadConstraintData {
                convex: conv0,
                pieces: [p00, p01],
            },
            QuadConstraintData {
                convex: conv1,
                pieces: [p10, p11],
            },
        ],
    };
    (spec.to_program(), spec)
}

/// Full data of a sparse-recovery instance: minimize `‖Ax − b‖²` subject to
/// the sparsity surrogate `‖x‖₁ − Σᵢ max{xᵢ − s, 0, −xᵢ − s} ≤ s·K`, where
/// `A` has orthonormal rows and `b = A·x* + noise` for a planted `K`-sparse
/// sign vector `x*`.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseRecoverySpec {
    pub m: usize,
    pub n: usize,
    pub k: usize,
    /// Knot of the per-coordinate surrogate pieces.
    pub s: f64,
    pub seed: u64,
    /// Measurement matrix, row-major `m·n`.
    pub a: Vec<f64>,
    /// Observed measurements, length `m`.
    pub b: Vec<f64>,
    /// Planted sparse signal, length `n`, entries in `{−1, 0, 1}`.
    pub x_star: Vec<f64>,
}

impl SparseRecoverySpec {
    /// Builds the runnable program. The constraint keeps its concave part in
    /// separable per-coordinate form (`n` independent three-piece maxes)
    /// rather than expanding the `3ⁿ` joint pieces, so active-piece
    /// enumeration stays linear in `n`.
    pub fn to_program(&self) -> DCProgram {
        let (m, n, s) = (self.m, self.n, self.s);
        let (av, bv) = (self.a.clone(), self.b.clone());
        let (ag, bg) = (self.a.clone(), self.b.clone());
        let phi0 = SmoothConvexFn::new(
            Arc::new(move |x: &[f64]| {
                let r = matvec(&av, m, n, x);
                r.iter().zip(&bv).map(|(ri, bi)| (ri - bi) * (ri - bi)).sum()
            }),
            Arc::new(move |x: &[f64]| {
                let mut r = matvec(&ag, m, n, x);
                for (ri, bi) in r.iter_mut().zip(&bg) {
                    *ri -= bi;
                }
                let mut g = matvec_transpose(&ag, m, n, &r);
                for gi in g.iter_mut() {
                    *gi *= 2.0;
                }
                g
            }),
            // A has orthonormal rows, so ∇²(‖Ax−b‖²) = 2AᵀA has top
            // eigenvalue exactly 2.
            2.0,
        );
        let coords = (0..n)
            .map(|coord| CoordMax {
                coord,
                pieces: vec![(1.0, -s), (0.0, 0.0), (-1.0, -s)],
            })
            .collect();
        DCProgram {
            dim: n,
            phi0,
            zeta0: NonsmoothConvexFn::zero(),
            psi0: MaxSmoothFn::zero(),
            constraints: vec![Constraint {
                phi: SmoothConvexFn::affine(vec![0.0; n], -s * self.k as f64),
                zeta: NonsmoothConvexFn::l1(),
                psi: PsiForm::SeparableSum(coords),
            }],
            set: ConvexSet::WholeSpace,
        }
    }
}

/// Generates a sparse-recovery instance from a seed.
///
/// Draw order is part of the format: the `k`-element support (index sample,
/// sorted ascending), one sign bit per support index in ascending order, the
/// `m·n` Gaussian matrix row-major, then `m` noise draws. The measurement
/// matrix is the transpose of the Q factor of the Gaussian's transpose, so
/// its rows are exactly orthonormal up to factorization error.
pub fn gen_sparse_recovery(
    m: usize,
    n: usize,
    k: usize,
    s: f64,
    seed: u64,
) -> Result<(DCProgram, SparseRecoverySpec), GenError> {
    if k < 1 || k > n {
        return Err(GenError::SparsityRange { k, n });
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);

    let mut support = rand::seq::index::sample(&mut rng, n, k).into_vec();
    support.sort_unstable();
    let mut x_star = vec![0.0; n];
    for &i in &support {
        x_star[i] = if rng.gen::<bool>() { 1.0 } else { -1.0 };
    }

    let raw = draw_normal_vec(&mut rng, m * n);
    // Thin QR of the n×m transpose gives m orthonormal columns; transposing
    // back yields a row-orthonormal A. Column signs are fixed by the R
    // diagonal so the factorization is unique.
    let tall = nalgebra::DMatrix::from_row_slice(m, n, &raw).transpose();
    let qr = tall.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..m {
        if r[(j, j)] < 0.0 {
            for i in 0..n {
                q[(i, j)] = -q[(i, j)];
            }
        }
    }
    let mut a = vec![0.0; m * n];
    for row in 0..m {
        for col in 0..n {
            a[row * n + col] = q[(col, row)];
        }
    }

    let mut b = matvec(&a, m, n, &x_star);
    for bi in b.iter_mut() {
        let xi: f64 = rng.sample(StandardNormal);
        *bi += NOISE_STD * xi;
    }

    let spec = SparseRecoverySpec {
        m,
        n,
        k,
        s,
        seed,
        a,
        b,
        x_star,
    };
    Ok((spec.to_program(), spec))
}
