//! Solvers for difference-of-convex programs with difference-of-convex
//! constraints, where every concave part is a pointwise maximum of smooth
//! convex pieces:
//!
//! ```text
//!   minimize   phi0(x) + zeta0(x) - max_j psi0_j(x)
//!   subject to phi_i(x) + zeta_i(x) - max_j psi_ij(x) <= 0,   x in X.
//! ```
//!
//! Two outer methods drive a common inner machinery: a penalty method with
//! geometric weight growth, and an augmented Lagrangian method with hinge
//! multiplier updates and the `max{σρ, ‖λ‖^(1+α)}` weight rule. Each outer
//! step solves its subproblem approximately by successive convex
//! approximation: anchored strongly convex majorants, one per active piece
//! selection, are minimized by a certified convex subsolver until a
//! sufficient-decrease test fails on every active selection.
//!
//! ```no_run
//! use dcopt::problems::worked_example_1d;
//! use dcopt::alm::{al_solve, ALConfig};
//!
//! let prog = worked_example_1d();
//! let report = al_solve(&prog, &ALConfig::default(), &[0.0]).unwrap();
//! println!("final x = {:?}", report.base.x_history.last().unwrap());
//! ```

pub mod bruteforce;
pub(crate) mod linalg;
pub mod majorant;
pub mod model;
pub mod alm;
pub mod diagnostics;
pub mod penalty;
pub mod problems;
pub mod sca;
pub mod subsolve;

pub use majorant::{al_value, majorant_value, penalty_value, MajorantInstance, MeritKind};
pub use model::{
    ConvexSet, DCProgram, MaxSmoothFn, MultiIndex, NonsmoothConvexFn, PieceSel, PsiForm,
    SmoothConvexFn,
};
pub use alm::{
    al_rho_update, al_solve, auxiliary_multipliers, ALConfig, ALFailure, ALReport, AuxEntry,
    AuxTable, multiplier_update,
};
pub use diagnostics::{
    feasibility_violation, kkt_report, kkt_residual, relative_change, KKTEntry, KKTError,
    KKTReport,
};
pub use penalty::{
    penalty_solve, rho_update, OuterError, PenaltyConfig, SCASummary, SolveFailure, SolveReport,
    StopReason,
};
pub use problems::{
    gen_quadratic_dc, gen_sparse_recovery, load_instance, load_instance_from_str, save_instance,
    seeded_normal_vec, worked_example_1d, GenError, Instance, InstanceError, QuadConstraintData,
    QuadData, QuadraticDCSpec, SparseRecoverySpec,
};
pub use sca::{
    sca_solve, verify_inexact_condition, CertifiedPair, Schedule, InexactReport, SCAConfig,
    SCAError, SCAResult,
};
pub use subsolve::{
    solve_certified, solve_with, SubsolveCertificate, SubsolveError, SubsolveMethod,
    SubsolveOutcome,
};
