//! Bundled reference solver: dense LP and convex QP subsolvers plus a
//! deterministic branch-and-bound over binaries, SOS1 sets, indicator
//! implications and complementarity disjunctions.

pub mod bnb;
pub mod dual;
pub mod lp;
pub mod qp;

pub use bnb::{
    check_bigm_tightness, compute_gap, solve_bnb, solve_reformulation, BigMSide, SolveOptions,
    SolveResult, SolveStatus, TraceEvent, Warning, GAP_FORMULA,
};
pub use lp::{LinearProgram, LpRow, LpSolution, LpStatus};
pub use qp::{solve_convex, ConvexResiduals, ConvexSolution, ConvexStatus, ConvexSubproblem};
