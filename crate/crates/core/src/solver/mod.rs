//! Galerkin solves, approximate operator and data evaluation, and the
//! adaptive and uniform refinement loops.

mod apply;
mod fmm;
mod config;
mod driver;
mod gmres;
mod rhs_approx;

pub use apply::{apply, ApplyOutput, TreeOperator, K_NORM_BOUND};
pub use config::{GmresConfig, Mode, SolverConfig};
pub use driver::{
    coarse, estimate_residual, solve, solve_galerkin, solve_with_observer, tree_difference, write_history,
    GalerkinSolution, HistoryRecord, ResidualEstimate, SolveResult, Termination, HISTORY_HEADER,
};
pub use gmres::{gmres, GmresOutcome};
pub use rhs_approx::{fit_decay_ratio, RhsApprox, RhsOutput};
