//! Control optimization over basis coefficients.

pub mod basis;
pub mod lbfgs;
pub mod objective;
pub mod pso;

pub use basis::{Basis, WALL_MARGIN};
pub use lbfgs::{
    check_convergence, lbfgs_minimize, lbfgs_minimize_observed, IterRecord, LbfgsResult, LbfgsSettings,
    StopReason,
};
pub use objective::{fd_gradient, Counter, EvalCounts, FnObjective, FullEvaluation, MeltObjective, Objective};
pub use pso::{pso_minimize, EvalRecord, Generation, PsoResult, PsoSettings, SwarmPhase};
