//! Symbolic algebra of polynomial operators in `q_i`, `p_i` under
//! `[q_i, p_j] = i δ_ij`, with real Lie closures and the two-site
//! propagation criterion.

mod closure;
mod monomial;
mod poly;
mod text;

pub use closure::{
    algebraic_propagation_check, lie_closure, local_generators, pair_generators, ClosureOptions,
    LieBasis, PropagationResult, Verdict, INDEPENDENCE_TOL,
};
pub use monomial::Monomial;
pub use poly::{Factor, PolyOp, Role, ROLE_TOL};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WeylError {
    #[error("mode index {mode} out of range for {mode_count} modes")]
    ModeOutOfRange { mode: usize, mode_count: usize },
    #[error("mode count mismatch: {left} vs {right}")]
    ModeCountMismatch { left: usize, right: usize },
    #[error("expected a {expected:?} operator, found {found:?}")]
    RoleMismatch { expected: Role, found: Role },
    #[error("cannot parse polynomial `{input}`: {reason}")]
    Parse { input: String, reason: String },
    #[error("lie closure needs at least one generator")]
    EmptyGenerators,
    #[error("closure caps must be at least 1 (degree cap {degree_cap}, dimension cap {dim_cap})")]
    InvalidCaps { degree_cap: u32, dim_cap: usize },
}
