//! Prolog-style logic substrate: terms, unification, fact bases and queries.

mod factbase;
mod formula;
mod solve;
mod subst;
mod term;

pub use factbase::{Change, FactBase};
pub use formula::{CmpOp, Formula, InferenceRule};
pub use solve::{solve, Solver, DEFAULT_MAX_DEPTH};
pub use subst::{unify, Substitution};
pub use term::{ArithError, Number, Term};

/// Errors from fact-base updates and query evaluation.
#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum LogicError {
    #[error("fact `{0}` is not ground")]
    NonGroundFact(Term),
    #[error("`{0}` cannot be used as a predicate")]
    NotCallable(Term),
    #[error("range restriction violated: variable {var} in `{rule}` does not occur in the body")]
    RangeRestriction { var: String, rule: String },
    #[error("unbound variable {var} in `{goal}`")]
    UnboundInBuiltin { var: String, goal: String },
    #[error("derivation depth limit of {0} exceeded")]
    DepthExceeded(usize),
    #[error("arithmetic error: {0}")]
    Arithmetic(ArithError),
}
