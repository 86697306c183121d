//! Core model layer: probabilistic transition systems with guarded
//! probabilistic forks, executable semantics, location invariants, and
//! exact distribution moments.
//!
//! Probabilities and moments are carried as exact rationals wherever the
//! inputs are rational; floating point appears only in simulation and in
//! the LP backend.

pub mod dist;
pub mod expr;
pub mod pts;
pub mod text;

pub use dist::{Distribution, MomentTable};
pub use expr::{
    format_rat, monomials_up_to, negate_constraint, predicate_holds_f64, predicate_holds_rat,
    rat, rat_int, rat_to_f64, BoolExpr, Constraint, Monomial, Poly, Predicate, Rat, Sense,
};
pub use pts::{Branch, Fork, InitSpec, InitValue, LocId, Pts, PtsState, Transition};

use thiserror::Error;

#[derive(Error, Debug)]
pub enum PtsError {
    #[error("parse error at {line}:{col}: {msg}")]
    Parse { line: usize, col: usize, msg: String },
    #[error("malformed model: {0}")]
    Malformed(String),
    #[error("bad distribution: {0}")]
    BadDistribution(String),
    #[error("fork probabilities of transition {transition} sum to {total}, expected 1")]
    ForkProbSum { transition: usize, total: String },
    #[error("no-demonic violation at location {loc}: {kind}")]
    DemonicViolation { loc: String, kind: String },
    #[error("terminal state has no transition")]
    TerminalHasNoTransition,
    #[error("unsupported: {0}")]
    Unsupported(String),
}
