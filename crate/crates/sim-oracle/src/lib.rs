//! Monte Carlo estimation of trace-event probabilities and an exact
//! finite-state oracle over product chains, used both as the reported
//! "simulation" column and as desk-scale ground truth for validating
//! certified bounds and martingale drift.

mod chain;
mod drift;
mod sim;

pub use chain::{
    build_finite_chain, consecutive_miss_at_least, gauss_solve, gauss_solve_multi, tarjan_sccs,
    visit_count_at_least, ChainEvent, ChainState, FiniteChain, VarDomain, DEFAULT_STATE_CAP,
};
pub use drift::{
    expected_successor_value, gauss_legendre, martingale_check, DriftConfig, DriftReport,
};
pub use sim::{estimate_csv_row, simulate_event, Estimate, SimConfig, SimEvent};

use thiserror::Error;

#[derive(Error, Debug)]
pub enum OracleError {
    #[error("continuous distribution not enumerable: {0}")]
    ContinuousDistribution(String),
    #[error("domain escape: {var} = {value} ({context})")]
    DomainEscape {
        var: String,
        value: String,
        context: String,
    },
    #[error("state-count cap {0} exceeded")]
    StateCap(usize),
    #[error("non-absorbing event specification: {0}")]
    NonAbsorbingEvent(String),
    #[error("no-demonic violation at {loc}: {count} transitions enabled")]
    Demonic { loc: String, count: usize },
    #[error("bad domain: {0}")]
    BadDomain(String),
    #[error("internal: {0}")]
    Internal(String),
}
