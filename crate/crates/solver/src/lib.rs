//! Back half of certificate synthesis: eliminate the universal quantifiers
//! from entailments via nonnegative-multiplier representations (Farkas for
//! the linear case, Handelman products for polynomial conclusions over
//! polytopic premises), assemble one linear program, solve it, and extract
//! a concrete certificate whose elimination identities replay exactly in
//! rational arithmetic.

mod eliminate;
mod extract;
mod lp;

pub use eliminate::{eliminate, farkas_eliminate, handelman_eliminate, EliminatedEntailment};
pub use extract::{extract_certificate, round_to_rational, CertificateDump, EliminationCertificate};
pub use lp::{
    export_lp_text, solve, ConstraintOp, LinConstraint, LinearProgram, SolveOutcome, Solution,
};

use certgen::{CertificateProblem, SymId, TheoremMode};
use num_traits::Zero;
use pts_core::Rat;
use thiserror::Error;

#[derive(Error, Debug)]
pub enum SolveError {
    #[error("infeasible")]
    Infeasible,
    #[error("unbounded")]
    Unbounded,
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("entailment '{label}' replay residual {residual} exceeds 1e-9")]
    ReplayMismatch { label: String, residual: String },
    #[error("upper-mode level gamma={gamma} does not exceed lambda={lambda}")]
    LevelNotAboveLambda { gamma: String, lambda: String },
    #[error("relaxation degree {relaxation} below conclusion degree {needed}")]
    RelaxationTooLow { relaxation: u32, needed: u32 },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error(transparent)]
    Cert(#[from] certgen::CertError),
}

/// Everything produced by one synthesis run, kept for dumping and checking.
pub struct SynthesisRun {
    pub lp: LinearProgram,
    pub eliminated: Vec<EliminatedEntailment>,
    pub outcome: SolveOutcome,
}

/// Eliminate, assemble, and solve one certificate problem. The returned
/// run holds the LP (for export) and the elimination record (for replay);
/// extraction is a separate step so callers can distinguish solver failure
/// from replay rejection.
pub fn synthesize(
    problem: &CertificateProblem,
    relaxation: u32,
    pool: &mut certgen::SymbolPool,
) -> Result<SynthesisRun, SolveError> {
    let entailments = problem.encode()?;
    let mut constraints: Vec<LinConstraint> = Vec::new();
    let mut eliminated = Vec::new();
    for e in &entailments {
        let (record, eqs) = eliminate(e, pool, relaxation)?;
        constraints.extend(eqs);
        eliminated.push(record);
    }
    // level ordering when an upper-mode lambda is enforced: gamma >=
    // lambda (strictness is checked after extraction)
    if let Some(lambda) = &problem.lambda {
        let mut expr = certgen::Lin::sym(problem.family.gamma);
        expr.constant = -lambda.clone();
        constraints.push(LinConstraint {
            expr,
            op: ConstraintOp::Ge,
            label: "level-order".into(),
        });
    }
    let kappas: Vec<SymId> = eliminated
        .iter()
        .flat_map(|r| r.multipliers.iter().map(|(id, _)| *id))
        .collect();
    let lp = lp::assemble(
        pool,
        problem.family.gamma,
        &kappas,
        problem.mode,
        constraints,
    );
    let outcome = solve(&lp);
    Ok(SynthesisRun {
        lp,
        eliminated,
        outcome,
    })
}

/// Convenience wrapper: synthesize and extract in one call. `Ok` means a
/// replay-validated certificate.
pub fn solve_certificate(
    problem: &CertificateProblem,
    relaxation: u32,
) -> Result<(certgen::ConcreteCertificate, EliminationCertificate, SynthesisRun), SolveError> {
    let mut pool = problem.family.pool.clone();
    let run = synthesize(problem, relaxation, &mut pool)?;
    let solution = match &run.outcome {
        SolveOutcome::Optimal(s) => s.clone(),
        SolveOutcome::Infeasible => return Err(SolveError::Infeasible),
        SolveOutcome::Unbounded => return Err(SolveError::Unbounded),
        SolveOutcome::NumericFailure(m) => return Err(SolveError::Numeric(m.clone())),
    };
    let (cert, elim) = extract_certificate(problem, &run.eliminated, &solution)?;
    Ok((cert, elim, run))
}

/// gamma = lambda carries no bound when a lambda ceiling is enforced.
pub(crate) fn check_level(
    mode: TheoremMode,
    gamma: &Rat,
    lambda: Option<&Rat>,
) -> Result<(), SolveError> {
    if let Some(lambda) = lambda {
        if !mode.is_lower() && gamma <= lambda {
            return Err(SolveError::LevelNotAboveLambda {
                gamma: pts_core::format_rat(gamma),
                lambda: pts_core::format_rat(lambda),
            });
        }
    }
    if gamma < &Rat::zero() {
        return Err(SolveError::Numeric("negative level".into()));
    }
    Ok(())
}
