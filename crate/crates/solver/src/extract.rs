//! Certificate extraction: round the floating-point LP solution to
//! rationals with bounded denominators, then replay every elimination
//! identity in exact arithmetic. A solution that does not reproduce its
//! identities within 1e-9 per coefficient is rejected rather than trusted.

use std::collections::BTreeMap;

use certgen::{CertificateProblem, ConcreteCertificate, SymId};
use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use pts_core::{rat, InitValue, Poly, Rat};
use serde::{Deserialize, Serialize};

use crate::eliminate::EliminatedEntailment;
use crate::lp::Solution;
use crate::SolveError;

/// Denominator cap used when rounding LP values back to rationals.
pub const ROUND_DENOM_CAP: u64 = 1_000_000;

/// Per-coefficient tolerance for the exact replay of elimination
/// identities.
pub fn replay_tolerance() -> Rat {
    rat(1, 1_000_000_000)
}

/// Best rational approximation with denominator at most `max_den`, via
/// continued-fraction convergents. Returns None on non-finite input.
pub fn round_to_rational(x: f64, max_den: u64) -> Option<Rat> {
    if !x.is_finite() {
        return None;
    }
    if x == 0.0 {
        return Some(Rat::zero());
    }
    let negative = x < 0.0;
    let mut rest = x.abs();
    // convergents h/k
    let (mut h0, mut k0) = (BigInt::from(1u8), BigInt::from(0u8));
    let (mut h1, mut k1) = (BigInt::from(rest.floor() as u64), BigInt::from(1u8));
    rest -= rest.floor();
    for _ in 0..64 {
        if rest.abs() < 1e-13 {
            break;
        }
        rest = 1.0 / rest;
        let a = rest.floor();
        if a >= 1e18 {
            break;
        }
        rest -= a;
        let a = BigInt::from(a as u64);
        let h2 = &a * &h1 + &h0;
        let k2 = &a * &k1 + &k0;
        if k2 > BigInt::from(max_den) {
            break;
        }
        h0 = std::mem::replace(&mut h1, h2);
        k0 = std::mem::replace(&mut k1, k2);
    }
    let mut r = Rat::new(h1, k1);
    if negative {
        r = -r;
    }
    Some(r)
}

/// The multiplier assignment that expresses each conclusion as a
/// nonnegative combination of premise products; replaying the combination
/// must reproduce the conclusion coefficient by coefficient.
#[derive(Clone, Debug)]
pub struct EliminationCertificate {
    pub entailments: Vec<ReplayedEntailment>,
    pub max_residual: Rat,
}

#[derive(Clone, Debug)]
pub struct ReplayedEntailment {
    pub label: String,
    /// (multiplier value, premise-product polynomial)
    pub multipliers: Vec<(Rat, Poly)>,
    /// Largest absolute coefficient of conclusion - sum of products.
    pub residual: Rat,
}

/// Replay the identities under a rational assignment.
pub fn replay(
    eliminated: &[EliminatedEntailment],
    assignment: &dyn Fn(SymId) -> Rat,
) -> EliminationCertificate {
    let mut out = Vec::with_capacity(eliminated.len());
    let mut max_residual = Rat::zero();
    for record in eliminated {
        let conclusion = record.conclusion.instantiate(assignment);
        let mut combo = Poly::zero(conclusion.arity());
        let mut multipliers = Vec::with_capacity(record.multipliers.len());
        for (id, product) in &record.multipliers {
            let v = assignment(*id);
            combo = combo.add(&product.scale(&v));
            multipliers.push((v, product.clone()));
        }
        let diff = conclusion.sub(&combo);
        let residual = diff
            .terms()
            .map(|(_, c)| c.abs())
            .max()
            .unwrap_or_else(Rat::zero);
        if residual > max_residual {
            max_residual = residual.clone();
        }
        out.push(ReplayedEntailment {
            label: record.label.clone(),
            multipliers,
            residual,
        });
    }
    EliminationCertificate {
        entailments: out,
        max_residual,
    }
}

/// Round the solution, replay the eliminations exactly, and build the
/// concrete certificate together with its replayed elimination record.
/// Rejects replay mismatches, negative multipliers, and upper-mode levels
/// that do not clear lambda.
pub fn extract_certificate(
    problem: &CertificateProblem,
    eliminated: &[EliminatedEntailment],
    solution: &Solution,
) -> Result<(ConcreteCertificate, EliminationCertificate), SolveError> {
    let tol = replay_tolerance();
    // rational view of the solution
    let mut values: BTreeMap<SymId, Rat> = BTreeMap::new();
    for (i, v) in solution.values.iter().enumerate() {
        let r = round_to_rational(*v, ROUND_DENOM_CAP)
            .ok_or_else(|| SolveError::Numeric(format!("non-finite value for symbol {i}")))?;
        values.insert(SymId(i as u32), r);
    }
    // multipliers must be nonnegative; forgive solver dust
    for record in eliminated {
        for (id, _) in &record.multipliers {
            let v = values.get_mut(id).expect("assigned");
            if v.is_negative() {
                if -v.clone() <= tol {
                    *v = Rat::zero();
                } else {
                    return Err(SolveError::Numeric(format!(
                        "negative multiplier {}",
                        pts_core::format_rat(v)
                    )));
                }
            }
        }
    }
    let assignment = |id: SymId| values.get(&id).cloned().unwrap_or_else(Rat::zero);
    let replayed = replay(eliminated, &assignment);
    if replayed.max_residual > tol {
        let worst = replayed
            .entailments
            .iter()
            .max_by(|a, b| a.residual.cmp(&b.residual))
            .unwrap();
        return Err(SolveError::ReplayMismatch {
            label: worst.label.clone(),
            residual: pts_core::format_rat(&worst.residual),
        });
    }

    let gamma = assignment(problem.family.gamma);
    crate::check_level(problem.mode, &gamma, problem.lambda.as_ref())?;

    let pieces: BTreeMap<(usize, usize, u32), Poly> = problem
        .family
        .pieces
        .iter()
        .map(|(idx, t)| (*idx, t.instantiate(&assignment)))
        .collect();

    // per-state value at a single-point initial support
    let point: Option<Vec<Rat>> = problem
        .psys
        .pts
        .init
        .values
        .iter()
        .map(|v| match v {
            InitValue::Const(c) => Some(c.clone()),
            InitValue::Dist(_) => None,
        })
        .collect();
    let initial_value = point.map(|p| {
        pieces[&(problem.psys.pts.l_init, problem.psys.dra.initial, 0)].eval_rat(&p)
    });

    Ok((
        ConcreteCertificate {
            mode: problem.mode,
            degree: problem.degree,
            k: problem.k,
            alpha: problem.alpha.clone(),
            lambda: problem.lambda.clone(),
            bound: Rat::one() - &gamma,
            gamma,
            initial_value,
            pieces,
        },
        replayed,
    ))
}

/// Serializable certificate dump; `to_certificate` inverts it.
#[derive(Serialize, Deserialize)]
pub struct CertificateDump {
    pub mode: String,
    pub degree: u32,
    pub k: u32,
    pub alpha: Option<f64>,
    pub lambda: Option<f64>,
    pub gamma: f64,
    pub gamma_exact: String,
    pub bound: f64,
    pub status: String,
    pub replay_residual: f64,
    pub initial_value: Option<f64>,
    pub pieces: Vec<PieceDump>,
}

#[derive(Serialize, Deserialize)]
pub struct PieceDump {
    pub location: String,
    pub automaton_state: usize,
    pub counter: u32,
    pub polynomial: String,
    /// Exponent vector per monomial, aligned with `coefficients`.
    pub monomials: Vec<Vec<u16>>,
    pub coefficients: Vec<String>,
}

impl CertificateDump {
    pub fn new(
        cert: &ConcreteCertificate,
        pts: &pts_core::Pts,
        elimination: &EliminationCertificate,
    ) -> CertificateDump {
        CertificateDump {
            mode: cert.mode.name().to_string(),
            degree: cert.degree,
            k: cert.k,
            alpha: cert.alpha.as_ref().map(pts_core::rat_to_f64),
            lambda: cert.lambda.as_ref().map(pts_core::rat_to_f64),
            gamma: pts_core::rat_to_f64(&cert.gamma),
            gamma_exact: pts_core::format_rat(&cert.gamma),
            bound: pts_core::rat_to_f64(&cert.bound),
            status: "replay-validated".into(),
            replay_residual: pts_core::rat_to_f64(&elimination.max_residual),
            initial_value: cert.initial_value.as_ref().map(pts_core::rat_to_f64),
            pieces: cert
                .pieces
                .iter()
                .map(|((loc, q, l), poly)| PieceDump {
                    location: pts.loc_names[*loc].clone(),
                    automaton_state: *q,
                    counter: *l,
                    polynomial: poly.display(&pts.var_names),
                    monomials: poly.terms().map(|(m, _)| m.0.clone()).collect(),
                    coefficients: poly
                        .terms()
                        .map(|(_, c)| pts_core::format_rat(c))
                        .collect(),
                })
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounding_recovers_small_rationals() {
        assert_eq!(round_to_rational(0.5, 1_000_000).unwrap(), rat(1, 2));
        assert_eq!(round_to_rational(-0.25, 1_000_000).unwrap(), rat(-1, 4));
        assert_eq!(
            round_to_rational(1.0 / 3.0, 1_000_000).unwrap(),
            rat(1, 3)
        );
        assert_eq!(round_to_rational(0.0, 10).unwrap(), Rat::zero());
        assert_eq!(round_to_rational(7.0, 10).unwrap(), rat(7, 1));
        // 355/113 approximates pi within the cap
        let r = round_to_rational(std::f64::consts::PI, 10_000).unwrap();
        assert_eq!(r, rat(355, 113));
        assert!(round_to_rational(f64::NAN, 10).is_none());
    }

    #[test]
    fn rounding_respects_denominator_cap() {
        let x = 1234567.0 / 9999991.0;
        let r = round_to_rational(x, 1_000_000).unwrap();
        assert!(r.denom() <= &BigInt::from(1_000_000u64));
        assert!((pts_core::rat_to_f64(&r) - x).abs() < 1e-5);
    }
}
