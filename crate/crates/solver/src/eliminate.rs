//! Quantifier elimination: an entailment `premises >= 0 => conclusion >= 0`
//! is replaced by the polynomial identity
//!
//!   conclusion = sum_i kappa_i * product_i,     kappa_i >= 0
//!
//! where the products range over monomial products of the premise
//! polynomials (the empty product contributes the constant slack). Matching
//! coefficients monomial by monomial yields linear equations over the
//! unknowns. Degree-one premises and conclusion need only the premises
//! themselves (the classical linear case); polynomial conclusions take all
//! products up to the relaxation degree.

use certgen::{Entailment, Lin, SymbolPool, TPoly};
use num_traits::One;
use pts_core::{Monomial, Poly, Rat};

use crate::lp::{ConstraintOp, LinConstraint};
use crate::SolveError;

/// Replay record for one eliminated entailment.
#[derive(Clone, Debug)]
pub struct EliminatedEntailment {
    pub label: String,
    pub premise: Vec<Poly>,
    pub conclusion: TPoly,
    /// Multiplier symbol and the premise product it scales.
    pub multipliers: Vec<(certgen::SymId, Poly)>,
}

/// Dispatch on degree: the linear case goes to the Farkas form, anything
/// else to the Handelman form at the given relaxation degree.
pub fn eliminate(
    e: &Entailment,
    pool: &mut SymbolPool,
    relaxation: u32,
) -> Result<(EliminatedEntailment, Vec<LinConstraint>), SolveError> {
    let premise_degree = e.premise.iter().map(|p| p.degree()).max().unwrap_or(0);
    if premise_degree > 1 {
        return Err(SolveError::Unsupported(format!(
            "entailment '{}' has a nonlinear premise atom",
            e.label
        )));
    }
    if e.conclusion.degree() <= 1 {
        farkas_eliminate(e, pool)
    } else {
        handelman_eliminate(e, pool, relaxation.max(e.conclusion.degree()))
    }
}

/// Linear case: conclusion = kappa_0 + sum_i kappa_i * premise_i.
pub fn farkas_eliminate(
    e: &Entailment,
    pool: &mut SymbolPool,
) -> Result<(EliminatedEntailment, Vec<LinConstraint>), SolveError> {
    if e.conclusion.degree() > 1 || e.premise.iter().any(|p| p.degree() > 1) {
        return Err(SolveError::Unsupported(format!(
            "entailment '{}' is not linear; use the Handelman form",
            e.label
        )));
    }
    let arity = e.conclusion.arity;
    let mut products: Vec<Poly> = vec![Poly::constant(arity, Rat::one())];
    products.extend(e.premise.iter().cloned());
    build_identity(e, products, pool)
}

/// Polynomial case over a polytopic premise: products of premises up to
/// total degree `relaxation`.
pub fn handelman_eliminate(
    e: &Entailment,
    pool: &mut SymbolPool,
    relaxation: u32,
) -> Result<(EliminatedEntailment, Vec<LinConstraint>), SolveError> {
    if e.premise.iter().any(|p| p.degree() > 1) {
        return Err(SolveError::Unsupported(format!(
            "entailment '{}' has a nonlinear premise atom",
            e.label
        )));
    }
    if relaxation < e.conclusion.degree() {
        return Err(SolveError::RelaxationTooLow {
            relaxation,
            needed: e.conclusion.degree(),
        });
    }
    let arity = e.conclusion.arity;
    let mut products: Vec<Poly> = Vec::new();
    let mut exponents = vec![0u32; e.premise.len()];
    enumerate_products(
        &e.premise,
        relaxation,
        0,
        &mut exponents,
        &Poly::constant(arity, Rat::one()),
        &mut products,
    );
    build_identity(e, products, pool)
}

fn enumerate_products(
    premises: &[Poly],
    budget: u32,
    idx: usize,
    exponents: &mut [u32],
    acc: &Poly,
    out: &mut Vec<Poly>,
) {
    if idx == premises.len() {
        out.push(acc.clone());
        return;
    }
    let mut current = acc.clone();
    for e in 0..=budget {
        exponents[idx] = e;
        let used: u32 = exponents[..=idx].iter().sum();
        if used > budget {
            break;
        }
        enumerate_products(premises, budget, idx + 1, exponents, &current, out);
        current = current.mul(&premises[idx]);
    }
    exponents[idx] = 0;
}

/// Equate `conclusion` with the kappa-weighted product sum coefficient by
/// coefficient.
fn build_identity(
    e: &Entailment,
    products: Vec<Poly>,
    pool: &mut SymbolPool,
) -> Result<(EliminatedEntailment, Vec<LinConstraint>), SolveError> {
    let mut multipliers = Vec::with_capacity(products.len());
    for p in products {
        let id = pool.fresh(format!("k{}", pool.len()));
        multipliers.push((id, p));
    }
    // union of monomials across conclusion and products
    let mut monomials: std::collections::BTreeSet<Monomial> =
        e.conclusion.terms.keys().cloned().collect();
    for (_, p) in &multipliers {
        monomials.extend(p.terms().map(|(m, _)| m.clone()));
    }
    let mut eqs = Vec::with_capacity(monomials.len());
    for m in monomials {
        let mut expr = e
            .conclusion
            .terms
            .get(&m)
            .cloned()
            .unwrap_or_else(Lin::zero);
        for (id, p) in &multipliers {
            let c = p.coeff(&m);
            if !c.is_zero() {
                expr = expr.sub(&Lin::sym(*id).scale(&c));
            }
        }
        if expr.is_zero() {
            continue;
        }
        eqs.push(LinConstraint {
            expr,
            op: ConstraintOp::Eq,
            label: format!("{} [{}]", e.label, m.0.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")),
        });
    }
    Ok((
        EliminatedEntailment {
            label: e.label.clone(),
            premise: e.premise.clone(),
            conclusion: e.conclusion.clone(),
            multipliers,
        },
        eqs,
    ))
}

use num_traits::Zero;
