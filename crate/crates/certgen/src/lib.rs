//! Barrier-certificate synthesis front half: piecewise polynomial templates
//! with unknown coefficients indexed by (location, automaton state, counter
//! value), symbolic pre-expectations over one product step, and the
//! entailment systems of the four bound conditions.
//!
//! Unknowns stay affine throughout: every entailment conclusion is a
//! polynomial in the program variables whose coefficients are affine forms
//! over the template coefficients and the bound level gamma.

use std::collections::BTreeMap;

use num_traits::{One, Zero};
use product::{CounterMode, EdgeGroup, ProductSystem};
use pts_core::{monomials_up_to, Monomial, MomentTable, Poly, Rat};
use serde::Serialize;
use thiserror::Error;

#[derive(Error, Debug)]
pub enum CertError {
    #[error("template family too large: {count} coefficients exceed the cap {cap}")]
    TemplateCap { count: usize, cap: usize },
    #[error("degree must be at least 0")]
    BadDegree,
    #[error(transparent)]
    Moment(#[from] pts_core::PtsError),
    #[error("mode/constant mismatch: {0}")]
    BadConstants(String),
}

/// Which bound condition is being synthesized.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize)]
pub enum TheoremMode {
    /// Supermartingale lower bound on "tracked set visited at most k times".
    LowerFov,
    /// Submartingale upper bound on the same event.
    UpperFov,
    /// Supermartingale lower bound on "tracked set missed at most k
    /// consecutive steps".
    LowerIov,
    /// Submartingale upper bound on the same event.
    UpperIov,
}

impl TheoremMode {
    pub fn is_lower(self) -> bool {
        matches!(self, TheoremMode::LowerFov | TheoremMode::LowerIov)
    }

    pub fn counter_mode(self) -> CounterMode {
        match self {
            TheoremMode::LowerFov | TheoremMode::UpperFov => CounterMode::Fov,
            TheoremMode::LowerIov | TheoremMode::UpperIov => CounterMode::Iov,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            TheoremMode::LowerFov => "lower-fov",
            TheoremMode::UpperFov => "upper-fov",
            TheoremMode::LowerIov => "lower-iov",
            TheoremMode::UpperIov => "upper-iov",
        }
    }
}

/// Index of an unknown in the symbol pool.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug, Hash)]
pub struct SymId(pub u32);

/// Pool of unknowns: gamma, template coefficients, and any multipliers the
/// eliminator adds later. Names are stable and deterministic.
#[derive(Clone, Debug, Default)]
pub struct SymbolPool {
    names: Vec<String>,
}

impl SymbolPool {
    pub fn fresh(&mut self, name: String) -> SymId {
        self.names.push(name);
        SymId(self.names.len() as u32 - 1)
    }

    pub fn name(&self, id: SymId) -> &str {
        &self.names[id.0 as usize]
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = SymId> + '_ {
        (0..self.names.len() as u32).map(SymId)
    }
}

/// Affine form over unknowns: constant + sum coeff * sym.
#[derive(Clone, PartialEq, Debug, Default)]
pub struct Lin {
    pub constant: Rat,
    pub terms: BTreeMap<SymId, Rat>,
}

impl Lin {
    pub fn zero() -> Lin {
        Lin {
            constant: Rat::zero(),
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(c: Rat) -> Lin {
        Lin {
            constant: c,
            terms: BTreeMap::new(),
        }
    }

    pub fn sym(id: SymId) -> Lin {
        Lin {
            constant: Rat::zero(),
            terms: [(id, Rat::one())].into_iter().collect(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.constant.is_zero() && self.terms.is_empty()
    }

    pub fn add(&self, other: &Lin) -> Lin {
        let mut out = self.clone();
        out.constant += &other.constant;
        for (id, c) in &other.terms {
            let e = out.terms.entry(*id).or_insert_with(Rat::zero);
            *e += c;
            if e.is_zero() {
                out.terms.remove(id);
            }
        }
        out
    }

    pub fn sub(&self, other: &Lin) -> Lin {
        self.add(&other.scale(&-Rat::one()))
    }

    pub fn scale(&self, c: &Rat) -> Lin {
        if c.is_zero() {
            return Lin::zero();
        }
        Lin {
            constant: &self.constant * c,
            terms: self.terms.iter().map(|(id, v)| (*id, v * c)).collect(),
        }
    }

    /// Evaluate under a concrete assignment of unknowns.
    pub fn eval(&self, assignment: &dyn Fn(SymId) -> Rat) -> Rat {
        let mut acc = self.constant.clone();
        for (id, c) in &self.terms {
            acc += c * assignment(*id);
        }
        acc
    }

    pub fn display(&self, pool: &SymbolPool) -> String {
        let mut parts = Vec::new();
        if !self.constant.is_zero() {
            parts.push(pts_core::format_rat(&self.constant));
        }
        for (id, c) in &self.terms {
            if c.is_one() {
                parts.push(pool.name(*id).to_string());
            } else {
                parts.push(format!("{}*{}", pts_core::format_rat(c), pool.name(*id)));
            }
        }
        if parts.is_empty() {
            "0".into()
        } else {
            parts.join(" + ")
        }
    }
}

/// Polynomial in program variables whose coefficients are affine forms over
/// the unknowns.
#[derive(Clone, PartialEq, Debug)]
pub struct TPoly {
    pub arity: usize,
    pub terms: BTreeMap<Monomial, Lin>,
}

impl TPoly {
    pub fn zero(arity: usize) -> TPoly {
        TPoly {
            arity,
            terms: BTreeMap::new(),
        }
    }

    pub fn from_lin(arity: usize, lin: Lin) -> TPoly {
        let mut t = TPoly::zero(arity);
        t.add_term(Monomial::constant(arity), lin);
        t
    }

    pub fn from_poly(p: &Poly) -> TPoly {
        let mut t = TPoly::zero(p.arity());
        for (m, c) in p.terms() {
            t.add_term(m.clone(), Lin::constant(c.clone()));
        }
        t
    }

    pub fn add_term(&mut self, m: Monomial, lin: Lin) {
        if lin.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(m) {
            Entry::Occupied(mut o) => {
                let next = o.get().add(&lin);
                if next.is_zero() {
                    o.remove();
                } else {
                    *o.get_mut() = next;
                }
            }
            Entry::Vacant(v) => {
                v.insert(lin);
            }
        }
    }

    pub fn add(&self, other: &TPoly) -> TPoly {
        let mut out = self.clone();
        for (m, lin) in &other.terms {
            out.add_term(m.clone(), lin.clone());
        }
        out
    }

    pub fn sub(&self, other: &TPoly) -> TPoly {
        self.add(&other.scale(&-Rat::one()))
    }

    pub fn scale(&self, c: &Rat) -> TPoly {
        if c.is_zero() {
            return TPoly::zero(self.arity);
        }
        TPoly {
            arity: self.arity,
            terms: self
                .terms
                .iter()
                .map(|(m, l)| (m.clone(), l.scale(c)))
                .collect(),
        }
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|m| m.degree()).max().unwrap_or(0)
    }

    /// Substitute each variable by a rational polynomial (of any shared
    /// arity); unknown coefficients ride along.
    pub fn substitute(&self, subs: &[Poly]) -> TPoly {
        assert_eq!(subs.len(), self.arity);
        let out_arity = subs.first().map(|p| p.arity()).unwrap_or(0);
        let mut out = TPoly::zero(out_arity);
        for (m, lin) in &self.terms {
            let mut poly_part = Poly::constant(out_arity, Rat::one());
            for (i, &e) in m.0.iter().enumerate() {
                if e > 0 {
                    poly_part = poly_part.mul(&subs[i].pow(e as u32));
                }
            }
            for (m2, c2) in poly_part.terms() {
                out.add_term(m2.clone(), lin.scale(c2));
            }
        }
        out
    }

    /// Instantiate the unknowns, producing a rational polynomial.
    pub fn instantiate(&self, assignment: &dyn Fn(SymId) -> Rat) -> Poly {
        Poly::from_terms(
            self.arity,
            self.terms
                .iter()
                .map(|(m, lin)| (m.clone(), lin.eval(assignment))),
        )
    }

    pub fn display(&self, names: &[String], pool: &SymbolPool) -> String {
        if self.terms.is_empty() {
            return "0".into();
        }
        self.terms
            .iter()
            .map(|(m, lin)| format!("({})*{}", lin.display(pool), m.display(names)))
            .collect::<Vec<_>>()
            .join(" + ")
    }
}

/// Template family: one polynomial per (location, automaton state, counter
/// value) with fresh coefficient symbols, all monomials of degree <= d.
pub struct TemplateFamily {
    pub degree: u32,
    pub k: u32,
    pub monomials: Vec<Monomial>,
    pub pieces: BTreeMap<(usize, usize, u32), TPoly>,
    pub pool: SymbolPool,
    pub gamma: SymId,
    /// Coefficient symbols per piece, aligned with `monomials`.
    pub coeffs: BTreeMap<(usize, usize, u32), Vec<SymId>>,
}

/// Default cap on the total number of template coefficients.
pub const DEFAULT_TEMPLATE_CAP: usize = 200_000;

/// One polynomial piece per (location, automaton state, counter in
/// 0..=k+1).
pub fn make_templates(
    psys: &ProductSystem,
    degree: u32,
    k: u32,
    cap: usize,
) -> Result<TemplateFamily, CertError> {
    let n = psys.pts.n_vars();
    let monomials = monomials_up_to(n, degree);
    let piece_count = psys.pts.loc_names.len() * psys.dra.n_states * (k as usize + 2);
    let count = piece_count * monomials.len();
    if count > cap {
        return Err(CertError::TemplateCap { count, cap });
    }
    let mut pool = SymbolPool::default();
    let gamma = pool.fresh("gamma".into());
    let mut pieces = BTreeMap::new();
    let mut coeffs = BTreeMap::new();
    for loc in 0..psys.pts.loc_names.len() {
        for q in 0..psys.dra.n_states {
            for l in 0..=k + 1 {
                let mut piece = TPoly::zero(n);
                let mut ids = Vec::with_capacity(monomials.len());
                for (mi, m) in monomials.iter().enumerate() {
                    let id = pool.fresh(format!("c_{loc}_{q}_{l}_{mi}"));
                    ids.push(id);
                    piece.add_term(m.clone(), Lin::sym(id));
                }
                pieces.insert((loc, q, l), piece);
                coeffs.insert((loc, q, l), ids);
            }
        }
    }
    Ok(TemplateFamily {
        degree,
        k,
        monomials,
        pieces,
        pool,
        gamma,
        coeffs,
    })
}

/// Symbolic expected value of the successor piece over one edge group:
/// sum over forks of p_j * E_r[piece(dest_j, q', l')(update_j(v, r))],
/// with sample-variable monomials replaced by their exact moments
/// (independent sample variables).
pub fn pre_expectation(
    family: &TemplateFamily,
    psys: &ProductSystem,
    group: &EdgeGroup,
    moments: &MomentTable,
) -> Result<TPoly, CertError> {
    let n = psys.pts.n_vars();
    let mut acc = TPoly::zero(n);
    for (prob, update, dest) in &group.forks {
        let piece = family
            .pieces
            .get(&(*dest, group.q_next, group.counter_next))
            .expect("successor piece exists");
        // compose with the update: polynomial over (v, r)
        let composed = piece.substitute(update);
        // integrate out the sample variables via raw moments
        let mut integrated = TPoly::zero(n);
        for (m, lin) in &composed.terms {
            let mut factor = Rat::one();
            for (j, &e) in m.0[n..].iter().enumerate() {
                if e > 0 {
                    factor *= moments.moment(j, e as u32)?;
                }
            }
            let v_mon = Monomial(m.0[..n].to_vec());
            integrated.add_term(v_mon, lin.scale(&factor));
        }
        acc = acc.add(&integrated.scale(prob));
    }
    Ok(acc)
}

/// An entailment: premises >= 0 (closed polynomial comparisons over program
/// variables) imply conclusion >= 0 (affine in the unknowns).
#[derive(Clone, Debug)]
pub struct Entailment {
    pub label: String,
    pub premise: Vec<Poly>,
    pub conclusion: TPoly,
}

/// A certificate synthesis problem for one theorem mode.
pub struct CertificateProblem<'a> {
    pub psys: &'a ProductSystem<'a>,
    pub mode: TheoremMode,
    pub degree: u32,
    pub k: u32,
    /// Discount constant of the submartingale conditions; fixed per solve.
    /// Unused in lower modes.
    pub alpha: Option<Rat>,
    /// Optional ceiling on the threshold pieces of the upper modes. The
    /// submartingale argument never needs it, and enforcing any lambda
    /// below gamma makes the system infeasible (the stopped value is
    /// capped at lambda while optional stopping pushes it to at least
    /// gamma), so it is off unless explicitly requested.
    pub lambda: Option<Rat>,
    pub family: TemplateFamily,
}

impl<'a> CertificateProblem<'a> {
    pub fn new(
        psys: &'a ProductSystem<'a>,
        mode: TheoremMode,
        degree: u32,
        k: u32,
        alpha: Option<Rat>,
        lambda: Option<Rat>,
    ) -> Result<Self, CertError> {
        if psys.mode != mode.counter_mode() {
            return Err(CertError::BadConstants(
                "product counter mode does not match the theorem mode".into(),
            ));
        }
        if psys.k != k {
            return Err(CertError::BadConstants("product cap differs from k".into()));
        }
        match (mode.is_lower(), &alpha) {
            (true, Some(_)) => {
                return Err(CertError::BadConstants(
                    "alpha applies only to upper modes".into(),
                ))
            }
            (false, None) => {
                return Err(CertError::BadConstants("upper modes need alpha".into()))
            }
            (false, Some(a)) => {
                if a <= &Rat::zero() || a >= &Rat::one() {
                    return Err(CertError::BadConstants("alpha must lie in (0,1)".into()));
                }
            }
            _ => {}
        }
        if let Some(l) = &lambda {
            if mode.is_lower() {
                return Err(CertError::BadConstants(
                    "lambda applies only to upper modes".into(),
                ));
            }
            if l < &Rat::zero() || l > &Rat::one() {
                return Err(CertError::BadConstants("lambda must lie in [0,1]".into()));
            }
        }
        let family = make_templates(psys, degree, k, DEFAULT_TEMPLATE_CAP)?;
        Ok(CertificateProblem {
            psys,
            mode,
            degree,
            k,
            alpha,
            lambda,
            family,
        })
    }

    /// Threshold states: the tracked set for FOV modes, its complement for
    /// IOV modes.
    pub fn threshold_states(&self) -> Vec<usize> {
        match self.mode.counter_mode() {
            CounterMode::Fov => self.psys.tracked.iter().copied().collect(),
            CounterMode::Iov => (0..self.psys.dra.n_states)
                .filter(|q| !self.psys.tracked.contains(q))
                .collect(),
        }
    }

    /// Emit the full entailment system for this problem's mode.
    pub fn encode(&self) -> Result<Vec<Entailment>, CertError> {
        let psys = self.psys;
        let family = &self.family;
        let n = psys.pts.n_vars();
        let moments = MomentTable::new(&psys.pts.sample_vars);
        let mut out = Vec::new();

        let inv_closure = |loc: usize| -> Vec<Poly> {
            psys.pts.invariants[loc]
                .iter()
                .flat_map(|c| c.closure_gap(&psys.pts.var_ints))
                .collect()
        };

        // per-piece side conditions over the location invariant
        for ((loc, q, l), piece) in &family.pieces {
            let premise = inv_closure(*loc);
            out.push(Entailment {
                label: format!("nonneg loc={loc} q={q} l={l}"),
                premise: premise.clone(),
                conclusion: piece.clone(),
            });
            if !self.mode.is_lower() {
                let one = TPoly::from_lin(n, Lin::constant(Rat::one()));
                out.push(Entailment {
                    label: format!("bounded loc={loc} q={q} l={l}"),
                    premise,
                    conclusion: one.sub(piece),
                });
            }
        }

        // initial level at (l_init, q0, 0) over support and invariant
        {
            let loc = psys.pts.l_init;
            let piece = &family.pieces[&(loc, psys.dra.initial, 0)];
            let mut premise = inv_closure(loc);
            for c in &psys.pts.init.support {
                premise.extend(c.closure_gap(&psys.pts.var_ints));
            }
            let gamma = TPoly::from_lin(n, Lin::sym(family.gamma));
            let conclusion = if self.mode.is_lower() {
                gamma.sub(piece)
            } else {
                piece.sub(&gamma)
            };
            out.push(Entailment {
                label: "initial".into(),
                premise,
                conclusion,
            });
        }

        // threshold pieces at counter k+1; the upper-mode ceiling is only
        // emitted when a lambda was requested
        for q in self.threshold_states() {
            for loc in 0..psys.pts.loc_names.len() {
                let conclusion = if self.mode.is_lower() {
                    // piece - 1 >= 0
                    let piece = &family.pieces[&(loc, q, self.k + 1)];
                    piece.sub(&TPoly::from_lin(n, Lin::constant(Rat::one())))
                } else {
                    match &self.lambda {
                        // lambda - piece >= 0
                        Some(l) => {
                            let piece = &family.pieces[&(loc, q, self.k + 1)];
                            TPoly::from_lin(n, Lin::constant(l.clone())).sub(piece)
                        }
                        None => continue,
                    }
                };
                out.push(Entailment {
                    label: format!("threshold loc={loc} q={q}"),
                    premise: inv_closure(loc),
                    conclusion,
                });
            }
        }

        // drift over every symbolic edge group with counter <= k
        for group in psys.edge_groups() {
            if group.counter > self.k {
                continue;
            }
            let piece = &family.pieces[&(group.loc, group.q, group.counter)];
            let pre = pre_expectation(family, psys, &group, &moments)?;
            let conclusion = if self.mode.is_lower() {
                piece.sub(&pre)
            } else {
                let alpha = self.alpha.as_ref().expect("checked in constructor");
                pre.scale(alpha).sub(piece)
            };
            out.push(Entailment {
                label: format!("drift {}", group.label),
                premise: group.premise.clone(),
                conclusion,
            });
        }

        Ok(out)
    }
}

/// A synthesized certificate with concrete rational coefficients.
#[derive(Clone, Debug)]
pub struct ConcreteCertificate {
    pub mode: TheoremMode,
    pub degree: u32,
    pub k: u32,
    pub alpha: Option<Rat>,
    pub lambda: Option<Rat>,
    pub gamma: Rat,
    /// Certified probability bound: 1 - gamma for both directions.
    pub bound: Rat,
    /// Value of the initial piece at the initial state when the support is
    /// a single point.
    pub initial_value: Option<Rat>,
    pub pieces: BTreeMap<(usize, usize, u32), Poly>,
}

impl ConcreteCertificate {
    pub fn piece(&self, loc: usize, q: usize, l: u32) -> &Poly {
        &self.pieces[&(loc, q, l)]
    }

    pub fn eval_f64(&self, loc: usize, q: usize, l: u32, vals: &[f64]) -> f64 {
        self.pieces[&(loc, q, l)].eval_f64(vals)
    }
}
