//! Deterministic Rabin automata whose alphabet is the powerset of a set of
//! polynomial predicates over program variables. Edges carry boolean guard
//! formulas over named atomic propositions; expansion to explicit letters
//! happens only inside the validator.

mod parse;

pub use parse::{parse_dra, parse_guard_formula, print_dra};

use std::collections::BTreeSet;

use num_traits::{Signed, Zero};
use pts_core::{BoolExpr, Poly, PtsState, Sense};
use thiserror::Error;

#[derive(Error, Debug)]
pub enum DraError {
    #[error("parse error at {line}:{col}: {msg}")]
    Parse { line: usize, col: usize, msg: String },
    #[error(transparent)]
    Expr(#[from] pts_core::PtsError),
    #[error("state {state}: edges '{a}' and '{b}' overlap on letter {letter}")]
    Nondeterministic {
        state: String,
        a: String,
        b: String,
        letter: String,
    },
    #[error("state {state}: no edge covers letter {letter}")]
    Incomplete { state: String, letter: String },
    #[error("Rabin pair {index}: E and F overlap on state {state}")]
    OverlappingPair { index: usize, state: String },
    #[error("malformed automaton: {0}")]
    Malformed(String),
    #[error("alphabet too large: {0} atomic propositions (limit 16)")]
    TooManyAps(usize),
    #[error("internal error: no edge fired after validation")]
    NoEdgeFired,
}

/// A predicate over program variables, evaluated exactly at states.
/// Equality is kept as a distinct sense so that it can expand into two
/// closed inequalities when emitted as an entailment premise.
#[derive(Clone, PartialEq, Debug)]
pub struct AtomicProposition {
    pub name: String,
    /// `poly (sense) 0` over the program variables of the host PTS.
    pub poly: Poly,
    pub sense: Sense,
}

impl AtomicProposition {
    pub fn holds_f64(&self, vals: &[f64]) -> bool {
        let v = self.poly.eval_f64(vals);
        match self.sense {
            Sense::Ge => v >= 0.0,
            Sense::Gt => v > 0.0,
            Sense::Eq => v == 0.0,
        }
    }

    pub fn holds_rat(&self, vals: &[pts_core::Rat]) -> bool {
        let v = self.poly.eval_rat(vals);
        match self.sense {
            Sense::Ge => !v.is_negative(),
            Sense::Gt => v.is_positive(),
            Sense::Eq => v.is_zero(),
        }
    }
}

/// Positive or negated occurrence of an atomic proposition in a guard.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct ApLit {
    pub ap: usize,
    pub negated: bool,
}

/// A truth assignment to the atomic propositions, as a bitmask.
pub type Letter = u16;

pub fn letter_has(letter: Letter, ap: usize) -> bool {
    letter & (1 << ap) != 0
}

/// One guarded edge of the automaton.
#[derive(Clone, PartialEq, Debug)]
pub struct DraEdge {
    pub guard: BoolExpr<ApLit>,
    pub dest: usize,
}

impl DraEdge {
    pub fn fires(&self, letter: Letter) -> bool {
        self.guard
            .eval(&|lit| letter_has(letter, lit.ap) != lit.negated)
    }
}

/// A Rabin pair: runs are accepting for this pair when `e` is visited
/// finitely often and `f` infinitely often.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct RabinPair {
    pub e: BTreeSet<usize>,
    pub f: BTreeSet<usize>,
}

/// Deterministic Rabin automaton over the implicit alphabet 2^AP.
#[derive(Clone, PartialEq, Debug)]
pub struct Dra {
    pub aps: Vec<AtomicProposition>,
    pub n_states: usize,
    pub initial: usize,
    /// Outgoing edges per state.
    pub edges: Vec<Vec<DraEdge>>,
    pub pairs: Vec<RabinPair>,
    /// Optional property text, documentation only; never interpreted.
    pub property_doc: Option<String>,
}

impl Dra {
    /// Single-state automaton accepting every word.
    pub fn universal(aps: Vec<AtomicProposition>) -> Dra {
        Dra {
            aps,
            n_states: 1,
            initial: 0,
            edges: vec![vec![DraEdge {
                guard: BoolExpr::True,
                dest: 0,
            }]],
            pairs: vec![RabinPair {
                e: BTreeSet::new(),
                f: [0].into_iter().collect(),
            }],
            property_doc: None,
        }
    }

    pub fn ap_index(&self, name: &str) -> Option<usize> {
        self.aps.iter().position(|a| a.name == name)
    }

    /// Determinism and completeness via exhaustive truth table over 2^|AP|,
    /// plus structural checks on states and acceptance pairs.
    pub fn validate(&self) -> Result<(), DraError> {
        if self.aps.len() > 16 {
            return Err(DraError::TooManyAps(self.aps.len()));
        }
        if self.n_states == 0 || self.initial >= self.n_states {
            return Err(DraError::Malformed("missing or bad initial state".into()));
        }
        if self.edges.len() != self.n_states {
            return Err(DraError::Malformed("edge table arity mismatch".into()));
        }
        for (q, edges) in self.edges.iter().enumerate() {
            for e in edges {
                if e.dest >= self.n_states {
                    return Err(DraError::Malformed(format!(
                        "edge from state {q} to undeclared state {}",
                        e.dest
                    )));
                }
            }
        }
        for (i, p) in self.pairs.iter().enumerate() {
            for s in p.e.intersection(&p.f) {
                return Err(DraError::OverlappingPair {
                    index: i,
                    state: s.to_string(),
                });
            }
            if let Some(&s) = p.e.iter().chain(p.f.iter()).find(|&&s| s >= self.n_states) {
                return Err(DraError::Malformed(format!(
                    "pair {i} references undeclared state {s}"
                )));
            }
        }
        let n_letters: u32 = 1 << self.aps.len();
        for q in 0..self.n_states {
            for letter in 0..n_letters {
                let letter = letter as Letter;
                let firing: Vec<&DraEdge> = self.edges[q]
                    .iter()
                    .filter(|e| e.fires(letter))
                    .collect();
                match firing.len() {
                    0 => {
                        return Err(DraError::Incomplete {
                            state: q.to_string(),
                            letter: self.letter_to_string(letter),
                        })
                    }
                    1 => {}
                    _ => {
                        return Err(DraError::Nondeterministic {
                            state: q.to_string(),
                            a: format!("{}", firing[0].guard),
                            b: format!("{}", firing[1].guard),
                            letter: self.letter_to_string(letter),
                        })
                    }
                }
            }
        }
        Ok(())
    }

    /// The set of atomic propositions true at a concrete state.
    pub fn evaluate_label(&self, state: &PtsState) -> Letter {
        evaluate_label(&self.aps, &state.vals)
    }

    pub fn evaluate_label_rat(&self, vals: &[pts_core::Rat]) -> Letter {
        let mut letter = 0;
        for (i, ap) in self.aps.iter().enumerate() {
            if ap.holds_rat(vals) {
                letter |= 1 << i;
            }
        }
        letter
    }

    /// Successor state under the unique edge the letter satisfies.
    pub fn step(&self, q: usize, letter: Letter) -> Result<usize, DraError> {
        self.edges[q]
            .iter()
            .find(|e| e.fires(letter))
            .map(|e| e.dest)
            .ok_or(DraError::NoEdgeFired)
    }

    pub fn letter_to_string(&self, letter: Letter) -> String {
        let names: Vec<&str> = self
            .aps
            .iter()
            .enumerate()
            .filter(|(i, _)| letter_has(letter, *i))
            .map(|(_, a)| a.name.as_str())
            .collect();
        format!("{{{}}}", names.join(", "))
    }

    /// The run of the automaton on a finite word, including the initial
    /// state: q_0, q_1 = delta(q_0, w_0), ...
    pub fn run(&self, word: &[Letter]) -> Result<Vec<usize>, DraError> {
        let mut states = vec![self.initial];
        for &letter in word {
            let q = *states.last().unwrap();
            states.push(self.step(q, letter)?);
        }
        Ok(states)
    }

    /// Exact acceptance of the ultimately periodic word `prefix .
    /// cycle^omega`: the set of states visited infinitely often is read off
    /// the lasso.
    pub fn accepts_lasso(&self, prefix: &[Letter], cycle: &[Letter]) -> Result<bool, DraError> {
        assert!(!cycle.is_empty());
        let mut q = self.initial;
        for &letter in prefix {
            q = self.step(q, letter)?;
        }
        // iterate the cycle until the (state, phase) pair repeats
        let mut seen = std::collections::HashMap::new();
        let mut trace = Vec::new();
        let mut phase = 0usize;
        loop {
            if let Some(&start) = seen.get(&(q, phase)) {
                let inf: BTreeSet<usize> = trace[start..].iter().copied().collect();
                return Ok(self.pairs.iter().any(|p| {
                    p.e.intersection(&inf).next().is_none()
                        && p.f.intersection(&inf).next().is_some()
                }));
            }
            seen.insert((q, phase), trace.len());
            trace.push(q);
            q = self.step(q, cycle[phase])?;
            phase = (phase + 1) % cycle.len();
        }
    }
}

/// The set of APs true at a valuation, as a letter bitmask. Strict and
/// equality senses are evaluated exactly.
pub fn evaluate_label(aps: &[AtomicProposition], vals: &[f64]) -> Letter {
    let mut letter = 0;
    for (i, ap) in aps.iter().enumerate() {
        if ap.holds_f64(vals) {
            letter |= 1 << i;
        }
    }
    letter
}

/// Comparison atoms for one AP literal, used when automaton guards become
/// entailment premises. Strictness is preserved here; the premise closure
/// (with integrality gaps) happens at emission time. A negated equality is
/// a disjunction and is handled by `disjunct_premises`, not here.
pub fn literal_premise_atoms(ap: &AtomicProposition, negated: bool) -> Vec<pts_core::Constraint> {
    use pts_core::Constraint;
    let p = ap.poly.clone();
    let neg = p.scale(&-pts_core::Rat::from_integer(1.into()));
    match (ap.sense, negated) {
        (Sense::Ge, false) => vec![Constraint::ge(p)],
        (Sense::Gt, false) => vec![Constraint::gt(p)],
        (Sense::Ge, true) => vec![Constraint::gt(neg)],
        (Sense::Gt, true) => vec![Constraint::ge(neg)],
        (Sense::Eq, false) => vec![Constraint::ge(p), Constraint::ge(neg)],
        (Sense::Eq, true) => {
            unreachable!("negated equality literals are split before premise emission")
        }
    }
}

/// Expand an edge guard into DNF over AP literals.
pub fn guard_dnf(guard: &BoolExpr<ApLit>) -> Vec<Vec<ApLit>> {
    let negate = |lit: &ApLit| -> BoolExpr<ApLit> {
        BoolExpr::Atom(ApLit {
            ap: lit.ap,
            negated: !lit.negated,
        })
    };
    guard.to_dnf(&negate)
}

/// Conjunctive premise variants of one DNF disjunct: each negated-equality
/// literal doubles the variant set (its two strict sides), every other
/// literal contributes its atoms. Strict senses survive until closure.
pub fn disjunct_premises(
    disjunct: &[ApLit],
    aps: &[AtomicProposition],
) -> Vec<Vec<pts_core::Constraint>> {
    use pts_core::Constraint;
    let mut variants: Vec<Vec<Constraint>> = vec![Vec::new()];
    for lit in disjunct {
        let ap = &aps[lit.ap];
        if ap.sense == Sense::Eq && lit.negated {
            let pos = Constraint::gt(ap.poly.clone());
            let neg = Constraint::gt(ap.poly.scale(&-pts_core::Rat::from_integer(1.into())));
            let mut next = Vec::with_capacity(variants.len() * 2);
            for v in &variants {
                let mut a = v.clone();
                a.push(pos.clone());
                next.push(a);
                let mut b = v.clone();
                b.push(neg.clone());
                next.push(b);
            }
            variants = next;
        } else {
            let atoms = literal_premise_atoms(ap, lit.negated);
            for v in &mut variants {
                v.extend(atoms.iter().cloned());
            }
        }
    }
    variants
}
