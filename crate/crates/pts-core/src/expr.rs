//! Multivariate polynomials with exact rational coefficients, polynomial
//! comparisons, and a small boolean-formula layer used by guards and
//! automaton edges.

use std::collections::BTreeMap;
use std::fmt;

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

/// Exact rational scalar used throughout the model layer.
pub type Rat = BigRational;

/// Parse helper: rational from an integer.
pub fn rat_int(n: i64) -> Rat {
    Rat::from_integer(n.into())
}

/// Rational p/q from two integers.
pub fn rat(p: i64, q: i64) -> Rat {
    Rat::new(p.into(), q.into())
}

/// A monomial as an exponent vector over a fixed variable arity.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Monomial(pub Vec<u16>);

impl Monomial {
    pub fn constant(arity: usize) -> Self {
        Monomial(vec![0; arity])
    }

    pub fn var(arity: usize, idx: usize) -> Self {
        let mut e = vec![0; arity];
        e[idx] = 1;
        Monomial(e)
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().map(|&e| e as u32).sum()
    }

    pub fn is_constant(&self) -> bool {
        self.0.iter().all(|&e| e == 0)
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        debug_assert_eq!(self.0.len(), other.0.len());
        Monomial(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| a + b)
                .collect(),
        )
    }

    pub fn eval_f64(&self, point: &[f64]) -> f64 {
        self.0
            .iter()
            .enumerate()
            .fold(1.0, |acc, (i, &e)| acc * point[i].powi(e as i32))
    }

    pub fn eval_rat(&self, point: &[Rat]) -> Rat {
        let mut acc = Rat::one();
        for (i, &e) in self.0.iter().enumerate() {
            for _ in 0..e {
                acc *= &point[i];
            }
        }
        acc
    }

    /// Render like `x^2*y` against the given variable names.
    pub fn display(&self, names: &[String]) -> String {
        let mut parts = Vec::new();
        for (i, &e) in self.0.iter().enumerate() {
            match e {
                0 => {}
                1 => parts.push(names[i].clone()),
                _ => parts.push(format!("{}^{}", names[i], e)),
            }
        }
        if parts.is_empty() {
            "1".to_string()
        } else {
            parts.join("*")
        }
    }
}

/// All monomials of total degree <= `degree` over `arity` variables, in
/// graded lexicographic order. Count is C(arity + degree, degree).
pub fn monomials_up_to(arity: usize, degree: u32) -> Vec<Monomial> {
    let mut out = Vec::new();
    let mut current = vec![0u16; arity];
    loop {
        if current.iter().map(|&e| e as u32).sum::<u32>() <= degree {
            out.push(Monomial(current.clone()));
        }
        // odometer over [0, degree]^arity
        let mut i = 0;
        loop {
            if i == arity {
                out.sort_by_key(|m| (m.degree(), m.0.clone()));
                return out;
            }
            if (current[i] as u32) < degree {
                current[i] += 1;
                break;
            }
            current[i] = 0;
            i += 1;
        }
    }
}

/// A polynomial with rational coefficients over a fixed arity.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Poly {
    arity: usize,
    terms: BTreeMap<Monomial, Rat>,
}

impl Poly {
    pub fn zero(arity: usize) -> Self {
        Poly {
            arity,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(arity: usize, c: Rat) -> Self {
        let mut p = Poly::zero(arity);
        if !c.is_zero() {
            p.terms.insert(Monomial::constant(arity), c);
        }
        p
    }

    pub fn var(arity: usize, idx: usize) -> Self {
        assert!(idx < arity, "variable index out of range");
        let mut p = Poly::zero(arity);
        p.terms.insert(Monomial::var(arity, idx), Rat::one());
        p
    }

    pub fn from_terms(arity: usize, terms: impl IntoIterator<Item = (Monomial, Rat)>) -> Self {
        let mut p = Poly::zero(arity);
        for (m, c) in terms {
            p.add_term(m, c);
        }
        p
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Rat)> {
        self.terms.iter()
    }

    pub fn coeff(&self, m: &Monomial) -> Rat {
        self.terms.get(m).cloned().unwrap_or_else(Rat::zero)
    }

    pub fn constant_term(&self) -> Rat {
        self.coeff(&Monomial::constant(self.arity))
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|m| m.degree()).max().unwrap_or(0)
    }

    /// True when no variable of index >= `n` occurs, i.e. the polynomial
    /// only mentions the first `n` variables.
    pub fn uses_only_first(&self, n: usize) -> bool {
        self.terms
            .keys()
            .all(|m| m.0.iter().skip(n).all(|&e| e == 0))
    }

    pub fn add_term(&mut self, m: Monomial, c: Rat) {
        debug_assert_eq!(m.0.len(), self.arity);
        if c.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(m) {
            Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
            Entry::Vacant(v) => {
                v.insert(c);
            }
        }
    }

    pub fn add(&self, other: &Poly) -> Poly {
        debug_assert_eq!(self.arity, other.arity);
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        self.add(&other.scale(&-Rat::one()))
    }

    pub fn scale(&self, c: &Rat) -> Poly {
        if c.is_zero() {
            return Poly::zero(self.arity);
        }
        Poly {
            arity: self.arity,
            terms: self
                .terms
                .iter()
                .map(|(m, v)| (m.clone(), v * c))
                .collect(),
        }
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        debug_assert_eq!(self.arity, other.arity);
        let mut out = Poly::zero(self.arity);
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                out.add_term(ma.mul(mb), ca * cb);
            }
        }
        out
    }

    pub fn pow(&self, e: u32) -> Poly {
        let mut out = Poly::constant(self.arity, Rat::one());
        for _ in 0..e {
            out = out.mul(self);
        }
        out
    }

    /// Substitute variable `i` by `subs[i]`. All substituted polynomials
    /// must share one arity, which becomes the output arity.
    pub fn substitute(&self, subs: &[Poly]) -> Poly {
        assert_eq!(subs.len(), self.arity);
        let out_arity = subs.first().map(|p| p.arity).unwrap_or(0);
        let mut out = Poly::zero(out_arity);
        for (m, c) in &self.terms {
            let mut term = Poly::constant(out_arity, c.clone());
            for (i, &e) in m.0.iter().enumerate() {
                if e > 0 {
                    term = term.mul(&subs[i].pow(e as u32));
                }
            }
            out = out.add(&term);
        }
        out
    }

    /// Widen to a larger arity, keeping existing variable indices.
    pub fn extend_arity(&self, new_arity: usize) -> Poly {
        assert!(new_arity >= self.arity);
        Poly {
            arity: new_arity,
            terms: self
                .terms
                .iter()
                .map(|(m, c)| {
                    let mut e = m.0.clone();
                    e.resize(new_arity, 0);
                    (Monomial(e), c.clone())
                })
                .collect(),
        }
    }

    pub fn eval_f64(&self, point: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(m, c)| rat_to_f64(c) * m.eval_f64(point))
            .sum()
    }

    pub fn eval_rat(&self, point: &[Rat]) -> Rat {
        let mut acc = Rat::zero();
        for (m, c) in &self.terms {
            acc += c * m.eval_rat(point);
        }
        acc
    }

    pub fn display(&self, names: &[String]) -> String {
        if self.terms.is_empty() {
            return "0".to_string();
        }
        let mut s = String::new();
        for (i, (m, c)) in self.terms.iter().enumerate() {
            let neg = c.is_negative();
            let mag = c.abs();
            if i == 0 {
                if neg {
                    s.push('-');
                }
            } else {
                s.push_str(if neg { " - " } else { " + " });
            }
            if m.is_constant() {
                s.push_str(&format_rat(&mag));
            } else if mag.is_one() {
                s.push_str(&m.display(names));
            } else {
                s.push_str(&format!("{}*{}", format_rat(&mag), m.display(names)));
            }
        }
        s
    }
}

/// Lossy conversion for numeric backends.
pub fn rat_to_f64(r: &Rat) -> f64 {
    use num_traits::ToPrimitive;
    r.to_f64().unwrap_or(f64::NAN)
}

/// Render a rational as `p` or `p/q`.
pub fn format_rat(r: &Rat) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Comparison sense of a polynomial constraint `p (sense) 0`.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Hash, PartialOrd, Ord)]
pub enum Sense {
    /// p >= 0
    Ge,
    /// p > 0
    Gt,
    /// p = 0
    Eq,
}

/// A single polynomial comparison against zero.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Constraint {
    pub poly: Poly,
    pub sense: Sense,
}

impl Constraint {
    pub fn ge(poly: Poly) -> Self {
        Constraint {
            poly,
            sense: Sense::Ge,
        }
    }

    pub fn gt(poly: Poly) -> Self {
        Constraint {
            poly,
            sense: Sense::Gt,
        }
    }

    pub fn eq(poly: Poly) -> Self {
        Constraint {
            poly,
            sense: Sense::Eq,
        }
    }

    pub fn holds_f64(&self, point: &[f64]) -> bool {
        let v = self.poly.eval_f64(point);
        match self.sense {
            Sense::Ge => v >= 0.0,
            Sense::Gt => v > 0.0,
            Sense::Eq => v == 0.0,
        }
    }

    pub fn holds_rat(&self, point: &[Rat]) -> bool {
        let v = self.poly.eval_rat(point);
        match self.sense {
            Sense::Ge => !v.is_negative(),
            Sense::Gt => v.is_positive(),
            Sense::Eq => v.is_zero(),
        }
    }

    /// Closed relaxation used when the comparison becomes an entailment
    /// premise: strict inequalities widen to non-strict, equalities split
    /// into two opposing non-strict inequalities.
    pub fn closure(&self) -> Vec<Poly> {
        self.closure_gap(&[])
    }

    /// Premise closure with integrality information. A strict `p > 0`
    /// whose variables are all integer-valued closes to `p >= gap`, where
    /// gap is the smallest positive value p can take on integer points
    /// (1 over the lcm of the coefficient denominators). This keeps the
    /// premise region exact on reachable states instead of merging it with
    /// the boundary. Variables beyond the mask length count as real.
    pub fn closure_gap(&self, int_mask: &[bool]) -> Vec<Poly> {
        match self.sense {
            Sense::Ge => vec![self.poly.clone()],
            Sense::Gt => {
                let gap = strictness_gap(&self.poly, int_mask);
                if gap.is_zero() {
                    vec![self.poly.clone()]
                } else {
                    vec![self
                        .poly
                        .add(&Poly::constant(self.poly.arity(), -gap))]
                }
            }
            Sense::Eq => vec![self.poly.clone(), self.poly.scale(&-Rat::one())],
        }
    }

    pub fn display(&self, names: &[String]) -> String {
        let op = match self.sense {
            Sense::Ge => ">=",
            Sense::Gt => ">",
            Sense::Eq => "=",
        };
        format!("{} {} 0", self.poly.display(names), op)
    }
}

/// Smallest positive value a polynomial with all-integer variables can
/// take, or zero when some variable is real-valued (no usable gap).
pub fn strictness_gap(p: &Poly, int_mask: &[bool]) -> Rat {
    let all_int = p.terms().all(|(m, _)| {
        m.0.iter()
            .enumerate()
            .all(|(i, &e)| e == 0 || int_mask.get(i).copied().unwrap_or(false))
    });
    if !all_int {
        return Rat::zero();
    }
    let mut lcm = num_bigint::BigInt::from(1u8);
    for (_, c) in p.terms() {
        let d = c.denom();
        let g = num_integer_gcd(&lcm, d);
        lcm = &lcm / g * d;
    }
    Rat::new(1.into(), lcm)
}

fn num_integer_gcd(a: &num_bigint::BigInt, b: &num_bigint::BigInt) -> num_bigint::BigInt {
    use num_traits::Signed as _;
    let mut a = a.abs();
    let mut b = b.abs();
    while !b.is_zero() {
        let r = &a % &b;
        a = std::mem::replace(&mut b, r);
    }
    a
}

/// Conjunction of polynomial comparisons.
pub type Predicate = Vec<Constraint>;

pub fn predicate_holds_f64(pred: &Predicate, point: &[f64]) -> bool {
    pred.iter().all(|c| c.holds_f64(point))
}

pub fn predicate_holds_rat(pred: &Predicate, point: &[Rat]) -> bool {
    pred.iter().all(|c| c.holds_rat(point))
}

/// Boolean formulas over generic atoms; guards and automaton edges share
/// this shape with different atom types.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum BoolExpr<A> {
    True,
    False,
    Atom(A),
    Not(Box<BoolExpr<A>>),
    And(Vec<BoolExpr<A>>),
    Or(Vec<BoolExpr<A>>),
}

impl<A: Clone> BoolExpr<A> {
    pub fn and(parts: Vec<BoolExpr<A>>) -> Self {
        BoolExpr::And(parts)
    }

    pub fn or(parts: Vec<BoolExpr<A>>) -> Self {
        BoolExpr::Or(parts)
    }

    pub fn not(inner: BoolExpr<A>) -> Self {
        BoolExpr::Not(Box::new(inner))
    }

    pub fn eval(&self, atom: &impl Fn(&A) -> bool) -> bool {
        match self {
            BoolExpr::True => true,
            BoolExpr::False => false,
            BoolExpr::Atom(a) => atom(a),
            BoolExpr::Not(e) => !e.eval(atom),
            BoolExpr::And(es) => es.iter().all(|e| e.eval(atom)),
            BoolExpr::Or(es) => es.iter().any(|e| e.eval(atom)),
        }
    }

    /// Disjunctive normal form as a list of conjunctions of literals.
    /// `negate` rewrites a negated atom back into formula form (it may
    /// expand, e.g. the negation of an equality becomes a disjunction).
    pub fn to_dnf(&self, negate: &impl Fn(&A) -> BoolExpr<A>) -> Vec<Vec<A>> {
        match self {
            BoolExpr::True => vec![vec![]],
            BoolExpr::False => vec![],
            BoolExpr::Atom(a) => vec![vec![a.clone()]],
            BoolExpr::Not(e) => match e.as_ref() {
                BoolExpr::True => vec![],
                BoolExpr::False => vec![vec![]],
                BoolExpr::Atom(a) => negate(a).to_dnf(negate),
                BoolExpr::Not(inner) => inner.to_dnf(negate),
                BoolExpr::And(es) => BoolExpr::Or(
                    es.iter().map(|x| BoolExpr::not(x.clone())).collect(),
                )
                .to_dnf(negate),
                BoolExpr::Or(es) => BoolExpr::And(
                    es.iter().map(|x| BoolExpr::not(x.clone())).collect(),
                )
                .to_dnf(negate),
            },
            BoolExpr::And(es) => {
                let mut acc: Vec<Vec<A>> = vec![vec![]];
                for e in es {
                    let d = e.to_dnf(negate);
                    let mut next = Vec::new();
                    for conj in &acc {
                        for extra in &d {
                            let mut merged = conj.clone();
                            merged.extend(extra.iter().cloned());
                            next.push(merged);
                        }
                    }
                    acc = next;
                }
                acc
            }
            BoolExpr::Or(es) => {
                let mut acc = Vec::new();
                for e in es {
                    acc.extend(e.to_dnf(negate));
                }
                acc
            }
        }
    }
}

impl<A: fmt::Debug> fmt::Display for BoolExpr<A> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoolExpr::True => write!(f, "true"),
            BoolExpr::False => write!(f, "false"),
            BoolExpr::Atom(a) => write!(f, "{:?}", a),
            BoolExpr::Not(e) => write!(f, "!({})", e),
            BoolExpr::And(es) => {
                let parts: Vec<String> = es.iter().map(|e| format!("({})", e)).collect();
                write!(f, "{}", parts.join(" & "))
            }
            BoolExpr::Or(es) => {
                let parts: Vec<String> = es.iter().map(|e| format!("({})", e)).collect();
                write!(f, "{}", parts.join(" | "))
            }
        }
    }
}

/// Negation of a comparison atom under exact semantics:
/// !(p >= 0) is -p > 0, !(p > 0) is -p >= 0, and !(p = 0) splits.
pub fn negate_constraint(c: &Constraint) -> BoolExpr<Constraint> {
    let neg = c.poly.scale(&-Rat::one());
    match c.sense {
        Sense::Ge => BoolExpr::Atom(Constraint::gt(neg)),
        Sense::Gt => BoolExpr::Atom(Constraint::ge(neg)),
        Sense::Eq => BoolExpr::Or(vec![
            BoolExpr::Atom(Constraint::gt(c.poly.clone())),
            BoolExpr::Atom(Constraint::gt(neg)),
        ]),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names() -> Vec<String> {
        vec!["x".into(), "y".into()]
    }

    #[test]
    fn monomial_count_matches_binomial() {
        // C(n+d, d): n=2, d=3 -> 10
        assert_eq!(monomials_up_to(2, 3).len(), 10);
        assert_eq!(monomials_up_to(2, 1).len(), 3);
        assert_eq!(monomials_up_to(3, 2).len(), 10);
        assert_eq!(monomials_up_to(1, 0).len(), 1);
    }

    #[test]
    fn poly_arithmetic() {
        let x = Poly::var(2, 0);
        let y = Poly::var(2, 1);
        let p = x.add(&y).mul(&x.sub(&y)); // x^2 - y^2
        assert_eq!(p.eval_f64(&[3.0, 2.0]), 5.0);
        let q = p.substitute(&[Poly::var(2, 1), Poly::var(2, 0)]); // swap
        assert_eq!(q.eval_f64(&[3.0, 2.0]), -5.0);
        assert_eq!(p.degree(), 2);
    }

    #[test]
    fn substitution_composes() {
        // p(x) = x^2 + 1, x := x + y  ->  (x+y)^2 + 1
        let p = Poly::var(1, 0).pow(2).add(&Poly::constant(1, Rat::one()));
        let sub = Poly::var(2, 0).add(&Poly::var(2, 1));
        let q = p.substitute(&[sub]);
        assert_eq!(
            q.eval_rat(&[rat_int(2), rat_int(3)]),
            rat_int(26)
        );
    }

    #[test]
    fn closure_of_equality_splits() {
        let c = Constraint::eq(Poly::var(2, 0)); // x = 0
        let closed = c.closure();
        assert_eq!(closed.len(), 2);
        assert!(predicate_holds_rat(
            &closed.into_iter().map(Constraint::ge).collect(),
            &[rat_int(0), rat_int(5)]
        ));
    }

    #[test]
    fn dnf_of_negated_conjunction() {
        // !(x = 0 & y >= 0) over comparisons
        let x_eq = Constraint::eq(Poly::var(2, 0));
        let y_ge = Constraint::ge(Poly::var(2, 1));
        let f = BoolExpr::not(BoolExpr::and(vec![
            BoolExpr::Atom(x_eq),
            BoolExpr::Atom(y_ge),
        ]));
        let dnf = f.to_dnf(&negate_constraint);
        // x>0 | -x>0 | -y>0
        assert_eq!(dnf.len(), 3);
        for conj in &dnf {
            assert_eq!(conj.len(), 1);
        }
        let _ = format!("{}", BoolExpr::<Constraint>::True);
        let _ = names();
    }
}
