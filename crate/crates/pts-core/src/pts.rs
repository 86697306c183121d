//! The probabilistic transition system model and its executable semantics.

use num_traits::{One, Signed, Zero};
use rand::Rng;

use crate::dist::Distribution;
use crate::expr::{predicate_holds_f64, rat_to_f64, Poly, Predicate, Rat};
use crate::PtsError;

pub type LocId = usize;

/// Initial value of one program variable.
#[derive(Clone, PartialEq, Debug)]
pub enum InitValue {
    Const(Rat),
    Dist(Distribution),
}

/// Initial-state specification: per-variable distribution or constant plus
/// a polytope describing the support of the initial distribution.
#[derive(Clone, PartialEq, Debug)]
pub struct InitSpec {
    pub values: Vec<InitValue>,
    /// Conjunction of comparisons over program variables covering the
    /// support of the initial distribution. Derived from the per-variable
    /// supports unless explicitly overridden.
    pub support: Predicate,
    pub support_overridden: bool,
}

impl InitSpec {
    /// Box polytope spanned by the per-variable supports.
    pub fn derived_support(values: &[InitValue], n_vars: usize) -> Predicate {
        use crate::expr::Constraint;
        let mut atoms = Vec::new();
        for (i, v) in values.iter().enumerate() {
            let var = Poly::var(n_vars, i);
            match v {
                InitValue::Const(c) => {
                    atoms.push(Constraint::eq(var.sub(&Poly::constant(n_vars, c.clone()))));
                }
                InitValue::Dist(d) => {
                    let (lo, hi) = d.support_interval();
                    atoms.push(Constraint::ge(var.sub(&Poly::constant(n_vars, lo))));
                    atoms.push(Constraint::ge(
                        Poly::constant(n_vars, hi).sub(&var),
                    ));
                }
            }
        }
        atoms
    }
}

/// One probabilistic fork of a transition.
#[derive(Clone, PartialEq, Debug)]
pub struct Fork {
    /// Fork probability in (0, 1].
    pub prob: Rat,
    /// One update polynomial per program variable, over program variables
    /// followed by sample variables (arity n + m).
    pub update: Vec<Poly>,
    pub dest: LocId,
}

/// A guarded transition with probabilistic forks.
#[derive(Clone, PartialEq, Debug)]
pub struct Transition {
    pub source: LocId,
    /// Conjunction of polynomial comparisons over program variables.
    pub guard: Predicate,
    pub forks: Vec<Fork>,
}

/// The probabilistic transition system.
#[derive(Clone, PartialEq, Debug)]
pub struct Pts {
    pub var_names: Vec<String>,
    /// Integer-valuedness marker per program variable, used to sharpen the
    /// premise closure of strict comparisons.
    pub var_ints: Vec<bool>,
    pub sample_vars: Vec<(String, Distribution)>,
    pub loc_names: Vec<String>,
    pub l_init: LocId,
    pub l_out: LocId,
    pub transitions: Vec<Transition>,
    /// Per-location invariant over-approximating the reachable valuations.
    pub invariants: Vec<Predicate>,
    pub init: InitSpec,
}

/// A concrete state for simulation.
#[derive(Clone, PartialEq, Debug)]
pub struct PtsState {
    pub loc: LocId,
    pub vals: Vec<f64>,
}

/// A flattened outgoing branch of one location: the guard of the owning
/// transition, one fork, and its destination.
#[derive(Clone, Debug)]
pub struct Branch {
    pub transition_idx: Option<usize>,
    pub guard: Predicate,
    pub prob: Rat,
    pub update: Vec<Poly>,
    pub dest: LocId,
}

impl Pts {
    pub fn n_vars(&self) -> usize {
        self.var_names.len()
    }

    pub fn n_samples(&self) -> usize {
        self.sample_vars.len()
    }

    /// Arity of update polynomials: program variables then sample variables.
    pub fn update_arity(&self) -> usize {
        self.n_vars() + self.n_samples()
    }

    pub fn identity_update(&self) -> Vec<Poly> {
        (0..self.n_vars())
            .map(|i| Poly::var(self.update_arity(), i))
            .collect()
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.var_names.iter().position(|v| v == name)
    }

    pub fn validate(&self) -> Result<(), PtsError> {
        if self.l_init >= self.loc_names.len() || self.l_out >= self.loc_names.len() {
            return Err(PtsError::Malformed("initial/terminal location missing".into()));
        }
        if self.invariants.len() != self.loc_names.len() {
            return Err(PtsError::Malformed("invariant map arity mismatch".into()));
        }
        if self.var_ints.len() != self.var_names.len() {
            return Err(PtsError::Malformed("integrality mask arity mismatch".into()));
        }
        if self.init.values.len() != self.n_vars() {
            return Err(PtsError::Malformed("initial spec arity mismatch".into()));
        }
        for (_, d) in &self.sample_vars {
            d.validate()?;
        }
        for (i, t) in self.transitions.iter().enumerate() {
            if t.source >= self.loc_names.len() {
                return Err(PtsError::Malformed(format!("transition {i} has unknown source")));
            }
            if t.source == self.l_out {
                return Err(PtsError::Malformed(
                    "terminal location must not own transitions".into(),
                ));
            }
            let mut total = Rat::zero();
            for f in &t.forks {
                if f.dest >= self.loc_names.len() {
                    return Err(PtsError::Malformed(format!(
                        "transition {i} forks to undeclared location"
                    )));
                }
                if !f.prob.is_positive() || f.prob > Rat::one() {
                    return Err(PtsError::Malformed(format!(
                        "transition {i} has fork probability outside (0,1]"
                    )));
                }
                if f.update.len() != self.n_vars() {
                    return Err(PtsError::Malformed(format!(
                        "transition {i} update arity mismatch"
                    )));
                }
                for u in &f.update {
                    if u.arity() != self.update_arity() {
                        return Err(PtsError::Malformed(format!(
                            "transition {i} update polynomial arity mismatch"
                        )));
                    }
                }
                total += &f.prob;
            }
            if !total.is_one() {
                return Err(PtsError::ForkProbSum {
                    transition: i,
                    total: crate::expr::format_rat(&total),
                });
            }
        }
        // constants must lie inside the declared support
        let consts: Option<Vec<Rat>> = self
            .init
            .values
            .iter()
            .map(|v| match v {
                InitValue::Const(c) => Some(c.clone()),
                InitValue::Dist(_) => None,
            })
            .collect();
        if let Some(point) = consts {
            if !crate::expr::predicate_holds_rat(&self.init.support, &point) {
                return Err(PtsError::Malformed(
                    "initial constants violate the declared support".into(),
                ));
            }
        }
        Ok(())
    }

    /// The unique transition enabled at `s`. Zero or multiple enabled
    /// transitions signal a violation of the no-demonic restriction.
    pub fn enabled_transition(&self, s: &PtsState) -> Result<&Transition, PtsError> {
        if s.loc == self.l_out {
            return Err(PtsError::TerminalHasNoTransition);
        }
        let mut found: Option<&Transition> = None;
        for t in self.transitions.iter().filter(|t| t.source == s.loc) {
            if predicate_holds_f64(&t.guard, &s.vals) {
                if found.is_some() {
                    return Err(PtsError::DemonicViolation {
                        loc: self.loc_names[s.loc].clone(),
                        kind: "multiple enabled transitions".into(),
                    });
                }
                found = Some(t);
            }
        }
        found.ok_or_else(|| PtsError::DemonicViolation {
            loc: self.loc_names[s.loc].clone(),
            kind: "no enabled transition".into(),
        })
    }

    /// Sample one semantic step. Terminal states self-loop unchanged.
    pub fn concrete_step(&self, s: &PtsState, rng: &mut impl Rng) -> PtsState {
        if s.loc == self.l_out {
            return s.clone();
        }
        let t = match self.enabled_transition(s) {
            Ok(t) => t,
            // total by construction on validated models; treat a demonic
            // violation as a frozen state rather than panicking mid-sample
            Err(_) => return s.clone(),
        };
        let mut point = s.vals.clone();
        point.extend(self.sample_vars.iter().map(|(_, d)| d.sample_f64(rng)));
        let mut u = rng.gen::<f64>();
        let mut chosen = t.forks.last().unwrap();
        for f in &t.forks {
            let p = rat_to_f64(&f.prob);
            if u < p {
                chosen = f;
                break;
            }
            u -= p;
        }
        PtsState {
            loc: chosen.dest,
            vals: chosen.update.iter().map(|p| p.eval_f64(&point)).collect(),
        }
    }

    /// Flat enumeration of all guarded branches out of a location. The
    /// terminal location yields the identity self-loop with probability 1.
    pub fn symbolic_branches(&self, loc: LocId) -> Vec<Branch> {
        if loc == self.l_out {
            return vec![Branch {
                transition_idx: None,
                guard: Vec::new(),
                prob: Rat::one(),
                update: self.identity_update(),
                dest: self.l_out,
            }];
        }
        let mut out = Vec::new();
        for (i, t) in self.transitions.iter().enumerate() {
            if t.source != loc {
                continue;
            }
            for f in &t.forks {
                out.push(Branch {
                    transition_idx: Some(i),
                    guard: t.guard.clone(),
                    prob: f.prob.clone(),
                    update: f.update.clone(),
                    dest: f.dest,
                });
            }
        }
        out
    }

    /// Sample an initial valuation from the per-variable initial spec.
    pub fn sample_initial(&self, rng: &mut impl Rng) -> PtsState {
        let vals = self
            .init
            .values
            .iter()
            .map(|v| match v {
                InitValue::Const(c) => rat_to_f64(c),
                InitValue::Dist(d) => d.sample_f64(rng),
            })
            .collect();
        PtsState {
            loc: self.l_init,
            vals,
        }
    }

    /// Check the guard partition (mutually exclusive, exhaustive) at every
    /// non-terminal location by sampling valuations in a box around the
    /// given radius. Returns the first violation found.
    pub fn check_guard_partition(
        &self,
        samples: usize,
        radius: f64,
        rng: &mut impl Rng,
    ) -> Result<(), PtsError> {
        for loc in 0..self.loc_names.len() {
            if loc == self.l_out {
                continue;
            }
            let guards: Vec<&Predicate> = self
                .transitions
                .iter()
                .filter(|t| t.source == loc)
                .map(|t| &t.guard)
                .collect();
            if guards.is_empty() {
                return Err(PtsError::DemonicViolation {
                    loc: self.loc_names[loc].clone(),
                    kind: "no outgoing transitions".into(),
                });
            }
            for _ in 0..samples {
                let point: Vec<f64> = (0..self.n_vars())
                    .map(|_| {
                        let v: f64 = rng.gen_range(-radius..radius);
                        // integer-biased sampling exercises equality guards
                        if rng.gen::<bool>() {
                            v.round()
                        } else {
                            v
                        }
                    })
                    .collect();
                let holds = guards
                    .iter()
                    .filter(|g| predicate_holds_f64(g, &point))
                    .count();
                if holds != 1 {
                    return Err(PtsError::DemonicViolation {
                        loc: self.loc_names[loc].clone(),
                        kind: format!("{holds} guards hold at {point:?}"),
                    });
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{rat, rat_int, Constraint};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// x := 1  as a two-location PTS: one transition, one fork.
    fn assign_one() -> Pts {
        let arity = 1;
        Pts {
            var_names: vec!["x".into()],
            var_ints: vec![true],
            sample_vars: vec![],
            loc_names: vec!["l0".into(), "out".into()],
            l_init: 0,
            l_out: 1,
            transitions: vec![Transition {
                source: 0,
                guard: vec![],
                forks: vec![Fork {
                    prob: Rat::one(),
                    update: vec![Poly::constant(arity, rat_int(1))],
                    dest: 1,
                }],
            }],
            invariants: vec![vec![], vec![]],
            init: InitSpec {
                values: vec![InitValue::Const(rat_int(0))],
                support: vec![Constraint::eq(Poly::var(1, 0))],
                support_overridden: false,
            },
        }
    }

    /// Toggle chain: while x = 0 the state flips to 1 with probability 1/2.
    fn coin_toggle() -> Pts {
        let n = 1;
        let m = 0;
        let arity = n + m;
        let x = Poly::var(arity, 0);
        Pts {
            var_names: vec!["x".into()],
            var_ints: vec![true],
            sample_vars: vec![],
            loc_names: vec!["head".into(), "out".into()],
            l_init: 0,
            l_out: 1,
            transitions: vec![
                Transition {
                    source: 0,
                    guard: vec![Constraint::eq(Poly::var(n, 0))],
                    forks: vec![
                        Fork {
                            prob: rat(1, 2),
                            update: vec![Poly::constant(arity, rat_int(1)).sub(&x)],
                            dest: 0,
                        },
                        Fork {
                            prob: rat(1, 2),
                            update: vec![x.clone()],
                            dest: 0,
                        },
                    ],
                },
                Transition {
                    source: 0,
                    guard: vec![Constraint::gt(Poly::var(n, 0))],
                    forks: vec![Fork {
                        prob: Rat::one(),
                        update: vec![x],
                        dest: 1,
                    }],
                },
            ],
            invariants: vec![
                vec![
                    Constraint::ge(Poly::var(n, 0)),
                    Constraint::ge(Poly::constant(n, rat_int(1)).sub(&Poly::var(n, 0))),
                ],
                vec![],
            ],
            init: InitSpec {
                values: vec![InitValue::Const(rat_int(0))],
                support: vec![Constraint::eq(Poly::var(n, 0))],
                support_overridden: false,
            },
        }
    }

    #[test]
    fn assign_pts_shape() {
        let pts = assign_one();
        pts.validate().unwrap();
        assert_eq!(pts.loc_names.len(), 2);
        assert_eq!(pts.transitions.len(), 1);
        assert_eq!(pts.transitions[0].forks.len(), 1);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = pts.sample_initial(&mut rng);
        let s1 = pts.concrete_step(&s, &mut rng);
        assert_eq!(s1.vals, vec![1.0]);
        assert_eq!(s1.loc, pts.l_out);
    }

    #[test]
    fn terminal_state_self_loops() {
        let pts = assign_one();
        let term = PtsState {
            loc: pts.l_out,
            vals: vec![7.0],
        };
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        assert_eq!(pts.concrete_step(&term, &mut rng), term);
        assert!(matches!(
            pts.enabled_transition(&term),
            Err(PtsError::TerminalHasNoTransition)
        ));
    }

    #[test]
    fn enabled_transition_follows_guards() {
        let pts = coin_toggle();
        pts.validate().unwrap();
        let at_zero = PtsState {
            loc: 0,
            vals: vec![0.0],
        };
        let t = pts.enabled_transition(&at_zero).unwrap();
        assert_eq!(t.forks.len(), 2);
        let at_one = PtsState {
            loc: 0,
            vals: vec![1.0],
        };
        let t = pts.enabled_transition(&at_one).unwrap();
        assert_eq!(t.forks.len(), 1);
        assert_eq!(t.forks[0].dest, pts.l_out);
    }

    #[test]
    fn symbolic_branches_terminal_identity() {
        let pts = coin_toggle();
        let b = pts.symbolic_branches(pts.l_out);
        assert_eq!(b.len(), 1);
        assert!(b[0].guard.is_empty());
        assert_eq!(b[0].prob, Rat::one());
        assert_eq!(b[0].dest, pts.l_out);
        assert_eq!(pts.symbolic_branches(0).len(), 3);
    }

    #[test]
    fn step_frequencies_match_fork_probabilities() {
        // empirical toggle frequency within 3 standard errors of 1/2
        let pts = coin_toggle();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let s = PtsState {
            loc: 0,
            vals: vec![0.0],
        };
        let n = 100_000;
        let mut toggled = 0usize;
        for _ in 0..n {
            if pts.concrete_step(&s, &mut rng).vals[0] == 1.0 {
                toggled += 1;
            }
        }
        let freq = toggled as f64 / n as f64;
        let se = (0.5 * 0.5 / n as f64).sqrt();
        assert!((freq - 0.5).abs() < 3.0 * se, "freq {freq}");
    }

    #[test]
    fn fork_sum_validation() {
        let mut pts = assign_one();
        pts.transitions[0].forks[0].prob = rat(1, 2);
        assert!(matches!(pts.validate(), Err(PtsError::ForkProbSum { .. })));
    }

    #[test]
    fn guard_partition_check_passes_on_toggle() {
        let pts = coin_toggle();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        // guards x = 0 / x > 0 do not partition negative reals; the
        // invariant-constrained sampler only probes [0, 1]-ish integers here
        let mut ok = 0;
        for _ in 0..10_000 {
            let x: f64 = if rng.gen::<bool>() { 0.0 } else { 1.0 };
            let holds = pts
                .transitions
                .iter()
                .filter(|t| predicate_holds_f64(&t.guard, &[x]))
                .count();
            if holds == 1 {
                ok += 1;
            }
        }
        assert_eq!(ok, 10_000);
    }
}
