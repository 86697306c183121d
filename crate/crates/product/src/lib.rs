//! Product of a PTS with a Rabin automaton plus a tick counter over a
//! tracked state set U: the counter counts steps entering U (FOV mode) or
//! consecutive steps missing U (IOV mode), saturating at cap + 1. States
//! beyond the threshold are indistinguishable to the certificate
//! conditions, so saturation keeps the counter dimension finite.

use std::collections::BTreeSet;

use dra_core::{disjunct_premises, guard_dnf, Dra, DraError};
use pts_core::{LocId, Poly, Predicate, Pts, PtsState, Rat};
use rand::Rng;
use thiserror::Error;

#[derive(Error, Debug)]
pub enum ProductError {
    #[error("initial valuation lies outside the declared support")]
    OutsideSupport,
    #[error(transparent)]
    Dra(#[from] DraError),
    #[error(transparent)]
    Model(#[from] pts_core::PtsError),
}

/// Which visitation pattern the tick counter tracks.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum CounterMode {
    /// Counter increments on every step entering U: it reaches cap+1 when
    /// U was visited more than cap times.
    Fov,
    /// Counter resets on entering U and increments otherwise: it reaches
    /// cap+1 when U was missed more than cap consecutive steps.
    Iov,
}

/// A product state: PTS state, automaton state, counter value.
#[derive(Clone, PartialEq, Debug)]
pub struct ProductState {
    pub pts: PtsState,
    pub q: usize,
    pub counter: u32,
}

/// The product system over a tracked automaton state set.
#[derive(Clone)]
pub struct ProductSystem<'a> {
    pub pts: &'a Pts,
    pub dra: &'a Dra,
    pub tracked: BTreeSet<usize>,
    pub mode: CounterMode,
    /// Counter cap; the counter saturates at cap + 1.
    pub k: u32,
}

/// One symbolic product edge: a fork of a PTS transition combined with one
/// conjunctive disjunct of a DRA edge guard, at a fixed counter value.
#[derive(Clone, Debug)]
pub struct SymbolicEdge {
    pub loc: LocId,
    pub q: usize,
    pub counter: u32,
    /// Closed premise: location invariant, transition guard, and the DRA
    /// disjunct atoms, all as non-strict comparisons over program variables.
    pub premise: Vec<Poly>,
    /// Identifies the (transition, dra-edge, disjunct-variant) group this
    /// fork belongs to; forks of one group share premise and successor
    /// (q', l').
    pub group: usize,
    pub prob: Rat,
    pub update: Vec<Poly>,
    pub dest_loc: LocId,
    pub q_next: usize,
    pub counter_next: u32,
}

/// Grouped form of the symbolic edges: one entry per (location, automaton
/// state, counter, transition, DRA disjunct), carrying every fork.
#[derive(Clone, Debug)]
pub struct EdgeGroup {
    pub loc: LocId,
    pub q: usize,
    pub counter: u32,
    pub premise: Vec<Poly>,
    pub q_next: usize,
    pub counter_next: u32,
    pub forks: Vec<(Rat, Vec<Poly>, LocId)>,
    pub label: String,
}

impl<'a> ProductSystem<'a> {
    pub fn new(
        pts: &'a Pts,
        dra: &'a Dra,
        tracked: BTreeSet<usize>,
        mode: CounterMode,
        k: u32,
    ) -> Self {
        ProductSystem {
            pts,
            dra,
            tracked,
            mode,
            k,
        }
    }

    /// Counter update given whether the successor automaton state is in U.
    pub fn counter_next(&self, counter: u32, enters_tracked: bool) -> u32 {
        let cap = self.k + 1;
        match self.mode {
            CounterMode::Fov => {
                if enters_tracked {
                    (counter + 1).min(cap)
                } else {
                    counter
                }
            }
            CounterMode::Iov => {
                if enters_tracked {
                    0
                } else {
                    (counter + 1).min(cap)
                }
            }
        }
    }

    /// The initial product state for a concrete initial valuation.
    pub fn initial(&self, v0: Vec<f64>) -> Result<ProductState, ProductError> {
        if !pts_core::predicate_holds_f64(&self.pts.init.support, &v0) {
            return Err(ProductError::OutsideSupport);
        }
        Ok(ProductState {
            pts: PtsState {
                loc: self.pts.l_init,
                vals: v0,
            },
            q: self.dra.initial,
            counter: 0,
        })
    }

    pub fn sample_initial(&self, rng: &mut impl Rng) -> ProductState {
        ProductState {
            pts: self.pts.sample_initial(rng),
            q: self.dra.initial,
            counter: 0,
        }
    }

    /// One concrete product step: the automaton reads the letter of the
    /// pre-step state, then the PTS moves.
    pub fn step(&self, x: &ProductState, rng: &mut impl Rng) -> ProductState {
        let letter = self.dra.evaluate_label(&x.pts);
        let q_next = self
            .dra
            .step(x.q, letter)
            .expect("validated automaton is complete");
        let pts_next = self.pts.concrete_step(&x.pts, rng);
        let counter = self.counter_next(x.counter, self.tracked.contains(&q_next));
        ProductState {
            pts: pts_next,
            q: q_next,
            counter,
        }
    }

    /// Full symbolic enumeration over locations, automaton states, counter
    /// values 0..=k+1, PTS branches, and DRA edge disjuncts. Premises are
    /// closed comparisons including the location invariant.
    pub fn symbolic_edges(&self) -> Vec<SymbolicEdge> {
        let mut out = Vec::new();
        for g in self.edge_groups() {
            let group_id = out.len();
            for (prob, update, dest) in &g.forks {
                out.push(SymbolicEdge {
                    loc: g.loc,
                    q: g.q,
                    counter: g.counter,
                    premise: g.premise.clone(),
                    group: group_id,
                    prob: prob.clone(),
                    update: update.clone(),
                    dest_loc: *dest,
                    q_next: g.q_next,
                    counter_next: g.counter_next,
                });
            }
        }
        out
    }

    /// Symbolic edges grouped by shared premise and successor, one group
    /// per (location, automaton state, counter, transition, disjunct
    /// variant). Deterministic ordering.
    pub fn edge_groups(&self) -> Vec<EdgeGroup> {
        let mut out = Vec::new();
        for loc in 0..self.pts.loc_names.len() {
            // branches grouped back into their owning transition
            let branches = self.pts.symbolic_branches(loc);
            let mut by_transition: Vec<(Option<usize>, Predicate, Vec<(Rat, Vec<Poly>, LocId)>)> =
                Vec::new();
            for b in branches {
                match by_transition.iter_mut().find(|(t, _, _)| *t == b.transition_idx) {
                    Some((_, _, forks)) => forks.push((b.prob, b.update, b.dest)),
                    None => by_transition.push((
                        b.transition_idx,
                        b.guard,
                        vec![(b.prob, b.update, b.dest)],
                    )),
                }
            }
            for q in 0..self.dra.n_states {
                for (edge_idx, edge) in self.dra.edges[q].iter().enumerate() {
                    let enters = self.tracked.contains(&edge.dest);
                    for (disjunct_idx, disjunct) in guard_dnf(&edge.guard).iter().enumerate() {
                        for (variant_idx, dra_atoms) in
                            disjunct_premises(disjunct, &self.dra.aps).iter().enumerate()
                        {
                            for (t_idx, guard, forks) in &by_transition {
                                for counter in 0..=self.k + 1 {
                                    let ints = &self.pts.var_ints;
                                    let mut premise: Vec<Poly> = Vec::new();
                                    for c in &self.pts.invariants[loc] {
                                        premise.extend(c.closure_gap(ints));
                                    }
                                    for c in guard {
                                        premise.extend(c.closure_gap(ints));
                                    }
                                    for c in dra_atoms {
                                        premise.extend(c.closure_gap(ints));
                                    }
                                    out.push(EdgeGroup {
                                        loc,
                                        q,
                                        counter,
                                        premise,
                                        q_next: edge.dest,
                                        counter_next: self.counter_next(counter, enters),
                                        forks: forks.clone(),
                                        label: format!(
                                            "loc={} q={} l={} t={:?} e={} d={}.{}",
                                            self.pts.loc_names[loc],
                                            q,
                                            counter,
                                            t_idx,
                                            edge_idx,
                                            disjunct_idx,
                                            variant_idx,
                                        ),
                                    });
                                }
                            }
                        }
                    }
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use pts_core::rat;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const RE2: &str = r#"
vars: x, n
init: x := 0, n := 0
invariant: x >= 0 and x <= 1 and n >= 0
while x = 0 do
  n := n + 1;
  if flip(0.5) then
    x := 1 - x
od
"#;

    const RE2_DRA: &str = r#"
property: reach x=1 while n stays small;
ap hit := x = 1;
ap low := n <= 3;
states 2;
initial 0;
edge 0 : hit & low -> 1;
edge 0 : !hit | !low -> 0;
edge 1 : true -> 1;
pair E={} F={1};
"#;

    fn setup() -> (pts_core::Pts, Dra) {
        let (_, pts) = ppl_frontend::load_program(RE2).unwrap();
        let dra = dra_core::parse_dra(RE2_DRA, &pts.var_names).unwrap();
        (pts, dra)
    }

    #[test]
    fn initial_state_shape() {
        let (pts, dra) = setup();
        let psys = ProductSystem::new(&pts, &dra, [1].into(), CounterMode::Fov, 3);
        let x0 = psys.initial(vec![0.0, 0.0]).unwrap();
        assert_eq!(x0.pts.loc, pts.l_init);
        assert_eq!(x0.q, 0);
        assert_eq!(x0.counter, 0);
        // outside the declared support
        assert!(matches!(
            psys.initial(vec![2.0, 0.0]),
            Err(ProductError::OutsideSupport)
        ));
    }

    #[test]
    fn counter_rules() {
        let (pts, dra) = setup();
        let fov = ProductSystem::new(&pts, &dra, [1].into(), CounterMode::Fov, 3);
        assert_eq!(fov.counter_next(2, true), 3);
        assert_eq!(fov.counter_next(2, false), 2);
        // saturation at k+1
        assert_eq!(fov.counter_next(4, true), 4);
        let iov = ProductSystem::new(&pts, &dra, [1].into(), CounterMode::Iov, 3);
        assert_eq!(iov.counter_next(3, true), 0);
        assert_eq!(iov.counter_next(3, false), 4);
        assert_eq!(iov.counter_next(4, false), 4);
    }

    #[test]
    fn fov_counter_is_monotone_along_traces() {
        let (pts, dra) = setup();
        let psys = ProductSystem::new(&pts, &dra, [1].into(), CounterMode::Fov, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..200 {
            let mut x = psys.sample_initial(&mut rng);
            let mut prev = x.counter;
            for _ in 0..60 {
                x = psys.step(&x, &mut rng);
                assert!(x.counter >= prev);
                assert!(x.counter <= 3);
                prev = x.counter;
            }
        }
    }

    #[test]
    fn iov_counter_resets_exactly_on_tracked_entry(){
        let (pts, dra) = setup();
        let psys = ProductSystem::new(&pts, &dra, [1].into(), CounterMode::Iov, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for _ in 0..200 {
            let mut x = psys.sample_initial(&mut rng);
            for _ in 0..60 {
                let letter = psys.dra.evaluate_label(&x.pts);
                let q_next = psys.dra.step(x.q, letter).unwrap();
                let next = psys.step(&x, &mut rng);
                assert_eq!(next.q, q_next);
                if psys.tracked.contains(&q_next) {
                    assert_eq!(next.counter, 0);
                } else {
                    assert_eq!(next.counter, (x.counter + 1).min(4));
                }
                x = next;
            }
        }
    }

    #[test]
    fn edge_count_matches_combinatorial_formula() {
        let (pts, dra) = setup();
        for k in [0u32, 2] {
            let psys = ProductSystem::new(&pts, &dra, [1].into(), CounterMode::Fov, k);
            let edges = psys.symbolic_edges();
            // independent count: per location, transitions x forks; per DRA
            // state, edges expanded to disjunct variants; counter values k+2
            let mut expected = 0usize;
            for loc in 0..pts.loc_names.len() {
                let branch_count = pts.symbolic_branches(loc).len();
                let mut dra_variants = 0usize;
                for q in 0..dra.n_states {
                    for e in &dra.edges[q] {
                        for d in guard_dnf(&e.guard) {
                            dra_variants += disjunct_premises(&d, &dra.aps).len();
                        }
                    }
                }
                expected += branch_count * dra_variants * (k as usize + 2);
            }
            assert_eq!(edges.len(), expected);
        }
    }

    #[test]
    fn universal_automaton_single_location_count() {
        // one-location PTS (terminal only reached immediately): use the
        // smallest program; universal DRA; k=0 gives branches x 2 counters
        let (_, pts) = ppl_frontend::load_program("vars: x\ninit: x := 0\nskip").unwrap();
        let dra = Dra::universal(vec![]);
        let psys = ProductSystem::new(&pts, &dra, BTreeSet::new(), CounterMode::Fov, 0);
        let edges = psys.symbolic_edges();
        let branches: usize = (0..pts.loc_names.len())
            .map(|l| pts.symbolic_branches(l).len())
            .sum();
        assert_eq!(edges.len(), branches * 2);
    }

    #[test]
    fn premises_are_closed_and_include_invariants() {
        let (pts, dra) = setup();
        let psys = ProductSystem::new(&pts, &dra, [1].into(), CounterMode::Fov, 1);
        for g in psys.edge_groups() {
            for (prob, _, _) in &g.forks {
                assert!(*prob > rat(0, 1));
            }
            // the loop head invariant has 3 atoms, all closed into the premise
            if g.loc == pts.l_init {
                assert!(g.premise.len() >= 3);
            }
        }
    }
}
