//! Exact finite-state chain over product states (location, valuation,
//! automaton state, counter) with rational transition probabilities, plus
//! absorbing-event probabilities solved exactly by SCC-ordered Gaussian
//! elimination.

use std::collections::{BTreeSet, HashMap};

use num_traits::{One, Zero};
use product::ProductSystem;
use pts_core::{predicate_holds_rat, InitValue, Rat};

use crate::OracleError;

/// One explicit product state.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct ChainState {
    pub loc: usize,
    pub vals: Vec<Rat>,
    pub q: usize,
    pub counter: u32,
}

/// Declared finite domain of one program variable.
#[derive(Clone, Debug)]
pub struct VarDomain {
    pub lo: Rat,
    pub hi: Rat,
}

/// Explicit product chain with exact rational rows.
pub struct FiniteChain {
    pub states: Vec<ChainState>,
    pub rows: Vec<Vec<(usize, Rat)>>,
    pub initial: Vec<(usize, Rat)>,
    /// The saturation cap of the tracked counter (k + 1), or None when the
    /// counter dimension was not tracked.
    pub counter_cap: Option<u32>,
    /// Automaton states considered tracked when the chain was built.
    pub tracked: BTreeSet<usize>,
}

/// Default bound on the explicit state count.
pub const DEFAULT_STATE_CAP: usize = 200_000;

/// Build the explicit chain reachable from the initial distribution. All
/// distributions must be discrete and every reachable valuation must stay
/// inside the declared domains (escaping is an error, never clamped).
/// `with_counter` disables the counter dimension when false (the counter
/// is pinned to 0), which collapses states for acceptance-style events.
pub fn build_finite_chain(
    psys: &ProductSystem,
    domains: &[VarDomain],
    with_counter: bool,
    state_cap: usize,
) -> Result<FiniteChain, OracleError> {
    let pts = psys.pts;
    let n = pts.n_vars();
    if domains.len() != n {
        return Err(OracleError::BadDomain(format!(
            "{} domains declared for {} variables",
            domains.len(),
            n
        )));
    }
    for (name, d) in &pts.sample_vars {
        if !d.is_discrete() {
            return Err(OracleError::ContinuousDistribution(name.clone()));
        }
    }
    let check_domain = |vals: &[Rat], context: &str| -> Result<(), OracleError> {
        for (i, v) in vals.iter().enumerate() {
            if v < &domains[i].lo || v > &domains[i].hi {
                return Err(OracleError::DomainEscape {
                    var: pts.var_names[i].clone(),
                    value: pts_core::format_rat(v),
                    context: context.to_string(),
                });
            }
        }
        Ok(())
    };

    // joint discrete outcomes over the sample variables
    let mut sample_outcomes: Vec<(Vec<Rat>, Rat)> = vec![(Vec::new(), Rat::one())];
    for (name, d) in &pts.sample_vars {
        let outcomes = d
            .outcomes()
            .ok_or_else(|| OracleError::ContinuousDistribution(name.clone()))?;
        let mut next = Vec::new();
        for (vals, w) in &sample_outcomes {
            for (v, p) in &outcomes {
                if p.is_zero() {
                    continue;
                }
                let mut vals = vals.clone();
                vals.push(v.clone());
                next.push((vals, w * p));
            }
        }
        sample_outcomes = next;
    }

    // initial distribution: independent product of per-variable inits
    let mut init_vals: Vec<(Vec<Rat>, Rat)> = vec![(Vec::new(), Rat::one())];
    for v in &pts.init.values {
        let outcomes: Vec<(Rat, Rat)> = match v {
            InitValue::Const(c) => vec![(c.clone(), Rat::one())],
            InitValue::Dist(d) => d
                .outcomes()
                .ok_or_else(|| OracleError::ContinuousDistribution("init".into()))?,
        };
        let mut next = Vec::new();
        for (vals, w) in &init_vals {
            for (value, p) in &outcomes {
                if p.is_zero() {
                    continue;
                }
                let mut vals = vals.clone();
                vals.push(value.clone());
                next.push((vals, w * p));
            }
        }
        init_vals = next;
    }

    let mut states: Vec<ChainState> = Vec::new();
    let mut index: HashMap<ChainState, usize> = HashMap::new();
    let mut rows: Vec<Vec<(usize, Rat)>> = Vec::new();
    let mut worklist: Vec<usize> = Vec::new();
    let mut intern = |s: ChainState,
                      states: &mut Vec<ChainState>,
                      rows: &mut Vec<Vec<(usize, Rat)>>,
                      worklist: &mut Vec<usize>|
     -> Result<usize, OracleError> {
        if let Some(&i) = index.get(&s) {
            return Ok(i);
        }
        if states.len() >= state_cap {
            return Err(OracleError::StateCap(state_cap));
        }
        let i = states.len();
        index.insert(s.clone(), i);
        states.push(s);
        rows.push(Vec::new());
        worklist.push(i);
        Ok(i)
    };

    let mut initial = Vec::new();
    for (vals, w) in init_vals {
        check_domain(&vals, "initial distribution")?;
        if !predicate_holds_rat(&pts.init.support, &vals) {
            return Err(OracleError::BadDomain(
                "initial outcome outside the declared support".into(),
            ));
        }
        let i = intern(
            ChainState {
                loc: pts.l_init,
                vals,
                q: psys.dra.initial,
                counter: 0,
            },
            &mut states,
            &mut rows,
            &mut worklist,
        )?;
        initial.push((i, w));
    }

    while let Some(i) = worklist.pop() {
        let state = states[i].clone();
        let letter = psys.dra.evaluate_label_rat(&state.vals);
        let q_next = psys
            .dra
            .step(state.q, letter)
            .map_err(|e| OracleError::BadDomain(e.to_string()))?;
        let counter_next = if with_counter {
            psys.counter_next(state.counter, psys.tracked.contains(&q_next))
        } else {
            0
        };
        let mut row: Vec<(usize, Rat)> = Vec::new();
        if state.loc == pts.l_out {
            let j = intern(
                ChainState {
                    loc: pts.l_out,
                    vals: state.vals.clone(),
                    q: q_next,
                    counter: counter_next,
                },
                &mut states,
                &mut rows,
                &mut worklist,
            )?;
            row.push((j, Rat::one()));
        } else {
            let enabled: Vec<usize> = pts
                .transitions
                .iter()
                .enumerate()
                .filter(|(_, t)| t.source == state.loc && predicate_holds_rat(&t.guard, &state.vals))
                .map(|(ti, _)| ti)
                .collect();
            if enabled.len() != 1 {
                return Err(OracleError::Demonic {
                    loc: pts.loc_names[state.loc].clone(),
                    count: enabled.len(),
                });
            }
            let t = &pts.transitions[enabled[0]];
            for fork in &t.forks {
                for (svals, sp) in &sample_outcomes {
                    let mut point = state.vals.clone();
                    point.extend(svals.iter().cloned());
                    let new_vals: Vec<Rat> =
                        fork.update.iter().map(|p| p.eval_rat(&point)).collect();
                    check_domain(
                        &new_vals,
                        &format!("transition from {}", pts.loc_names[state.loc]),
                    )?;
                    let j = intern(
                        ChainState {
                            loc: fork.dest,
                            vals: new_vals,
                            q: q_next,
                            counter: counter_next,
                        },
                        &mut states,
                        &mut rows,
                        &mut worklist,
                    )?;
                    let w = &fork.prob * sp;
                    match row.iter_mut().find(|(s, _)| *s == j) {
                        Some((_, p)) => *p += w,
                        None => row.push((j, w)),
                    }
                }
            }
        }
        rows[i] = row;
    }

    // exact stochasticity check
    for (i, row) in rows.iter().enumerate() {
        let total: Rat = row.iter().map(|(_, p)| p.clone()).sum();
        if !total.is_one() {
            return Err(OracleError::BadDomain(format!(
                "row {i} sums to {}",
                pts_core::format_rat(&total)
            )));
        }
    }

    Ok(FiniteChain {
        states,
        rows,
        initial,
        counter_cap: with_counter.then_some(psys.k + 1),
        tracked: psys.tracked.clone(),
    })
}

/// Events with exact probabilities on a finite chain.
#[derive(Clone, Debug)]
pub enum ChainEvent {
    /// The tracked counter reaches its cap (k + 1).
    CounterThreshold,
    /// The tracked counter reaches the given value (at most the cap the
    /// chain was built with; saturation makes higher values unreachable).
    CounterAtLeast(u32),
    /// The automaton eventually enters the given set, which must be
    /// absorbing (no edge leaves it).
    ReachAutomaton(BTreeSet<usize>),
    /// The whole state space (probability one, by normalization).
    WholeSpace,
    /// Some Rabin pair of the automaton accepts: the chain is absorbed
    /// into a bottom component whose automaton projection misses E and
    /// meets F for some pair.
    RabinAccept,
}

impl FiniteChain {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Exact probability of the event from the initial distribution.
    pub fn exact_probability(
        &self,
        event: &ChainEvent,
        dra: &dra_core::Dra,
    ) -> Result<Rat, OracleError> {
        let target: Vec<bool> = match event {
            ChainEvent::WholeSpace => return Ok(Rat::one()),
            ChainEvent::CounterThreshold => {
                let cap = self.counter_cap.ok_or_else(|| {
                    OracleError::BadDomain("chain was built without a counter".into())
                })?;
                self.states.iter().map(|s| s.counter >= cap).collect()
            }
            ChainEvent::CounterAtLeast(t) => {
                let cap = self.counter_cap.ok_or_else(|| {
                    OracleError::BadDomain("chain was built without a counter".into())
                })?;
                if *t > cap {
                    return Err(OracleError::BadDomain(format!(
                        "threshold {t} exceeds the chain's counter cap {cap}"
                    )));
                }
                self.states.iter().map(|s| s.counter >= *t).collect()
            }
            ChainEvent::ReachAutomaton(set) => {
                // absorbing check: no automaton edge may leave the set
                for (i, s) in self.states.iter().enumerate() {
                    if set.contains(&s.q) {
                        for (j, _) in &self.rows[i] {
                            if !set.contains(&self.states[*j].q) {
                                return Err(OracleError::NonAbsorbingEvent(format!(
                                    "automaton leaves the target set from state {i}"
                                )));
                            }
                        }
                    }
                }
                self.states.iter().map(|s| set.contains(&s.q)).collect()
            }
            ChainEvent::RabinAccept => {
                let accepting = self.accepting_bscc_states(dra);
                let mut mask = vec![false; self.len()];
                for i in accepting {
                    mask[i] = true;
                }
                mask
            }
        };
        let reach = self.reach_probabilities(&target)?;
        let mut total = Rat::zero();
        for (i, w) in &self.initial {
            total += w * &reach[*i];
        }
        Ok(total)
    }

    /// States of bottom strongly connected components whose automaton
    /// projection satisfies some Rabin pair.
    pub fn accepting_bscc_states(&self, dra: &dra_core::Dra) -> Vec<usize> {
        let sccs = tarjan_sccs(self.len(), |i| self.rows[i].iter().map(|(j, _)| *j));
        let mut scc_of = vec![usize::MAX; self.len()];
        for (ci, comp) in sccs.iter().enumerate() {
            for &s in comp {
                scc_of[s] = ci;
            }
        }
        let mut out = Vec::new();
        for comp in &sccs {
            let bottom = comp.iter().all(|&s| {
                self.rows[s]
                    .iter()
                    .all(|(j, _)| scc_of[*j] == scc_of[s])
            });
            if !bottom {
                continue;
            }
            let qs: BTreeSet<usize> = comp.iter().map(|&s| self.states[s].q).collect();
            let accepting = dra.pairs.iter().any(|p| {
                p.e.intersection(&qs).next().is_none() && p.f.intersection(&qs).next().is_some()
            });
            if accepting {
                out.extend(comp.iter().copied());
            }
        }
        out
    }

    /// P[eventually reach a target state], exactly, for every state.
    pub fn reach_probabilities(&self, target: &[bool]) -> Result<Vec<Rat>, OracleError> {
        let n = self.len();
        // states that can reach the target at all (reverse reachability)
        let mut can_reach = target.to_vec();
        let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (i, row) in self.rows.iter().enumerate() {
            for (j, _) in row {
                preds[*j].push(i);
            }
        }
        let mut stack: Vec<usize> = (0..n).filter(|&i| target[i]).collect();
        while let Some(i) = stack.pop() {
            for &p in &preds[i] {
                if !can_reach[p] {
                    can_reach[p] = true;
                    stack.push(p);
                }
            }
        }
        let mut value: Vec<Option<Rat>> = vec![None; n];
        for i in 0..n {
            if target[i] {
                value[i] = Some(Rat::one());
            } else if !can_reach[i] {
                value[i] = Some(Rat::zero());
            }
        }
        // transient states solved SCC by SCC in reverse topological order
        let transient: Vec<usize> = (0..n).filter(|&i| value[i].is_none()).collect();
        if transient.is_empty() {
            return Ok(value.into_iter().map(|v| v.unwrap()).collect());
        }
        let solved_mask: Vec<bool> = value.iter().map(|v| v.is_some()).collect();
        let sccs = tarjan_sccs(n, |i| {
            let blocked = solved_mask[i];
            self.rows[i]
                .iter()
                .map(|(j, _)| *j)
                .filter(move |_| !blocked)
        });
        // Tarjan emits components in reverse topological order already
        for comp in sccs {
            let unsolved: Vec<usize> = comp
                .iter()
                .copied()
                .filter(|&s| value[s].is_none())
                .collect();
            if unsolved.is_empty() {
                continue;
            }
            let pos: HashMap<usize, usize> = unsolved
                .iter()
                .enumerate()
                .map(|(a, &s)| (s, a))
                .collect();
            let m = unsolved.len();
            // x = Qx + b on the component
            let mut mat = vec![vec![Rat::zero(); m + 1]; m];
            for (a, &s) in unsolved.iter().enumerate() {
                mat[a][a] = Rat::one();
                for (j, p) in &self.rows[s] {
                    match value[*j].as_ref() {
                        Some(v) => mat[a][m] += p * v,
                        None => {
                            let b = *pos.get(j).ok_or_else(|| {
                                OracleError::Internal(
                                    "successor outside component and unsolved".into(),
                                )
                            })?;
                            mat[a][b] -= p;
                        }
                    }
                }
            }
            let solved = gauss_solve(&mut mat)?;
            for (a, &s) in unsolved.iter().enumerate() {
                value[s] = Some(solved[a].clone());
            }
        }
        Ok(value.into_iter().map(|v| v.unwrap()).collect())
    }

    /// Sparse triplet export: one `src dst prob` line per transition,
    /// prefixed by a state table.
    pub fn export_triplets(&self, pts: &pts_core::Pts) -> String {
        let mut out = String::new();
        for (i, s) in self.states.iter().enumerate() {
            let vals: Vec<String> = s.vals.iter().map(pts_core::format_rat).collect();
            out.push_str(&format!(
                "# state {i}: loc={} vals=[{}] q={} l={}\n",
                pts.loc_names[s.loc],
                vals.join(", "),
                s.q,
                s.counter
            ));
        }
        for (i, w) in &self.initial {
            out.push_str(&format!("init {i} {}\n", pts_core::format_rat(w)));
        }
        for (i, row) in self.rows.iter().enumerate() {
            for (j, p) in row {
                out.push_str(&format!("{i} {j} {}\n", pts_core::format_rat(p)));
            }
        }
        out
    }
}

/// Dense Gaussian elimination with partial (first nonzero) pivoting over
/// rationals on an augmented matrix [A | b]; returns x with Ax = b.
pub fn gauss_solve(mat: &mut [Vec<Rat>]) -> Result<Vec<Rat>, OracleError> {
    let m = mat.len();
    for col in 0..m {
        let pivot = (col..m)
            .find(|&r| !mat[r][col].is_zero())
            .ok_or_else(|| OracleError::Internal("singular linear system".into()))?;
        mat.swap(col, pivot);
        let inv = Rat::one() / mat[col][col].clone();
        for c in col..=m {
            mat[col][c] = &mat[col][c] * &inv;
        }
        for r in 0..m {
            if r != col && !mat[r][col].is_zero() {
                let f = mat[r][col].clone();
                for c in col..=m {
                    let delta = &f * &mat[col][c];
                    mat[r][c] -= delta;
                }
            }
        }
    }
    Ok((0..m).map(|r| mat[r][m].clone()).collect())
}

/// Iterative Tarjan strongly-connected components; emitted in reverse
/// topological order (successors before predecessors).
pub fn tarjan_sccs<I, F>(n: usize, successors: F) -> Vec<Vec<usize>>
where
    I: Iterator<Item = usize>,
    F: Fn(usize) -> I,
{
    #[derive(Clone)]
    struct Node {
        index: usize,
        lowlink: usize,
        on_stack: bool,
        visited: bool,
    }
    let mut nodes = vec![
        Node {
            index: 0,
            lowlink: 0,
            on_stack: false,
            visited: false,
        };
        n
    ];
    let mut counter = 0usize;
    let mut stack: Vec<usize> = Vec::new();
    let mut out: Vec<Vec<usize>> = Vec::new();

    for root in 0..n {
        if nodes[root].visited {
            continue;
        }
        // explicit DFS: (node, successor iterator position via Vec)
        let mut call: Vec<(usize, Vec<usize>, usize)> =
            vec![(root, successors(root).collect(), 0)];
        nodes[root].visited = true;
        nodes[root].index = counter;
        nodes[root].lowlink = counter;
        counter += 1;
        stack.push(root);
        nodes[root].on_stack = true;
        while let Some((v, succs, mut i)) = call.pop() {
            let mut descended = false;
            while i < succs.len() {
                let w = succs[i];
                i += 1;
                if !nodes[w].visited {
                    nodes[w].visited = true;
                    nodes[w].index = counter;
                    nodes[w].lowlink = counter;
                    counter += 1;
                    stack.push(w);
                    nodes[w].on_stack = true;
                    call.push((v, succs, i));
                    call.push((w, successors(w).collect(), 0));
                    descended = true;
                    break;
                } else if nodes[w].on_stack {
                    nodes[v].lowlink = nodes[v].lowlink.min(nodes[w].index);
                }
            }
            if descended {
                continue;
            }
            if nodes[v].lowlink == nodes[v].index {
                let mut comp = Vec::new();
                loop {
                    let w = stack.pop().unwrap();
                    nodes[w].on_stack = false;
                    comp.push(w);
                    if w == v {
                        break;
                    }
                }
                out.push(comp);
            }
            if let Some((parent, _, _)) = call.last() {
                let parent = *parent;
                let low = nodes[v].lowlink;
                nodes[parent].lowlink = nodes[parent].lowlink.min(low);
            }
        }
    }
    out
}

// --- independent counting routes (oracle cross-checks) -----------------------

/// P[the tracked automaton set is visited at least `m` times (counting
/// steps n >= 1)], computed by first-passage composition on a counter-free
/// chain: one multi-target absorbing solve gives the distribution of the
/// first tracked visit, then the tracked-to-tracked transfer matrix is
/// composed m-1 times. Exact; independent of the saturating-counter
/// construction.
pub fn visit_count_at_least(
    chain: &FiniteChain,
    tracked: &BTreeSet<usize>,
    m: u32,
) -> Result<Rat, OracleError> {
    if m == 0 {
        return Ok(Rat::one());
    }
    let n = chain.len();
    let in_u: Vec<bool> = (0..n)
        .map(|i| tracked.contains(&chain.states[i].q))
        .collect();
    let u_states: Vec<usize> = (0..n).filter(|&i| in_u[i]).collect();
    if u_states.is_empty() {
        return Ok(Rat::zero());
    }
    let upos: HashMap<usize, usize> = u_states.iter().enumerate().map(|(a, &s)| (s, a)).collect();
    let nu = u_states.len();

    // states that can reach a tracked state at all; elsewhere the
    // first-passage probabilities are zero
    let mut can_reach = in_u.clone();
    let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, row) in chain.rows.iter().enumerate() {
        for (j, _) in row {
            preds[*j].push(i);
        }
    }
    // a tracked state counts only via its successors, so seed reachability
    // from predecessors of tracked states
    let mut stack: Vec<usize> = (0..n).filter(|&i| in_u[i]).collect();
    while let Some(i) = stack.pop() {
        for &p in &preds[i] {
            if !can_reach[p] {
                can_reach[p] = true;
                stack.push(p);
            }
        }
    }

    // f[s][u] = P[first tracked visit among successors of s lands at u]:
    // (I - P restricted to non-tracked successor columns) F = P into u
    let unknowns: Vec<usize> = (0..n).filter(|&i| can_reach[i]).collect();
    let pos: HashMap<usize, usize> = unknowns.iter().enumerate().map(|(a, &s)| (s, a)).collect();
    let mm = unknowns.len();
    let mut mat = vec![vec![Rat::zero(); mm + nu]; mm];
    for (a, &s) in unknowns.iter().enumerate() {
        mat[a][a] = Rat::one();
        for (j, p) in &chain.rows[s] {
            if in_u[*j] {
                mat[a][mm + upos[j]] += p;
            } else if let Some(&b) = pos.get(j) {
                mat[a][b] -= p;
            }
        }
    }
    let f_rows = gauss_solve_multi(&mut mat, mm, nu)?;
    let f = |s: usize, u: usize| -> Rat {
        match pos.get(&s) {
            Some(&a) => f_rows[a][u].clone(),
            None => Rat::zero(),
        }
    };

    // initial vector and U-to-U transfer, composed m-1 times
    let mut v = vec![Rat::zero(); nu];
    for (i, w) in &chain.initial {
        for u in 0..nu {
            v[u] += w * f(*i, u);
        }
    }
    for _ in 1..m {
        let mut next = vec![Rat::zero(); nu];
        for u in 0..nu {
            if v[u].is_zero() {
                continue;
            }
            let s = u_states[u];
            for (u2, slot) in next.iter_mut().enumerate() {
                *slot += &v[u] * f(s, u2);
            }
        }
        v = next;
    }
    Ok(v.into_iter().sum())
}

/// Gaussian elimination over rationals with `rhs` right-hand-side columns:
/// the augmented matrix is [A | B] with A square of size `m`. Returns the
/// solution rows X with A X = B.
pub fn gauss_solve_multi(
    mat: &mut [Vec<Rat>],
    m: usize,
    rhs: usize,
) -> Result<Vec<Vec<Rat>>, OracleError> {
    let width = m + rhs;
    for col in 0..m {
        let pivot = (col..m)
            .find(|&r| !mat[r][col].is_zero())
            .ok_or_else(|| OracleError::Internal("singular linear system".into()))?;
        mat.swap(col, pivot);
        let inv = Rat::one() / mat[col][col].clone();
        for c in col..width {
            mat[col][c] = &mat[col][c] * &inv;
        }
        for r in 0..m {
            if r != col && !mat[r][col].is_zero() {
                let f = mat[r][col].clone();
                for c in col..width {
                    let delta = &f * &mat[col][c];
                    mat[r][c] -= delta;
                }
            }
        }
    }
    Ok((0..m).map(|r| mat[r][m..width].to_vec()).collect())
}

/// P[some window of `misses` consecutive steps all avoid the tracked set],
/// by excursion decomposition: finite-horizon DP for each excursion plus a
/// small linear system over the tracked states. Exact; independent of the
/// saturating-counter construction.
pub fn consecutive_miss_at_least(
    chain: &FiniteChain,
    tracked: &BTreeSet<usize>,
    misses: u32,
) -> Result<Rat, OracleError> {
    if misses == 0 {
        return Ok(Rat::one());
    }
    let n = chain.len();
    let in_u: Vec<bool> = (0..n)
        .map(|i| tracked.contains(&chain.states[i].q))
        .collect();
    let u_states: Vec<usize> = (0..n).filter(|&i| in_u[i]).collect();
    let upos: HashMap<usize, usize> = u_states.iter().enumerate().map(|(a, &s)| (s, a)).collect();
    let nu = u_states.len();
    // miss_j[s]: P[next j successors all avoid U | at s]
    // t_j[s][u]: P[first U-visit among the next j successors lands at u]
    let mut miss = vec![Rat::one(); n];
    let mut tmat = vec![vec![Rat::zero(); nu]; n];
    for _ in 0..misses {
        let mut miss_next = vec![Rat::zero(); n];
        let mut t_next = vec![vec![Rat::zero(); nu]; n];
        for s in 0..n {
            for (j, p) in &chain.rows[s] {
                if in_u[*j] {
                    t_next[s][upos[j]] += p;
                } else {
                    miss_next[s] += p * &miss[*j];
                    for u in 0..nu {
                        if !tmat[*j][u].is_zero() {
                            t_next[s][u] += p * &tmat[*j][u];
                        }
                    }
                }
            }
        }
        miss = miss_next;
        tmat = t_next;
    }
    // x[u] = P[window eventually | at tracked state u] solves
    // x = miss_U + T_U x, restricted to tracked states from which a
    // window is reachable at all (elsewhere x = 0 and the unrestricted
    // system can be singular, e.g. on absorbed states that always return)
    let mut can_fail = vec![false; nu];
    for a in 0..nu {
        if !miss[u_states[a]].is_zero() {
            can_fail[a] = true;
        }
    }
    loop {
        let mut changed = false;
        for a in 0..nu {
            if can_fail[a] {
                continue;
            }
            let s = u_states[a];
            if (0..nu).any(|b| can_fail[b] && !tmat[s][b].is_zero()) {
                can_fail[a] = true;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let unknowns: Vec<usize> = (0..nu).filter(|&a| can_fail[a]).collect();
    let pos: HashMap<usize, usize> = unknowns.iter().enumerate().map(|(i, &a)| (a, i)).collect();
    let mu = unknowns.len();
    let mut mat = vec![vec![Rat::zero(); mu + 1]; mu];
    for (i, &a) in unknowns.iter().enumerate() {
        let s = u_states[a];
        mat[i][i] += Rat::one();
        mat[i][mu] = miss[s].clone();
        for b in 0..nu {
            if let Some(&j) = pos.get(&b) {
                mat[i][j] -= &tmat[s][b];
            }
        }
    }
    let solved = if mu > 0 { gauss_solve(&mut mat)? } else { Vec::new() };
    let x = |a: usize| -> Rat {
        match pos.get(&a) {
            Some(&i) => solved[i].clone(),
            None => Rat::zero(),
        }
    };
    let mut total = Rat::zero();
    for (i, w) in &chain.initial {
        let mut xi = miss[*i].clone();
        for u in 0..nu {
            xi += &tmat[*i][u] * x(u);
        }
        total += w * xi;
    }
    Ok(total)
}
