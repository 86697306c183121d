//! Compilation correctness against an independent AST interpreter.
//!
//! The oracle executes the AST directly — exact enumeration over rational
//! weights for discrete bounded programs, sampling otherwise — and the
//! compiled PTS must induce the same distribution over terminal valuations.

use std::collections::BTreeMap;

use num_traits::{One, Zero};
use ppl_frontend::{parse_program, compile_to_pts, AstInit, BranchCond, Stmt, StmtKind};
use pts_core::{predicate_holds_rat, rat, rat_int, BoolExpr, Constraint, Poly, Pts, PtsState, Rat};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

type Dist = BTreeMap<Vec<Rat>, Rat>;

// --- independent AST interpreter (exact, discrete, bounded loops) -----------

fn initial_dist(init: &[AstInit]) -> Dist {
    let mut dist: Dist = BTreeMap::new();
    dist.insert(Vec::new(), Rat::one());
    for v in init {
        let outcomes: Vec<(Rat, Rat)> = match v {
            AstInit::Const(c) => vec![(c.clone(), Rat::one())],
            AstInit::Dist(d) => d.outcomes().expect("exact oracle needs discrete init"),
        };
        let mut next: Dist = BTreeMap::new();
        for (vals, w) in &dist {
            for (value, p) in &outcomes {
                if p.is_zero() {
                    continue;
                }
                let mut vals = vals.clone();
                vals.push(value.clone());
                *next.entry(vals).or_insert_with(Rat::zero) += w * p;
            }
        }
        dist = next;
    }
    dist
}

fn exec(stmt: &Stmt, dist: Dist) -> Dist {
    match &stmt.kind {
        StmtKind::Skip => dist,
        StmtKind::Assign { var, expr } => {
            let mut out: Dist = BTreeMap::new();
            for (mut vals, w) in dist {
                vals[*var] = expr.eval_rat(&vals);
                *out.entry(vals).or_insert_with(Rat::zero) += w;
            }
            out
        }
        StmtKind::Sample { var, dist: d } => {
            let outcomes = d.outcomes().expect("exact oracle needs discrete sampling");
            let mut out: Dist = BTreeMap::new();
            for (vals, w) in dist {
                for (value, p) in &outcomes {
                    if p.is_zero() {
                        continue;
                    }
                    let mut vals = vals.clone();
                    vals[*var] = value.clone();
                    *out.entry(vals).or_insert_with(Rat::zero) += &w * p;
                }
            }
            out
        }
        StmtKind::Seq(ss) => ss.iter().fold(dist, |d, s| exec(s, d)),
        StmtKind::If {
            cond,
            then_branch,
            else_branch,
        } => match cond {
            BranchCond::Coin(p) => {
                let then_in = scale(&dist, p);
                let else_in = scale(&dist, &(Rat::one() - p));
                let mut out = exec(then_branch, then_in);
                let else_out = match else_branch {
                    Some(e) => exec(e, else_in),
                    None => else_in,
                };
                merge(&mut out, else_out);
                out
            }
            BranchCond::Bool(c) => {
                let (t, f) = partition(&dist, c);
                let mut out = exec(then_branch, t);
                let else_out = match else_branch {
                    Some(e) => exec(e, f),
                    None => f,
                };
                merge(&mut out, else_out);
                out
            }
        },
        StmtKind::While { cond, body, .. } => {
            let c = match cond {
                BranchCond::Bool(c) => c,
                BranchCond::Coin(_) => panic!("exact oracle needs bounded loops"),
            };
            let mut done: Dist = BTreeMap::new();
            let mut live = dist;
            for _ in 0..100_000 {
                let (t, f) = partition(&live, c);
                merge(&mut done, f);
                if t.is_empty() {
                    return done;
                }
                live = exec(body, t);
            }
            panic!("loop did not terminate in the exact oracle");
        }
    }
}

fn scale(dist: &Dist, p: &Rat) -> Dist {
    if p.is_zero() {
        return BTreeMap::new();
    }
    dist.iter().map(|(v, w)| (v.clone(), w * p)).collect()
}

fn merge(into: &mut Dist, from: Dist) {
    for (v, w) in from {
        *into.entry(v).or_insert_with(Rat::zero) += w;
    }
}

fn partition(dist: &Dist, cond: &BoolExpr<Constraint>) -> (Dist, Dist) {
    let mut t = BTreeMap::new();
    let mut f = BTreeMap::new();
    for (v, w) in dist {
        if cond.eval(&|c: &Constraint| c.holds_rat(v)) {
            t.insert(v.clone(), w.clone());
        } else {
            f.insert(v.clone(), w.clone());
        }
    }
    (t, f)
}

// --- exact PTS executor ------------------------------------------------------

fn joint_sample_outcomes(pts: &Pts) -> Vec<(Vec<Rat>, Rat)> {
    let mut acc: Vec<(Vec<Rat>, Rat)> = vec![(Vec::new(), Rat::one())];
    for (_, d) in &pts.sample_vars {
        let outcomes = d.outcomes().expect("exact executor needs discrete samples");
        let mut next = Vec::new();
        for (vals, w) in &acc {
            for (value, p) in &outcomes {
                if p.is_zero() {
                    continue;
                }
                let mut vals = vals.clone();
                vals.push(value.clone());
                next.push((vals, w * p));
            }
        }
        acc = next;
    }
    acc
}

fn pts_terminal_dist(pts: &Pts) -> Dist {
    let samples = joint_sample_outcomes(pts);
    let mut live: BTreeMap<(usize, Vec<Rat>), Rat> = BTreeMap::new();
    for (vals, w) in initial_dist(
        &pts.init
            .values
            .iter()
            .map(|v| match v {
                pts_core::InitValue::Const(c) => AstInit::Const(c.clone()),
                pts_core::InitValue::Dist(d) => AstInit::Dist(d.clone()),
            })
            .collect::<Vec<_>>(),
    ) {
        live.insert((pts.l_init, vals), w);
    }
    let mut done: Dist = BTreeMap::new();
    for _ in 0..1_000_000 {
        if live.is_empty() {
            return done;
        }
        let mut next: BTreeMap<(usize, Vec<Rat>), Rat> = BTreeMap::new();
        for ((loc, vals), w) in live {
            if loc == pts.l_out {
                *done.entry(vals).or_insert_with(Rat::zero) += w;
                continue;
            }
            let enabled: Vec<&pts_core::Transition> = pts
                .transitions
                .iter()
                .filter(|t| t.source == loc && predicate_holds_rat(&t.guard, &vals))
                .collect();
            assert_eq!(enabled.len(), 1, "no-demonic violation at location {loc}");
            for fork in &enabled[0].forks {
                for (svals, sp) in &samples {
                    let mut point = vals.clone();
                    point.extend(svals.iter().cloned());
                    let new_vals: Vec<Rat> =
                        fork.update.iter().map(|p| p.eval_rat(&point)).collect();
                    let weight = &w * &fork.prob * sp;
                    if weight.is_zero() {
                        continue;
                    }
                    *next
                        .entry((fork.dest, new_vals))
                        .or_insert_with(Rat::zero) += weight;
                }
            }
        }
        live = next;
    }
    panic!("PTS executor did not drain in step bound");
}

// --- sampling interpreters for unbounded programs ----------------------------

fn ast_sample_terminal(ast: &ppl_frontend::ProgramAst, rng: &mut StdRng) -> Vec<f64> {
    fn run(stmt: &Stmt, vals: &mut Vec<f64>, rng: &mut StdRng) {
        match &stmt.kind {
            StmtKind::Skip => {}
            StmtKind::Assign { var, expr } => vals[*var] = expr.eval_f64(vals),
            StmtKind::Sample { var, dist } => vals[*var] = dist.sample_f64(rng),
            StmtKind::Seq(ss) => ss.iter().for_each(|s| run(s, vals, rng)),
            StmtKind::If {
                cond,
                then_branch,
                else_branch,
            } => {
                let take = match cond {
                    BranchCond::Coin(p) => rng.gen::<f64>() < pts_core::rat_to_f64(p),
                    BranchCond::Bool(c) => c.eval(&|a: &Constraint| a.holds_f64(vals)),
                };
                if take {
                    run(then_branch, vals, rng);
                } else if let Some(e) = else_branch {
                    run(e, vals, rng);
                }
            }
            StmtKind::While { cond, body, .. } => loop {
                let go = match cond {
                    BranchCond::Coin(p) => rng.gen::<f64>() < pts_core::rat_to_f64(p),
                    BranchCond::Bool(c) => c.eval(&|a: &Constraint| a.holds_f64(vals)),
                };
                if !go {
                    return;
                }
                run(body, vals, rng);
            },
        }
    }
    let mut vals: Vec<f64> = ast
        .init
        .iter()
        .map(|v| match v {
            AstInit::Const(c) => pts_core::rat_to_f64(c),
            AstInit::Dist(d) => d.sample_f64(rng),
        })
        .collect();
    run(&ast.body, &mut vals, rng);
    vals
}

fn pts_sample_terminal(pts: &Pts, rng: &mut StdRng, max_steps: usize) -> Vec<f64> {
    let mut s = pts.sample_initial(rng);
    for _ in 0..max_steps {
        if s.loc == pts.l_out {
            return s.vals;
        }
        s = pts.concrete_step(&s, rng);
    }
    s.vals
}

// --- fixtures -----------------------------------------------------------------

const RE2_BOUNDED: &str = r#"
# geometric toggle with a bounded loop counter
vars: x, n
init: x := 0, n := 0
invariant: x >= 0 and x <= 1 and n >= 0 and n <= 12
while x = 0 and n <= 11 do
  n := n + 1;
  if flip(0.5) then
    x := 1 - x
od
"#;

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

const FIG_TOGGLE_COUNT: &str = r#"
vars: x, y
init: x ~ bernoulli(0.3), y := 0
invariant: x >= 0 and x <= 1 and y >= 0
while flip(0.5) do
  if flip(0.6) then
    x := 1 - x
  fi;
  if x = 1 then
    y := y + 1
  fi
od
"#;

// --- tests ---------------------------------------------------------------------

#[test]
fn parse_re2_shape() {
    let ast = parse_program(RE2).unwrap();
    match &ast.body.kind {
        StmtKind::While { cond, body, .. } => {
            assert!(matches!(cond, BranchCond::Bool(_)));
            match &body.kind {
                StmtKind::Seq(ss) => {
                    assert_eq!(ss.len(), 2);
                    assert!(matches!(ss[0].kind, StmtKind::Assign { .. }));
                    match &ss[1].kind {
                        StmtKind::If { cond, else_branch, .. } => {
                            assert_eq!(*cond, BranchCond::Coin(rat(1, 2)));
                            assert!(else_branch.is_none());
                        }
                        other => panic!("expected prob-branch, got {other:?}"),
                    }
                }
                other => panic!("expected sequence, got {other:?}"),
            }
        }
        other => panic!("expected while, got {other:?}"),
    }
}

#[test]
fn parse_smallest_program() {
    let ast = parse_program("vars: x\ninit: x := 0\nskip").unwrap();
    assert!(matches!(ast.body.kind, StmtKind::Skip));
}

#[test]
fn parse_error_has_position() {
    let err = parse_program("vars: x\ninit: x := 0\nwhile do x := 1 od").unwrap_err();
    match err {
        ppl_frontend::PplError::Parse { line, msg, .. } => {
            assert_eq!(line, 3);
            assert!(msg.contains("expected"), "{msg}");
        }
        other => panic!("expected parse error, got {other:?}"),
    }
}

#[test]
fn compile_single_assignment() {
    let (_, pts) = ppl_frontend::load_program("vars: x\ninit: x := 0\nx := 1").unwrap();
    assert_eq!(pts.loc_names.len(), 2);
    assert_eq!(pts.transitions.len(), 1);
    assert_eq!(pts.transitions[0].forks.len(), 1);
    assert_eq!(pts.transitions[0].forks[0].prob, Rat::one());
}

#[test]
fn compile_toggle_forks() {
    // the probabilistic branch inside the loop becomes one transition with
    // forks 0.6 / 0.4, the toggle update riding on the 0.6 fork
    let (_, pts) = ppl_frontend::load_program(FIG_TOGGLE_COUNT).unwrap();
    let coin = pts
        .transitions
        .iter()
        .find(|t| t.forks.len() == 2 && t.forks.iter().any(|f| f.prob == rat(3, 5)))
        .expect("coin transition");
    let toggle = coin.forks.iter().find(|f| f.prob == rat(3, 5)).unwrap();
    let skip = coin.forks.iter().find(|f| f.prob == rat(2, 5)).unwrap();
    // x' = 1 - x on the toggle fork, identity on the other
    let arity = pts.update_arity();
    assert_eq!(
        toggle.update[0],
        Poly::constant(arity, rat_int(1)).sub(&Poly::var(arity, 0))
    );
    assert_eq!(skip.update[0], Poly::var(arity, 0));
}

#[test]
fn compile_re2_loop_head_guards() {
    let (_, pts) = ppl_frontend::load_program(RE2).unwrap();
    let head_transitions: Vec<_> = pts
        .transitions
        .iter()
        .filter(|t| t.source == pts.l_init)
        .collect();
    // x = 0 into the body; the complement splits into x < 0 and x > 0
    assert_eq!(head_transitions.len(), 3);
    let body: Vec<_> = head_transitions
        .iter()
        .filter(|t| t.forks[0].dest != pts.l_out)
        .collect();
    assert_eq!(body.len(), 1);
    assert_eq!(body[0].guard.len(), 1);
    assert_eq!(body[0].guard[0].sense, pts_core::Sense::Eq);
    let exits: Vec<_> = head_transitions
        .iter()
        .filter(|t| t.forks[0].dest == pts.l_out)
        .collect();
    assert_eq!(exits.len(), 2);
}

#[test]
fn guard_partition_sampled() {
    for src in [RE2, RE2_BOUNDED, FIG_TOGGLE_COUNT] {
        let (_, pts) = ppl_frontend::load_program(src).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        pts.check_guard_partition(10_000, 4.0, &mut rng).unwrap();
    }
}

#[test]
fn exact_terminal_distribution_matches_ast_oracle() {
    let ast = parse_program(RE2_BOUNDED).unwrap();
    let pts = compile_to_pts(&ast).unwrap();
    let from_ast = exec(&ast.body, initial_dist(&ast.init));
    let from_pts = pts_terminal_dist(&pts);
    assert_eq!(from_ast, from_pts);
    // spot-check the closed form: P(x=1, n=j) = 2^{-j} for j <= 12
    let total: Rat = from_ast.values().sum();
    assert_eq!(total, Rat::one());
    let p1 = from_ast
        .get(&vec![rat_int(1), rat_int(1)])
        .cloned()
        .unwrap_or_else(Rat::zero);
    assert_eq!(p1, rat(1, 2));
    let p3 = from_ast
        .get(&vec![rat_int(1), rat_int(3)])
        .cloned()
        .unwrap_or_else(Rat::zero);
    assert_eq!(p3, rat(1, 8));
}

#[test]
fn exact_distribution_matches_on_nested_branching() {
    let src = r#"
vars: a, b
init: a ~ discrete(0: 1/3, 1: 1/3, 2: 1/3), b := 0
if a = 1 then
  if flip(0.25) then b := a + 1 else b := 7 fi
else
  b := a * a
fi
"#;
    let ast = parse_program(src).unwrap();
    let pts = compile_to_pts(&ast).unwrap();
    assert_eq!(exec(&ast.body, initial_dist(&ast.init)), pts_terminal_dist(&pts));
}

#[test]
fn sampled_trace_distribution_agrees_on_unbounded_re2() {
    // 10^4 sampled runs of AST and PTS; compare the terminal n histogram
    // bucket-wise within 3 binomial standard errors
    let ast = parse_program(RE2).unwrap();
    let pts = compile_to_pts(&ast).unwrap();
    let n = 10_000;
    let mut rng_a = StdRng::seed_from_u64(11);
    let mut rng_b = StdRng::seed_from_u64(2_024);
    let mut hist_a = BTreeMap::new();
    let mut hist_b = BTreeMap::new();
    for _ in 0..n {
        let va = ast_sample_terminal(&ast, &mut rng_a);
        *hist_a.entry(va[1] as i64).or_insert(0usize) += 1;
        let vb = pts_sample_terminal(&pts, &mut rng_b, 10_000);
        *hist_b.entry(vb[1] as i64).or_insert(0usize) += 1;
    }
    for bucket in 1..=5i64 {
        let pa = *hist_a.get(&bucket).unwrap_or(&0) as f64 / n as f64;
        let pb = *hist_b.get(&bucket).unwrap_or(&0) as f64 / n as f64;
        let p = 0.5f64.powi(bucket as i32);
        let se = (p * (1.0 - p) / n as f64).sqrt();
        assert!((pa - p).abs() < 3.0 * se, "ast bucket {bucket}: {pa} vs {p}");
        assert!((pb - p).abs() < 3.0 * se, "pts bucket {bucket}: {pb} vs {p}");
    }
}

#[test]
fn simulation_respects_invariants() {
    // sampled steps never violate the declared location invariants
    let (_, pts) = ppl_frontend::load_program(RE2_BOUNDED).unwrap();
    let mut rng = StdRng::seed_from_u64(5);
    let mut violations = 0;
    for _ in 0..1_000 {
        let mut s: PtsState = pts.sample_initial(&mut rng);
        for _ in 0..100 {
            if !pts.invariants[s.loc]
                .iter()
                .all(|c| c.holds_f64(&s.vals))
            {
                violations += 1;
            }
            s = pts.concrete_step(&s, &mut rng);
        }
    }
    assert_eq!(violations, 0);
}

#[test]
fn loop_invariant_attaches_to_head() {
    let src = r#"
vars: x
init: x := 0
invariant: x >= 0
invariant(1): x <= 5
while x <= 4 do
  x := x + 1
od
"#;
    let (_, pts) = ppl_frontend::load_program(src).unwrap();
    assert_eq!(pts.invariants[pts.l_init].len(), 2);
    // non-head locations carry only the global invariant
    let body_locs: Vec<usize> = (0..pts.loc_names.len())
        .filter(|&l| l != pts.l_init && l != pts.l_out)
        .collect();
    for l in body_locs {
        assert_eq!(pts.invariants[l].len(), 1);
    }
}
