//! Exact-oracle and simulation checks on the bundled benchmark models.

use std::collections::BTreeSet;
use std::path::PathBuf;

use num_traits::One;
use product::{CounterMode, ProductSystem};
use pts_core::{rat, BoolExpr, Rat};
use sim_oracle::{
    build_finite_chain, consecutive_miss_at_least, simulate_event, visit_count_at_least,
    ChainEvent, OracleError, SimConfig, SimEvent, VarDomain, DEFAULT_STATE_CAP,
};

fn bench(path: &str) -> String {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../benchmarks")
        .join(path);
    std::fs::read_to_string(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

fn load(program: &str, dra: &str) -> (pts_core::Pts, dra_core::Dra) {
    let (_, pts) = ppl_frontend::load_program(&bench(program)).unwrap();
    let dra = dra_core::parse_dra(&bench(dra), &pts.var_names).unwrap();
    (pts, dra)
}

fn domains(pairs: &[(i64, i64)]) -> Vec<VarDomain> {
    pairs
        .iter()
        .map(|(lo, hi)| VarDomain {
            lo: Rat::from_integer((*lo).into()),
            hi: Rat::from_integer((*hi).into()),
        })
        .collect()
}

#[test]
fn re2_reach_probability_matches_geometric_closed_form() {
    // release within c+1 retries has probability 1 - 2^{-(c+1)}
    for (dra_file, expected) in [("re2_n2.dra", rat(7, 8)), ("re2_n3.dra", rat(15, 16))] {
        let (pts, dra) = load("re2_bounded.pp", dra_file);
        let psys = ProductSystem::new(&pts, &dra, [1].into(), CounterMode::Iov, 3);
        let chain = build_finite_chain(&psys, &domains(&[(0, 1), (0, 12)]), false, DEFAULT_STATE_CAP)
            .unwrap();
        let p = chain
            .exact_probability(&ChainEvent::ReachAutomaton([1].into()), &dra)
            .unwrap();
        assert_eq!(p, expected, "{dra_file}");
        // the acceptance view agrees: state 1 is the only accepting sink
        let p2 = chain.exact_probability(&ChainEvent::RabinAccept, &dra).unwrap();
        assert_eq!(p2, expected);
    }
}

#[test]
fn whole_space_and_empty_target_events() {
    let (pts, dra) = load("re2_bounded.pp", "re2_n2.dra");
    let psys = ProductSystem::new(&pts, &dra, [1].into(), CounterMode::Iov, 2);
    let chain =
        build_finite_chain(&psys, &domains(&[(0, 1), (0, 12)]), true, DEFAULT_STATE_CAP).unwrap();
    assert_eq!(
        chain.exact_probability(&ChainEvent::WholeSpace, &dra).unwrap(),
        Rat::one()
    );
    assert_eq!(
        chain
            .exact_probability(&ChainEvent::ReachAutomaton(BTreeSet::new()), &dra)
            .unwrap(),
        rat(0, 1)
    );
}

#[test]
fn continuous_distributions_are_rejected() {
    let src = "vars: x\ninit: x := 0\nx ~ uniform(0, 1)";
    let (_, pts) = ppl_frontend::load_program(src).unwrap();
    let dra = dra_core::Dra::universal(vec![]);
    let psys = ProductSystem::new(&pts, &dra, BTreeSet::new(), CounterMode::Fov, 0);
    match build_finite_chain(&psys, &domains(&[(0, 1)]), true, DEFAULT_STATE_CAP) {
        Err(OracleError::ContinuousDistribution(_)) => {}
        Err(other) => panic!("expected continuous-distribution error, got {other:?}"),
        Ok(_) => panic!("expected continuous-distribution error, got a chain"),
    }
}

#[test]
fn domain_escape_reports_context() {
    // the unbounded race walks n out of any finite domain
    let (pts, dra) = load("re2.pp", "re2_n2.dra");
    let psys = ProductSystem::new(&pts, &dra, [1].into(), CounterMode::Iov, 2);
    match build_finite_chain(&psys, &domains(&[(0, 1), (0, 12)]), true, DEFAULT_STATE_CAP) {
        Err(OracleError::DomainEscape { var, .. }) => assert_eq!(var, "n"),
        Err(other) => panic!("expected domain escape, got {other:?}"),
        Ok(_) => panic!("expected domain escape, got a chain"),
    }
}

/// Instances for the counter-semantics equivalence: saturated-counter
/// threshold probabilities must equal direct visit-count / consecutive-miss
/// probabilities, exactly.
fn equivalence_instances() -> Vec<(&'static str, &'static str, Vec<VarDomain>, CounterMode, u32)> {
    vec![
        (
            "toggle.pp",
            "toggle_prev1.dra",
            domains(&[(0, 1), (0, 7)]),
            CounterMode::Fov,
            2,
        ),
        (
            "toggle.pp",
            "toggle_prev1.dra",
            domains(&[(0, 1), (0, 7)]),
            CounterMode::Iov,
            3,
        ),
        (
            "re2_bounded.pp",
            "re2_n2.dra",
            domains(&[(0, 1), (0, 12)]),
            CounterMode::Iov,
            3,
        ),
    ]
}

#[test]
fn saturated_counter_equals_direct_visit_counting() {
    for (program, dra_file, doms, mode, k) in equivalence_instances() {
        let (pts, dra) = load(program, dra_file);
        let tracked: BTreeSet<usize> = [1].into();
        let psys = ProductSystem::new(&pts, &dra, tracked.clone(), mode, k);
        let chain_sat =
            build_finite_chain(&psys, &doms, true, DEFAULT_STATE_CAP).unwrap();
        let p_sat = chain_sat
            .exact_probability(&ChainEvent::CounterThreshold, &dra)
            .unwrap();

        // route 2: a larger saturation cap with the same threshold event
        let psys_ext = ProductSystem::new(&pts, &dra, tracked.clone(), mode, k + 3);
        let chain_ext = build_finite_chain(&psys_ext, &doms, true, DEFAULT_STATE_CAP).unwrap();
        let p_ext = chain_ext
            .exact_probability(&ChainEvent::CounterAtLeast(k + 1), &dra)
            .unwrap();
        assert_eq!(p_sat, p_ext, "{program}/{mode:?} saturation changed the event");

        // route 3: counting without any counter construction
        let chain_free = build_finite_chain(&psys, &doms, false, DEFAULT_STATE_CAP).unwrap();
        let p_direct = match mode {
            CounterMode::Fov => visit_count_at_least(&chain_free, &tracked, k + 1).unwrap(),
            CounterMode::Iov => {
                consecutive_miss_at_least(&chain_free, &tracked, k + 1).unwrap()
            }
        };
        assert_eq!(p_sat, p_direct, "{program}/{mode:?} direct count disagrees");
        assert!(p_sat >= rat(0, 1) && p_sat <= Rat::one());
    }
}

#[test]
fn toggle_terminal_split_is_even() {
    // after seven fair flips the automaton accepts iff x ends at 1
    let (pts, dra) = load("toggle.pp", "toggle_prev1.dra");
    let psys = ProductSystem::new(&pts, &dra, [1].into(), CounterMode::Fov, 1);
    let chain =
        build_finite_chain(&psys, &domains(&[(0, 1), (0, 7)]), false, DEFAULT_STATE_CAP).unwrap();
    let p = chain.exact_probability(&ChainEvent::RabinAccept, &dra).unwrap();
    assert_eq!(p, rat(1, 2));
}

#[test]
fn simulation_matches_exact_on_finite_chains() {
    // counter-threshold frequencies within three standard errors
    for (program, dra_file, doms, mode, k) in equivalence_instances() {
        let (pts, dra) = load(program, dra_file);
        let psys = ProductSystem::new(&pts, &dra, [1].into(), mode, k);
        let chain = build_finite_chain(&psys, &doms, true, DEFAULT_STATE_CAP).unwrap();
        let exact = chain
            .exact_probability(&ChainEvent::CounterThreshold, &dra)
            .unwrap();
        let exact_f = pts_core::rat_to_f64(&exact);
        let est = simulate_event(
            &psys,
            &SimConfig {
                samples: 100_000,
                horizon: 120,
                seed: 99,
                event: SimEvent::CounterThreshold,
            },
        );
        let band = 3.0 * est.std_err.max(1e-4);
        assert!(
            (est.p - exact_f).abs() <= band,
            "{program}/{mode:?}: {} vs {exact_f}",
            est.p
        );
    }
}

#[test]
fn simulation_reproduces_published_reference_rates() {
    // release within three retries: 0.9375
    let (pts, dra) = load("re2.pp", "re2_n3.dra");
    let psys = ProductSystem::new(&pts, &dra, [1].into(), CounterMode::Iov, 3);
    let hit = BoolExpr::And(vec![
        BoolExpr::Atom(dra_core::ApLit { ap: 0, negated: false }),
        BoolExpr::Atom(dra_core::ApLit { ap: 1, negated: false }),
    ]);
    let est = simulate_event(
        &psys,
        &SimConfig {
            samples: 100_000,
            horizon: 200,
            seed: 7,
            event: SimEvent::ApFormula(hit),
        },
    );
    assert!((est.p - 0.9375).abs() <= 3.0 * est.std_err, "{}", est.p);

    // eventually y > 0 in the toggle-count model: 0.3563
    let (pts, dra) = load("re1.pp", "re1_fy.dra");
    let psys = ProductSystem::new(&pts, &dra, [1].into(), CounterMode::Iov, 3);
    let pos = BoolExpr::Atom(dra_core::ApLit { ap: 0, negated: false });
    let est = simulate_event(
        &psys,
        &SimConfig {
            samples: 100_000,
            horizon: 200,
            seed: 11,
            event: SimEvent::ApFormula(pos),
        },
    );
    assert!((est.p - 0.3563).abs() <= 3.0 * est.std_err, "{}", est.p);
}

#[test]
fn impossible_event_estimates_zero() {
    let (pts, dra) = load("re1.pp", "re1_fy.dra");
    let psys = ProductSystem::new(&pts, &dra, [1].into(), CounterMode::Iov, 1);
    let est = simulate_event(
        &psys,
        &SimConfig {
            samples: 10_000,
            horizon: 50,
            seed: 5,
            event: SimEvent::ApFormula(BoolExpr::False),
        },
    );
    assert_eq!(est.p, 0.0);
    assert_eq!(est.hits, 0);
}

#[test]
fn seeded_estimates_are_bit_reproducible() {
    let (pts, dra) = load("re1.pp", "re1_fy.dra");
    let psys = ProductSystem::new(&pts, &dra, [1].into(), CounterMode::Iov, 2);
    let cfg = SimConfig {
        samples: 20_000,
        horizon: 100,
        seed: 1234,
        event: SimEvent::CounterThreshold,
    };
    let a = simulate_event(&psys, &cfg);
    let b = simulate_event(&psys, &cfg);
    assert_eq!(a.p.to_bits(), b.p.to_bits());
    assert_eq!(a.hits, b.hits);
}

#[test]
fn pair_proxy_is_labeled_heuristic() {
    let (pts, dra) = load("toggle.pp", "toggle_prev1.dra");
    let psys = ProductSystem::new(&pts, &dra, [1].into(), CounterMode::Fov, 1);
    let est = simulate_event(
        &psys,
        &SimConfig {
            samples: 50_000,
            horizon: 100,
            seed: 3,
            event: SimEvent::PairProxy { pair: 0 },
        },
    );
    assert!(est.warnings.iter().any(|w| w.contains("heuristic")));
    // terminal split is even; the proxy should land near 1/2
    assert!((est.p - 0.5).abs() <= 3.0 * est.std_err + 0.01, "{}", est.p);
}

#[test]
fn drift_check_validates_synthesized_certificate_and_flags_corruption() {
    use certgen::{CertificateProblem, TheoremMode};
    let (pts, dra) = load("toggle.pp", "toggle_prev1.dra");
    let pts: &'static pts_core::Pts = Box::leak(Box::new(pts));
    let dra: &'static dra_core::Dra = Box::leak(Box::new(dra));
    let psys: &'static ProductSystem =
        Box::leak(Box::new(ProductSystem::new(pts, dra, [1].into(), CounterMode::Iov, 2)));
    let problem =
        CertificateProblem::new(psys, TheoremMode::LowerIov, 2, 2, None, None).unwrap();
    let (cert, _, _) = solver::solve_certificate(&problem, 2).expect("synthesis succeeds");
    let report = sim_oracle::martingale_check(&cert, psys, &sim_oracle::DriftConfig::default());
    assert!(report.states_checked > 0);
    assert!(
        report.max_violation <= 1e-6,
        "violation {} at {:?}",
        report.max_violation,
        report.worst_state
    );

    // corrupting successor pieces must surface as a drift violation at
    // their predecessors (counter-0 states step into counter-1 pieces)
    let mut corrupted = cert.clone();
    let keys: Vec<_> = corrupted
        .pieces
        .keys()
        .filter(|(_, _, l)| *l == 1)
        .copied()
        .collect();
    for key in keys {
        let bumped = corrupted.pieces[&key].add(&pts_core::Poly::constant(
            pts.n_vars(),
            rat(1, 10),
        ));
        corrupted.pieces.insert(key, bumped);
    }
    let report = sim_oracle::martingale_check(&corrupted, psys, &sim_oracle::DriftConfig::default());
    assert!(
        report.max_violation > 1e-3,
        "corruption went undetected: {}",
        report.max_violation
    );
}
