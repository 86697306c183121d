//! End-to-end synthesis on a small reach model with a known answer.
//!
//! The model toggles x from 0 to 1 with probability 1/2 per iteration
//! (two product steps per iteration). Tracking the accepting state of the
//! reach automaton in consecutive-miss mode, the counter exceeds 2 unless
//! the toggle lands on the first iteration, so the 2-miss event has exact
//! probability 1/2. Certified bounds must sandwich it.

use std::collections::BTreeSet;

use certgen::{CertificateProblem, TheoremMode};
use num_traits as _;
use product::{CounterMode, ProductSystem};
use num_traits::Zero;
use pts_core::{rat, Rat};
use solver::{export_lp_text, solve_certificate, synthesize, SolveError, SolveOutcome};

const TOGGLE: &str = r#"
vars: x: int
init: x := 0
invariant: x >= 0 and x <= 1
while x = 0 do
  if flip(0.5) then x := 1 fi
od
"#;

const REACH_DRA: &str = r#"
property: F(x=1);
ap hit := x = 1;
states 2;
initial 0;
edge 0 : hit -> 1;
edge 0 : !hit -> 0;
edge 1 : true -> 1;
pair E={} F={1};
"#;

fn leak_model() -> (&'static pts_core::Pts, &'static dra_core::Dra) {
    let (_, pts) = ppl_frontend::load_program(TOGGLE).unwrap();
    let dra = dra_core::parse_dra(REACH_DRA, &pts.var_names).unwrap();
    (Box::leak(Box::new(pts)), Box::leak(Box::new(dra)))
}

#[test]
fn empty_tracked_set_gives_bound_one() {
    // no threshold pieces: the zero certificate is feasible and optimal
    let (pts, dra) = leak_model();
    let psys: &'static ProductSystem =
        Box::leak(Box::new(ProductSystem::new(pts, dra, BTreeSet::new(), CounterMode::Fov, 1)));
    let problem =
        CertificateProblem::new(psys, TheoremMode::LowerFov, 1, 1, None, None).unwrap();
    let (cert, _, run) = solve_certificate(&problem, 1).unwrap();
    assert!(matches!(run.outcome, SolveOutcome::Optimal(_)));
    assert_eq!(cert.gamma, Rat::zero());
    assert_eq!(cert.bound, rat(1, 1));
}

#[test]
fn lower_bound_on_two_miss_event_is_half() {
    let (pts, dra) = leak_model();
    let psys: &'static ProductSystem =
        Box::leak(Box::new(ProductSystem::new(pts, dra, [1].into(), CounterMode::Iov, 2)));
    let problem =
        CertificateProblem::new(psys, TheoremMode::LowerIov, 2, 2, None, None).unwrap();
    let (cert, elim, _) = solve_certificate(&problem, 2).expect("feasible lower synthesis");
    // sound: bound <= true probability 1/2; optimal template reaches it
    assert!(cert.bound <= rat(1, 2), "bound {}", cert.bound);
    assert!(cert.bound >= rat(49, 100), "bound {}", cert.bound);
    assert!(elim.max_residual <= rat(1, 1_000_000_000));
}

#[test]
fn upper_bound_on_two_miss_event_covers_half() {
    let (pts, dra) = leak_model();
    let psys: &'static ProductSystem =
        Box::leak(Box::new(ProductSystem::new(pts, dra, [1].into(), CounterMode::Iov, 2)));
    let alpha = rat(99, 100);
    let problem =
        CertificateProblem::new(psys, TheoremMode::UpperIov, 2, 2, Some(alpha), None)
            .unwrap();
    let (cert, _, _) = solve_certificate(&problem, 2).expect("feasible upper synthesis");
    assert!(cert.bound >= rat(1, 2), "bound {}", cert.bound);
    // alpha = 0.99 caps the level at alpha^3/2, so the bound stays close
    assert!(cert.bound <= rat(53, 100), "bound {}", cert.bound);
}

#[test]
fn upper_mode_with_tight_counter_fails_cleanly() {
    // with k = 0 and lambda = 0 the level is forced to 0, which does not
    // clear lambda: reported as a failure, not a certificate
    let (pts, dra) = leak_model();
    let psys: &'static ProductSystem =
        Box::leak(Box::new(ProductSystem::new(pts, dra, [1].into(), CounterMode::Iov, 0)));
    let problem = CertificateProblem::new(
        psys,
        TheoremMode::UpperIov,
        2,
        0,
        Some(rat(9, 10)),
        Some(Rat::zero()),
    )
    .unwrap();
    match solve_certificate(&problem, 2) {
        Err(SolveError::LevelNotAboveLambda { .. }) | Err(SolveError::Infeasible) => {}
        Ok((cert, _, _)) => panic!("expected failure, got bound {}", cert.bound),
        Err(other) => panic!("unexpected error {other:?}"),
    }
}

#[test]
fn lp_export_is_reproducible_byte_for_byte() {
    let build = || {
        let (pts, dra) = leak_model();
        let psys: &'static ProductSystem =
            Box::leak(Box::new(ProductSystem::new(pts, dra, [1].into(), CounterMode::Iov, 1)));
        let problem =
            CertificateProblem::new(psys, TheoremMode::LowerIov, 2, 1, None, None).unwrap();
        let mut pool = problem.family.pool.clone();
        let run = synthesize(&problem, 2, &mut pool).unwrap();
        export_lp_text(&run.lp, "case")
    };
    assert_eq!(build(), build());
}

#[test]
fn certificate_dump_serializes() {
    let (pts, dra) = leak_model();
    let psys: &'static ProductSystem =
        Box::leak(Box::new(ProductSystem::new(pts, dra, [1].into(), CounterMode::Iov, 2)));
    let problem =
        CertificateProblem::new(psys, TheoremMode::LowerIov, 1, 2, None, None).unwrap();
    if let Ok((cert, elim, _)) = solve_certificate(&problem, 1) {
        let dump = solver::CertificateDump::new(&cert, pts, &elim);
        let json = serde_json::to_string_pretty(&dump).unwrap();
        assert!(json.contains("\"mode\": \"lower-iov\""));
        assert!(json.contains("replay_residual"));
    }
}
