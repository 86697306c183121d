//! Seed-reproducible Monte Carlo estimation of trace events.
//!
//! Samples are split into fixed-size shards with independently derived
//! streams, so estimates are bit-for-bit reproducible regardless of how
//! shards are scheduled across workers.

use dra_core::ApLit;
use product::ProductSystem;
use pts_core::BoolExpr;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

/// Which event frequency to estimate within the horizon.
#[derive(Clone, Debug)]
pub enum SimEvent {
    /// The tick counter reaches k+1 within the horizon.
    CounterThreshold,
    /// A state satisfying the AP formula is visited within the horizon.
    ApFormula(BoolExpr<ApLit>),
    /// Acceptance proxy for one Rabin pair: over the last quartile of the
    /// horizon, no E-state is visited and some F-state is. A heuristic for
    /// infinite-horizon acceptance; labeled as such in reports.
    PairProxy { pair: usize },
}

#[derive(Clone, Debug)]
pub struct SimConfig {
    pub samples: usize,
    pub horizon: usize,
    pub seed: u64,
    pub event: SimEvent,
}

#[derive(Clone, Debug, Serialize)]
pub struct Estimate {
    pub p: f64,
    pub std_err: f64,
    pub samples: usize,
    pub hits: usize,
    /// Estimation caveats (horizon warnings, heuristic labeling).
    pub warnings: Vec<String>,
}

const SHARD: usize = 1024;

/// Estimate the event frequency with a binomial standard error. The
/// configured seed fully determines the result.
pub fn simulate_event(psys: &ProductSystem, cfg: &SimConfig) -> Estimate {
    assert!(cfg.samples >= 1 && cfg.horizon >= 1);
    let shards = cfg.samples.div_ceil(SHARD);
    let mut hits = 0usize;
    let mut late_hits = 0usize;
    for shard in 0..shards {
        let mut rng = ChaCha8Rng::seed_from_u64(
            cfg.seed ^ (shard as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15),
        );
        let count = SHARD.min(cfg.samples - shard * SHARD);
        for _ in 0..count {
            match run_one(psys, cfg, &mut rng) {
                Some(t) => {
                    hits += 1;
                    if t * 4 >= cfg.horizon * 3 {
                        late_hits += 1;
                    }
                }
                None => {}
            }
        }
    }
    let n = cfg.samples as f64;
    let p = hits as f64 / n;
    let std_err = (p * (1.0 - p) / n).sqrt();
    let mut warnings = Vec::new();
    // hits still arriving in the last quartile of the horizon suggest the
    // estimate has not settled
    let drift_band = 3.0 * (n * p * (1.0 - p)).sqrt();
    if late_hits as f64 > drift_band && late_hits > 3 {
        warnings.push(format!(
            "horizon may be too small: {late_hits} of {hits} resolutions in the last quartile"
        ));
    }
    if matches!(cfg.event, SimEvent::PairProxy { .. }) {
        warnings.push("estimate (heuristic): acceptance proxied by a finite window".into());
    }
    Estimate {
        p,
        std_err,
        samples: cfg.samples,
        hits,
        warnings,
    }
}

/// Run one trajectory; returns the resolution step if the event fired.
fn run_one(psys: &ProductSystem, cfg: &SimConfig, rng: &mut ChaCha8Rng) -> Option<usize> {
    let mut x = psys.sample_initial(rng);
    match &cfg.event {
        SimEvent::CounterThreshold => {
            let cap = psys.k + 1;
            for t in 0..=cfg.horizon {
                if x.counter >= cap {
                    return Some(t);
                }
                x = psys.step(&x, rng);
            }
            None
        }
        SimEvent::ApFormula(formula) => {
            for t in 0..=cfg.horizon {
                let letter = psys.dra.evaluate_label(&x.pts);
                let holds = formula.eval(&|lit: &ApLit| {
                    dra_core::letter_has(letter, lit.ap) != lit.negated
                });
                if holds {
                    return Some(t);
                }
                x = psys.step(&x, rng);
            }
            None
        }
        SimEvent::PairProxy { pair } => {
            let p = &psys.dra.pairs[*pair];
            let window_start = cfg.horizon - cfg.horizon / 4;
            let mut saw_e = false;
            let mut saw_f = false;
            for t in 0..=cfg.horizon {
                if t >= window_start {
                    if p.e.contains(&x.q) {
                        saw_e = true;
                    }
                    if p.f.contains(&x.q) {
                        saw_f = true;
                    }
                }
                x = psys.step(&x, rng);
            }
            if !saw_e && saw_f {
                Some(cfg.horizon)
            } else {
                None
            }
        }
    }
}

/// CSV row for an estimate.
pub fn estimate_csv_row(label: &str, e: &Estimate) -> String {
    format!(
        "{label},{:.6},{:.6},{},{}\n",
        e.p, e.std_err, e.samples, e.hits
    )
}
