//! Martingale drift checking of concrete certificates at sampled product
//! states. The expectation over the sample variables is computed by
//! direct enumeration for discrete distributions and Gauss-Legendre
//! quadrature for uniform ones — an evaluation route independent of the
//! symbolic moment substitution used during synthesis.

use certgen::{ConcreteCertificate, TheoremMode};
use product::{ProductState, ProductSystem};
use pts_core::{rat_to_f64, Distribution};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

#[derive(Clone, Debug)]
pub struct DriftConfig {
    /// How many distinct product states to check.
    pub states: usize,
    pub seed: u64,
    /// Trajectory horizon used to harvest reachable states.
    pub horizon: usize,
}

impl Default for DriftConfig {
    fn default() -> Self {
        DriftConfig {
            states: 1000,
            seed: 0xD41F7,
            horizon: 400,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct DriftReport {
    pub states_checked: usize,
    /// Largest one-sided violation of the mode's drift inequality.
    pub max_violation: f64,
    pub worst_state: Option<String>,
}

/// Verify the drift condition of the certificate's mode at reachable
/// product states with counter <= k: supermartingale modes need
/// E[eta'] <= eta, submartingale modes alpha*E[eta'] >= eta. Violations
/// are reported, not judged; callers threshold the result.
pub fn martingale_check(
    cert: &ConcreteCertificate,
    psys: &ProductSystem,
    cfg: &DriftConfig,
) -> DriftReport {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut seen: std::collections::HashSet<String> = Default::default();
    let mut states: Vec<ProductState> = Vec::new();
    // harvest distinct reachable states with counter in [0, k]
    'outer: for _ in 0..(cfg.states * 8) {
        let mut x = psys.sample_initial(&mut rng);
        for _ in 0..cfg.horizon {
            if x.counter <= cert.k {
                let key = format!(
                    "{}|{:?}|{}|{}",
                    x.pts.loc,
                    x.pts.vals.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
                    x.q,
                    x.counter
                );
                if seen.insert(key) {
                    states.push(x.clone());
                    if states.len() >= cfg.states {
                        break 'outer;
                    }
                }
            }
            x = psys.step(&x, &mut rng);
        }
    }

    let mut max_violation = 0.0f64;
    let mut worst_state = None;
    for x in &states {
        let eta = cert.eval_f64(x.pts.loc, x.q, x.counter, &x.pts.vals);
        let pre = match expected_successor_value(cert, psys, x) {
            Some(v) => v,
            None => continue,
        };
        let violation = match cert.mode {
            TheoremMode::LowerFov | TheoremMode::LowerIov => pre - eta,
            TheoremMode::UpperFov | TheoremMode::UpperIov => {
                let alpha = rat_to_f64(cert.alpha.as_ref().expect("upper mode has alpha"));
                eta - alpha * pre
            }
        };
        if violation > max_violation {
            max_violation = violation;
            worst_state = Some(format!(
                "loc={} vals={:?} q={} l={}",
                psys.pts.loc_names[x.pts.loc], x.pts.vals, x.q, x.counter
            ));
        }
    }
    DriftReport {
        states_checked: states.len(),
        max_violation,
        worst_state,
    }
}

/// E[eta(successor)] at a product state: exact branch enumeration over the
/// enabled transition's forks, quadrature/enumeration over the sample
/// variables.
pub fn expected_successor_value(
    cert: &ConcreteCertificate,
    psys: &ProductSystem,
    x: &ProductState,
) -> Option<f64> {
    let pts = psys.pts;
    let letter = psys.dra.evaluate_label(&x.pts);
    let q_next = psys.dra.step(x.q, letter).ok()?;
    let counter_next = psys.counter_next(x.counter, psys.tracked.contains(&q_next));
    if x.pts.loc == pts.l_out {
        return Some(cert.eval_f64(pts.l_out, q_next, counter_next, &x.pts.vals));
    }
    let t = pts
        .enabled_transition(&pts_core::PtsState {
            loc: x.pts.loc,
            vals: x.pts.vals.clone(),
        })
        .ok()?;
    // integration grid over the sample variables: tensor product of
    // per-variable nodes (discrete outcomes or Gauss-Legendre points)
    let max_update_degree = t
        .forks
        .iter()
        .flat_map(|f| f.update.iter().map(|p| p.degree()))
        .max()
        .unwrap_or(1);
    let needed_degree = cert.degree * max_update_degree.max(1);
    let mut grid: Vec<(Vec<f64>, f64)> = vec![(Vec::new(), 1.0)];
    for (_, dist) in &pts.sample_vars {
        let nodes: Vec<(f64, f64)> = match dist {
            Distribution::Uniform(a, b) => {
                let n = (needed_degree as usize / 2) + 1;
                gauss_legendre(n, rat_to_f64(a), rat_to_f64(b))
            }
            other => other
                .outcomes()
                .expect("discrete")
                .iter()
                .map(|(v, p)| (rat_to_f64(v), rat_to_f64(p)))
                .collect(),
        };
        let mut next = Vec::with_capacity(grid.len() * nodes.len());
        for (vals, w) in &grid {
            for (v, p) in &nodes {
                let mut vals = vals.clone();
                vals.push(*v);
                next.push((vals, w * p));
            }
        }
        grid = next;
    }
    let mut acc = 0.0;
    for fork in &t.forks {
        let pf = rat_to_f64(&fork.prob);
        for (svals, w) in &grid {
            let mut point = x.pts.vals.clone();
            point.extend(svals.iter().copied());
            let succ: Vec<f64> = fork.update.iter().map(|p| p.eval_f64(&point)).collect();
            acc += pf * w * cert.eval_f64(fork.dest, q_next, counter_next, &succ);
        }
    }
    Some(acc)
}

/// Gauss-Legendre nodes and weights on [a, b], exact for polynomials up to
/// degree 2n-1. Nodes come from Newton iteration on the Legendre
/// recurrence.
pub fn gauss_legendre(n: usize, a: f64, b: f64) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    let nf = n as f64;
    for i in 0..n {
        // Chebyshev-based initial guess
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_with_derivative(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre_with_derivative(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        // map from [-1, 1] to [a, b]
        let mid = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        out.push((mid + half * x, w * half));
    }
    out
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadrature_integrates_polynomials_exactly() {
        // integral of x^4 over [0,1] is 1/5; 3 nodes are exact to degree 5
        let nodes = gauss_legendre(3, 0.0, 1.0);
        let integral: f64 = nodes.iter().map(|(x, w)| w * x.powi(4)).sum();
        assert!((integral - 0.2).abs() < 1e-12, "{integral}");
        // degree 7 with 4 nodes
        let nodes = gauss_legendre(4, -1.0, 3.0);
        let integral: f64 = nodes.iter().map(|(x, w)| w * x.powi(7)).sum();
        // primitive x^8/8 evaluated on [-1, 3]
        let exact = (3.0f64.powi(8) - (-1.0f64).powi(8)) / 8.0;
        assert!((integral - exact).abs() < 1e-9 * exact.abs(), "{integral}");
        let total: f64 = gauss_legendre(5, 2.0, 4.0).iter().map(|(_, w)| w).sum();
        assert!((total - 2.0).abs() < 1e-12);
    }
}
