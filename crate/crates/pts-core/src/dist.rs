//! Supported sampling distributions and their exact raw moments.
//!
//! Every supported distribution has finite moments of all orders, which the
//! symbolic pre-expectation of polynomial templates requires.


use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::Rng;

use crate::expr::{format_rat, rat_to_f64, Rat};
use crate::PtsError;

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Distribution {
    /// 1 with probability p, 0 with probability 1-p.
    Bernoulli(Rat),
    /// Continuous uniform on [a, b], a < b.
    Uniform(Rat, Rat),
    /// Finite support: list of (value, probability), probabilities sum to 1.
    Discrete(Vec<(Rat, Rat)>),
}

impl Distribution {
    pub fn validate(&self) -> Result<(), PtsError> {
        match self {
            Distribution::Bernoulli(p) => {
                if p.is_negative() || p > &Rat::one() {
                    return Err(PtsError::BadDistribution(format!(
                        "bernoulli parameter {} outside [0,1]",
                        format_rat(p)
                    )));
                }
            }
            Distribution::Uniform(a, b) => {
                if a >= b {
                    return Err(PtsError::BadDistribution(format!(
                        "uniform({}, {}) requires a < b",
                        format_rat(a),
                        format_rat(b)
                    )));
                }
            }
            Distribution::Discrete(items) => {
                if items.is_empty() {
                    return Err(PtsError::BadDistribution(
                        "discrete distribution with empty support".into(),
                    ));
                }
                let mut total = Rat::zero();
                for (_, p) in items {
                    if p.is_negative() || p > &Rat::one() {
                        return Err(PtsError::BadDistribution(format!(
                            "discrete probability {} outside [0,1]",
                            format_rat(p)
                        )));
                    }
                    total += p;
                }
                if !total.is_one() {
                    return Err(PtsError::BadDistribution(format!(
                        "discrete probabilities sum to {}, expected 1",
                        format_rat(&total)
                    )));
                }
            }
        }
        Ok(())
    }

    /// Exact m-th raw moment E[r^m]. Order 0 is 1 for every distribution.
    pub fn moment(&self, m: u32) -> Result<Rat, PtsError> {
        if m == 0 {
            return Ok(Rat::one());
        }
        match self {
            // r is 0/1-valued, so r^m = r for m >= 1
            Distribution::Bernoulli(p) => Ok(p.clone()),
            // (b^{m+1} - a^{m+1}) / ((m+1)(b-a))
            Distribution::Uniform(a, b) => {
                let mm = Rat::from_integer((m as i64 + 1).into());
                let num = pow_rat(b, m + 1) - pow_rat(a, m + 1);
                Ok(num / (mm * (b - a)))
            }
            Distribution::Discrete(items) => {
                let mut acc = Rat::zero();
                for (v, p) in items {
                    acc += p * pow_rat(v, m);
                }
                Ok(acc)
            }
        }
    }

    /// True when the support is finite (enumerable for exact chains).
    pub fn is_discrete(&self) -> bool {
        !matches!(self, Distribution::Uniform(_, _))
    }

    /// Finite outcome list, or None for continuous distributions.
    pub fn outcomes(&self) -> Option<Vec<(Rat, Rat)>> {
        match self {
            Distribution::Bernoulli(p) => Some(vec![
                (Rat::zero(), Rat::one() - p),
                (Rat::one(), p.clone()),
            ]),
            Distribution::Discrete(items) => Some(items.clone()),
            Distribution::Uniform(_, _) => None,
        }
    }

    /// Smallest interval containing the support.
    pub fn support_interval(&self) -> (Rat, Rat) {
        match self {
            Distribution::Bernoulli(_) => (Rat::zero(), Rat::one()),
            Distribution::Uniform(a, b) => (a.clone(), b.clone()),
            Distribution::Discrete(items) => {
                let mut lo = items[0].0.clone();
                let mut hi = items[0].0.clone();
                for (v, _) in items {
                    if v < &lo {
                        lo = v.clone();
                    }
                    if v > &hi {
                        hi = v.clone();
                    }
                }
                (lo, hi)
            }
        }
    }

    pub fn sample_f64(&self, rng: &mut impl Rng) -> f64 {
        match self {
            Distribution::Bernoulli(p) => {
                if rng.gen::<f64>() < rat_to_f64(p) {
                    1.0
                } else {
                    0.0
                }
            }
            Distribution::Uniform(a, b) => {
                let (a, b) = (rat_to_f64(a), rat_to_f64(b));
                a + rng.gen::<f64>() * (b - a)
            }
            Distribution::Discrete(items) => {
                let mut u = rng.gen::<f64>();
                for (v, p) in items {
                    let p = rat_to_f64(p);
                    if u < p {
                        return rat_to_f64(v);
                    }
                    u -= p;
                }
                rat_to_f64(&items.last().unwrap().0)
            }
        }
    }

    pub fn display(&self) -> String {
        match self {
            Distribution::Bernoulli(p) => format!("bernoulli({})", format_rat(p)),
            Distribution::Uniform(a, b) => {
                format!("uniform({}, {})", format_rat(a), format_rat(b))
            }
            Distribution::Discrete(items) => {
                let parts: Vec<String> = items
                    .iter()
                    .map(|(v, p)| format!("{}: {}", format_rat(v), format_rat(p)))
                    .collect();
                format!("discrete({})", parts.join(", "))
            }
        }
    }
}

fn pow_rat(r: &Rat, e: u32) -> Rat {
    let mut acc = Rat::one();
    for _ in 0..e {
        acc *= r;
    }
    acc
}

/// Memoized moment lookup keyed by sample-variable index of a PTS.
pub struct MomentTable<'a> {
    dists: &'a [(String, Distribution)],
    cache: std::cell::RefCell<std::collections::HashMap<(usize, u32), Rat>>,
}

impl<'a> MomentTable<'a> {
    pub fn new(dists: &'a [(String, Distribution)]) -> Self {
        MomentTable {
            dists,
            cache: Default::default(),
        }
    }

    pub fn moment(&self, sample_idx: usize, m: u32) -> Result<Rat, PtsError> {
        if let Some(v) = self.cache.borrow().get(&(sample_idx, m)) {
            return Ok(v.clone());
        }
        let dist = &self
            .dists
            .get(sample_idx)
            .ok_or_else(|| PtsError::BadDistribution(format!("no sample variable {sample_idx}")))?
            .1;
        let v = dist.moment(m)?;
        self.cache.borrow_mut().insert((sample_idx, m), v.clone());
        Ok(v)
    }
}

/// Convenience for tests: mean of a distribution as f64.
pub fn mean_f64(d: &Distribution) -> f64 {
    d.moment(1).map(|r| r.to_f64().unwrap()).unwrap_or(f64::NAN)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{rat, rat_int};

    #[test]
    fn moment_order_zero_is_one() {
        for d in [
            Distribution::Bernoulli(rat(3, 10)),
            Distribution::Uniform(rat_int(0), rat_int(1)),
            Distribution::Discrete(vec![(rat_int(2), rat(1, 2)), (rat_int(4), rat(1, 2))]),
        ] {
            assert_eq!(d.moment(0).unwrap(), Rat::one());
        }
    }

    #[test]
    fn bernoulli_higher_moments_equal_p() {
        let d = Distribution::Bernoulli(rat(3, 10));
        assert_eq!(d.moment(1).unwrap(), rat(3, 10));
        assert_eq!(d.moment(2).unwrap(), rat(3, 10));
        assert_eq!(d.moment(7).unwrap(), rat(3, 10));
    }

    #[test]
    fn uniform_moments_closed_form() {
        let d = Distribution::Uniform(rat_int(0), rat_int(1));
        assert_eq!(d.moment(1).unwrap(), rat(1, 2));
        assert_eq!(d.moment(2).unwrap(), rat(1, 3));
        let d = Distribution::Uniform(rat_int(-1), rat_int(3));
        // (3^3 - (-1)^3) / (3 * 4) = 28/12 = 7/3
        assert_eq!(d.moment(2).unwrap(), rat(7, 3));
    }

    #[test]
    fn moment_scales_linearly_on_discrete() {
        // E[(a*r)^m] = a^m * E[r^m]
        let base = vec![(rat_int(1), rat(1, 4)), (rat_int(2), rat(3, 4))];
        let a = rat(3, 2);
        let scaled: Vec<(Rat, Rat)> = base
            .iter()
            .map(|(v, p)| (v * &a, p.clone()))
            .collect();
        let d0 = Distribution::Discrete(base);
        let d1 = Distribution::Discrete(scaled);
        for m in 0..5u32 {
            assert_eq!(d1.moment(m).unwrap(), pow_rat(&a, m) * d0.moment(m).unwrap());
        }
    }

    #[test]
    fn validation_rejects_malformed() {
        assert!(Distribution::Uniform(rat_int(1), rat_int(1)).validate().is_err());
        assert!(Distribution::Bernoulli(rat(11, 10)).validate().is_err());
        assert!(Distribution::Discrete(vec![(rat_int(0), rat(1, 2))])
            .validate()
            .is_err());
    }
}
