//! Independent randomized rounding of cycle bundles.

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive};
use rand::Rng;

use super::cycles::{toggle_bundles, CycleBundle};
use super::Rational;
use crate::error::{Error, Result};
use crate::graph::{ColoredCompleteGraph, PerfectMatching};

/// Retry cap per rounding stage.
pub const DEFAULT_RETRY_CAP: usize = 50;

/// `13 k^{7/4} n^{3/4} sqrt(ln 2k)`, the per-stage rounding tolerance.
pub fn rounding_bound(k: usize, n: usize) -> f64 {
    let (k, n) = (k as f64, n as f64);
    13.0 * k.powf(1.75) * n.powf(0.75) * (2.0 * k).ln().sqrt()
}

/// Bernoulli draws with an exact rational success probability.
pub(crate) struct Coin {
    numer: u64,
    denom: u64,
    approx: f64,
    exact: bool,
}

impl Coin {
    pub(crate) fn new(prob: &Rational) -> Self {
        let (numer, denom) = (prob.numer().to_u64(), prob.denom().to_u64());
        match (numer, denom) {
            (Some(numer), Some(denom)) => Self {
                numer,
                denom,
                approx: 0.0,
                exact: true,
            },
            _ => Self {
                numer: 0,
                denom: 0,
                approx: prob.to_f64().unwrap_or(0.0),
                exact: false,
            },
        }
    }

    pub(crate) fn flip<R: Rng + ?Sized>(&self, rng: &mut R) -> bool {
        if self.exact {
            rng.random_range(0..self.denom) < self.numer
        } else {
            rng.random::<f64>() < self.approx
        }
    }
}

/// `||v(M) - (p v(m1) + (1-p) v(m2'))||_1` given `v(M) - v(m1)` and
/// `v(m2') - v(m1)`.
pub(crate) fn rounding_deviation(chosen_delta: &[i64], full_delta: &[i64], p: &Rational) -> Rational {
    // target offset from v(m1) is (1-p) * full_delta
    let q = Rational::one() - p;
    chosen_delta
        .iter()
        .zip(full_delta)
        .map(|(&s, &d)| (Rational::from_integer(BigInt::from(s)) - &q * BigInt::from(d)).abs())
        .sum()
}

#[derive(Clone, Debug)]
pub struct RoundingOutcome {
    pub matching: PerfectMatching,
    /// Which bundles were toggled.
    pub chosen: Vec<bool>,
    pub attempts: usize,
    pub deviation: Rational,
    pub bound: f64,
    /// False when the retry cap ran out; the best draw is returned instead.
    pub accepted: bool,
}

/// One draw: bundle `C` is toggled independently with probability `1 - p`.
pub(crate) fn draw_subset<R: Rng + ?Sized>(
    bundles: &[CycleBundle],
    dim: usize,
    coin: &Coin,
    rng: &mut R,
) -> (Vec<bool>, Vec<i64>) {
    let mut sum = vec![0; dim];
    let chosen: Vec<bool> = bundles
        .iter()
        .map(|b| {
            let take = coin.flip(rng);
            if take {
                sum.iter_mut().zip(&b.delta).for_each(|(s, d)| *s += d);
            }
            take
        })
        .collect();
    (chosen, sum)
}

pub(crate) fn full_delta(bundles: &[CycleBundle], dim: usize) -> Vec<i64> {
    let mut d = vec![0; dim];
    for b in bundles {
        d.iter_mut().zip(&b.delta).for_each(|(s, x)| *s += x);
    }
    d
}

pub(crate) fn check_probability(p: &Rational) -> Result<()> {
    if p.is_negative() || *p > Rational::one() {
        return Err(Error::InvalidParameter(format!("probability {p} outside [0, 1]")));
    }
    Ok(())
}

/// Rounds between `m1` (weight `p`) and `m2' = m1 Δ bundles` (weight `1 - p`).
///
/// Each bundle is toggled independently with probability `1 - p`, so
/// `E[v(M)] = p v(m1) + (1 - p) v(m2')`. Draws repeat until the 1-norm
/// distance to that target is within [`rounding_bound`], at most
/// `retry_cap` times.
pub fn round_bundles<R: Rng + ?Sized>(
    g: &ColoredCompleteGraph,
    m1: &PerfectMatching,
    bundles: &[CycleBundle],
    p: &Rational,
    n: usize,
    rng: &mut R,
    retry_cap: usize,
) -> Result<RoundingOutcome> {
    check_probability(p)?;
    g.check_size(n)?;
    let bound = rounding_bound(g.num_colors(), n);
    let total = full_delta(bundles, g.num_colors());
    let coin = Coin::new(&(Rational::one() - p));

    let mut best: Option<(Vec<bool>, Rational)> = None;
    let mut attempts = 0;
    while attempts < retry_cap.max(1) {
        attempts += 1;
        let (chosen, sum) = draw_subset(bundles, g.num_colors(), &coin, rng);
        let dev = rounding_deviation(&sum, &total, p);
        let ok = dev.to_f64().unwrap_or(f64::INFINITY) <= bound;
        if best.as_ref().is_none_or(|(_, b)| dev < *b) {
            best = Some((chosen, dev));
        }
        if ok {
            break;
        }
    }
    let (chosen, deviation) = best.expect("at least one draw");
    let accepted = deviation.to_f64().unwrap_or(f64::INFINITY) <= bound;
    let matching = toggle_bundles(m1, bundles.iter().zip(&chosen).filter(|(_, &c)| c).map(|(b, _)| b));
    Ok(RoundingOutcome {
        matching,
        chosen,
        attempts,
        deviation,
        bound,
        accepted,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::color_vector;
    use crate::instances::random_balanced;
    use crate::rng::rng_from_seed;
    use crate::rounding::split_and_group;
    use crate::rpm::rpm_sample;
    use num_traits::Zero;

    fn setup(seed: u64) -> (ColoredCompleteGraph, PerfectMatching, crate::rounding::SplitResult) {
        let g = random_balanced(4, 10, seed).unwrap();
        let mut rng = rng_from_seed(seed);
        let m1 = rpm_sample(80, &mut rng).unwrap();
        let m2 = rpm_sample(80, &mut rng).unwrap();
        let split = split_and_group(&g, &m1, &m2, 10).unwrap();
        (g, m1, split)
    }

    #[test]
    fn bound_value() {
        // 13 * 4^1.75 * 5^0.75 * sqrt(ln 8)
        assert!((rounding_bound(4, 5) - 709.168111).abs() < 1e-5);
    }

    #[test]
    fn weight_one_keeps_m1() {
        let (g, m1, split) = setup(1);
        let out = round_bundles(&g, &m1, &split.bundles, &Rational::one(), 10, &mut rng_from_seed(2), 50).unwrap();
        assert_eq!(out.matching, m1);
        assert!(out.deviation.is_zero());
        assert_eq!(out.attempts, 1);
    }

    #[test]
    fn weight_zero_gives_m2_prime() {
        let (g, m1, split) = setup(3);
        let out = round_bundles(
            &g,
            &m1,
            &split.bundles,
            &Rational::zero(),
            10,
            &mut rng_from_seed(2),
            50,
        )
        .unwrap();
        assert_eq!(out.matching, split.m2_prime);
        assert!(out.deviation.is_zero());
    }

    #[test]
    fn decomposition_identity_holds() {
        let (g, m1, split) = setup(5);
        let half = Rational::new(1.into(), 2.into());
        let mut rng = rng_from_seed(9);
        for _ in 0..20 {
            let out = round_bundles(&g, &m1, &split.bundles, &half, 10, &mut rng, 50).unwrap();
            assert!(out.accepted);
            let v1 = color_vector(&g, &m1, 10).unwrap().deviations;
            let vm = color_vector(&g, &out.matching, 10).unwrap().deviations;
            let mut expect = v1.clone();
            for (b, &c) in split.bundles.iter().zip(&out.chosen) {
                if c {
                    expect.iter_mut().zip(&b.delta).for_each(|(e, d)| *e += d);
                }
            }
            assert_eq!(vm, expect);
        }
    }

    #[test]
    fn probability_range_checked() {
        let (g, m1, split) = setup(1);
        let p = Rational::new(3.into(), 2.into());
        assert!(round_bundles(&g, &m1, &split.bundles, &p, 10, &mut rng_from_seed(0), 5).is_err());
    }

    #[test]
    fn exact_coin_frequency() {
        let coin = Coin::new(&Rational::new(1.into(), 4.into()));
        let mut rng = rng_from_seed(4);
        let hits = (0..40_000).filter(|_| coin.flip(&mut rng)).count();
        assert!((hits as f64 / 40_000.0 - 0.25).abs() < 0.01);
    }
}
