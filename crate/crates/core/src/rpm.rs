//! Uniform random perfect matchings.
//!
//! The sampler repeatedly pairs the smallest live vertex with a uniformly
//! chosen live partner. Each perfect matching of `K_N` comes out with
//! probability `1 / (N-1)!!`.

use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::{color_vector, ColoredCompleteGraph, PerfectMatching};

/// Default number of draws in [`sample_until_bound`].
pub const DEFAULT_BUDGET: usize = 100;

pub fn rpm_sample<R: Rng + ?Sized>(order: usize, rng: &mut R) -> Result<PerfectMatching> {
    if order < 2 || !order.is_multiple_of(2) {
        return Err(Error::InvalidOrder(order));
    }
    let mut partner = vec![usize::MAX; order];
    let mut removed = vec![false; order];
    // live holds the remaining vertices; pos[v] is v's index in live
    let mut live: Vec<usize> = (0..order).collect();
    let mut pos: Vec<usize> = (0..order).collect();
    let mut cursor = 0;

    let take = |v: usize, live: &mut Vec<usize>, pos: &mut Vec<usize>| {
        let i = pos[v];
        let last = *live.last().unwrap();
        live.swap_remove(i);
        if last != v {
            pos[last] = i;
        }
    };

    while !live.is_empty() {
        while removed[cursor] {
            cursor += 1;
        }
        let x = cursor;
        take(x, &mut live, &mut pos);
        let y = live[rng.random_range(0..live.len())];
        take(y, &mut live, &mut pos);
        removed[x] = true;
        removed[y] = true;
        partner[x] = y;
        partner[y] = x;
    }
    Ok(PerfectMatching::from_partner_unchecked(partner))
}

/// Upper bound `3k sqrt(kn ln 2k)` guaranteed to be met by some matching of a
/// balanced coloring.
pub fn concentration_bound(k: usize, n: usize) -> f64 {
    let (k, n) = (k as f64, n as f64);
    3.0 * k * (k * n * (2.0 * k).ln()).sqrt()
}

#[derive(Clone, Debug)]
pub struct SampleOutcome {
    pub matching: PerfectMatching,
    pub f: u64,
    pub attempts: usize,
    pub bound: f64,
    /// False when the budget ran out; `matching` is then the best draw seen.
    pub within_bound: bool,
}

/// Draws matchings until one meets [`concentration_bound`] or `budget` draws are spent.
pub fn sample_until_bound<R: Rng + ?Sized>(
    g: &ColoredCompleteGraph,
    n: usize,
    budget: usize,
    rng: &mut R,
) -> Result<SampleOutcome> {
    g.check_size(n)?;
    let bound = concentration_bound(g.num_colors(), n);
    let mut best: Option<(PerfectMatching, u64)> = None;
    for attempt in 1..=budget.max(1) {
        let m = rpm_sample(g.order(), rng)?;
        let f = color_vector(g, &m, n)?.f();
        if f as f64 <= bound {
            return Ok(SampleOutcome {
                matching: m,
                f,
                attempts: attempt,
                bound,
                within_bound: true,
            });
        }
        if best.as_ref().is_none_or(|(_, bf)| f < *bf) {
            best = Some((m, f));
        }
    }
    let (matching, f) = best.expect("at least one draw");
    Ok(SampleOutcome {
        matching,
        f,
        attempts: budget.max(1),
        bound,
        within_bound: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;

    #[test]
    fn two_vertices() {
        let mut rng = rng_from_seed(3);
        for _ in 0..10 {
            assert_eq!(rpm_sample(2, &mut rng).unwrap().pairs(), vec![(0, 1)]);
        }
    }

    #[test]
    fn odd_order_rejected() {
        let mut rng = rng_from_seed(3);
        assert!(matches!(rpm_sample(7, &mut rng), Err(Error::InvalidOrder(7))));
        assert!(rpm_sample(0, &mut rng).is_err());
    }

    #[test]
    fn samples_are_valid_and_reproducible() {
        let a: Vec<_> = {
            let mut rng = rng_from_seed(11);
            (0..50).map(|_| rpm_sample(40, &mut rng).unwrap()).collect()
        };
        let mut rng = rng_from_seed(11);
        for m in &a {
            m.validate().unwrap();
            assert_eq!(*m, rpm_sample(40, &mut rng).unwrap());
        }
    }

    #[test]
    fn bound_values() {
        // 9 sqrt(3 ln 6)
        assert!((concentration_bound(3, 1) - 20.866182).abs() < 1e-5);
        assert!(concentration_bound(1, 1) > 0.0);
    }

    #[test]
    fn single_color_succeeds_immediately() {
        let g = ColoredCompleteGraph::from_fn(10, 1, |_, _| 0).unwrap();
        let out = sample_until_bound(&g, 5, DEFAULT_BUDGET, &mut rng_from_seed(1)).unwrap();
        assert_eq!((out.attempts, out.f, out.within_bound), (1, 0, true));
    }

    #[test]
    fn figure1_succeeds_immediately() {
        let g = crate::instances::figure1_instance();
        let out = sample_until_bound(&g, 1, DEFAULT_BUDGET, &mut rng_from_seed(2)).unwrap();
        assert_eq!(out.attempts, 1);
        assert!(out.f <= 4);
    }
}
