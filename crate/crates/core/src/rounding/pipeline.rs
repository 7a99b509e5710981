//! Merging a convex combination of matchings into a single matching.
//!
//! Given `M_1..M_s` with weights `p_1..p_s` and `Σ p_j v(M_j) = 0`, stage
//! `i` rounds between the running matching `M_[i]` (weight `P_i = p_1 + .. + p_i`)
//! and `M_{i+1}`. The tracked vector
//! `x_i = P_i v(M_[i]) + Σ_{j>i} p_j v(M_j)` starts at zero and moves by at
//! most [`rounding_bound`] per stage, so the final matching has
//! `f <= (s - 1) * rounding_bound`.

use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};
use rand::Rng;

use super::cycles::{split_and_group, toggle_bundles};
use super::hull::{caratheodory_reduce, ConvexCombination};
use super::round::{draw_subset, full_delta, rounding_bound, rounding_deviation, Coin, DEFAULT_RETRY_CAP};
use super::Rational;
use crate::error::Result;
use crate::graph::{color_vector, ColoredCompleteGraph, PerfectMatching};

/// `13 k^{11/4} n^{3/4} sqrt(ln 2k)`, the bound on the merged matching's `f`.
pub fn merged_bound(k: usize, n: usize) -> f64 {
    k as f64 * rounding_bound(k, n)
}

/// Smallest number of colors for which the bounds are guaranteed.
pub const GUARANTEED_MIN_COLORS: usize = 4;

#[derive(Clone, Debug)]
pub struct StageRecord {
    /// Weight of the running matching in this stage's rounding.
    pub p: Rational,
    pub bundles: usize,
    pub attempts: usize,
    /// Distance of the rounded vector from its target.
    pub rounding_deviation: f64,
    /// `||x_{i+1} - x_i||_1`
    pub step_deviation: f64,
    pub accepted: bool,
}

#[derive(Clone, Debug)]
pub struct RoundingTrace {
    /// `x_1, .., x_s`
    pub stage_vectors: Vec<Vec<Rational>>,
    pub stages: Vec<StageRecord>,
    pub stage_bound: f64,
    pub final_bound: f64,
    /// False for fewer than four colors: the run is still valid but the
    /// bounds are not promised.
    pub guarantee_applies: bool,
}

impl RoundingTrace {
    pub fn all_accepted(&self) -> bool {
        self.stages.iter().all(|s| s.accepted)
    }

    pub fn total_attempts(&self) -> usize {
        self.stages.iter().map(|s| s.attempts).sum()
    }

    pub fn max_step_deviation(&self) -> f64 {
        self.stages.iter().map(|s| s.step_deviation).fold(0.0, f64::max)
    }
}

#[derive(Clone, Debug)]
pub struct PipelineOutcome {
    pub matching: PerfectMatching,
    pub f: u64,
    pub trace: RoundingTrace,
}

fn scaled(w: &Rational, v: &[i64]) -> Vec<Rational> {
    v.iter().map(|&x| w * BigInt::from(x)).collect()
}

fn add(a: &mut [Rational], b: &[Rational]) {
    a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
}

fn l1(a: &[Rational], b: &[Rational]) -> Rational {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = x - y;
            if d < Rational::zero() {
                -d
            } else {
                d
            }
        })
        .sum()
}

fn to_f64(q: &Rational) -> f64 {
    q.to_f64().unwrap_or(f64::INFINITY)
}

/// Runs the merge with the default retry cap.
pub fn theorem3_pipeline<R: Rng + ?Sized>(
    g: &ColoredCompleteGraph,
    n: usize,
    cc: &ConvexCombination,
    rng: &mut R,
) -> Result<PipelineOutcome> {
    merge_combination(g, n, cc, rng, DEFAULT_RETRY_CAP)
}

/// Merges `cc` into a single matching, one split-and-round stage per
/// additional support element.
///
/// A combination with more than `k + 1` matchings is reduced first. Each
/// stage redraws until both the rounding deviation and the step
/// `||x_{i+1} - x_i||_1` are within [`rounding_bound`], up to `retry_cap`
/// draws; an exhausted stage keeps its best draw and is marked not accepted.
pub fn merge_combination<R: Rng + ?Sized>(
    g: &ColoredCompleteGraph,
    n: usize,
    cc: &ConvexCombination,
    rng: &mut R,
    retry_cap: usize,
) -> Result<PipelineOutcome> {
    g.check_size(n)?;
    let k = g.num_colors();
    let cc = caratheodory_reduce(cc, k)?;
    let bound = rounding_bound(k, n);
    let support = cc.support();

    // prefix[i] = p_1 + .. + p_i
    let mut prefix = vec![Rational::zero()];
    for w in &cc.weights {
        let next = prefix.last().unwrap() + w;
        prefix.push(next);
    }
    // tail[i] = Σ_{j >= i} p_j v(M_j), 0-based
    let mut tail = vec![vec![Rational::zero(); k]; support + 1];
    for j in (0..support).rev() {
        let mut t = tail[j + 1].clone();
        add(&mut t, &scaled(&cc.weights[j], &cc.vectors[j]));
        tail[j] = t;
    }

    let mut current = cc.matchings[0].clone();
    let mut current_v = cc.vectors[0].clone();
    let mut x = cc.weighted_sum();
    debug_assert!(x.iter().all(Zero::is_zero));
    let mut trace = RoundingTrace {
        stage_vectors: vec![x.clone()],
        stages: Vec::new(),
        stage_bound: bound,
        final_bound: merged_bound(k, n),
        guarantee_applies: k >= GUARANTEED_MIN_COLORS,
    };

    for i in 1..support {
        // stage merges M_[i] with M_{i+1}; 0-based index i is M_{i+1}
        let p = &prefix[i] / &prefix[i + 1];
        let split = split_and_group(g, &current, &cc.matchings[i], n)?;
        let total = full_delta(&split.bundles, k);
        let coin = Coin::new(&(Rational::from_integer(1.into()) - &p));

        let mut best: Option<(Vec<bool>, Vec<Rational>, f64, f64)> = None;
        let mut attempts = 0;
        let mut accepted = false;
        while attempts < retry_cap.max(1) {
            attempts += 1;
            let (chosen, sum) = draw_subset(&split.bundles, k, &coin, rng);
            let dev = to_f64(&rounding_deviation(&sum, &total, &p));
            let v_new: Vec<i64> = current_v.iter().zip(&sum).map(|(a, b)| a + b).collect();
            let mut x_new = scaled(&prefix[i + 1], &v_new);
            add(&mut x_new, &tail[i + 1]);
            let step = to_f64(&l1(&x_new, &x));
            let ok = dev <= bound && step <= bound;
            if best.as_ref().is_none_or(|b| step.max(dev) < b.3.max(b.2)) || ok {
                best = Some((chosen, x_new, dev, step));
            }
            if ok {
                accepted = true;
                break;
            }
        }
        let (chosen, x_new, dev, step) = best.expect("at least one draw");
        current = toggle_bundles(
            &current,
            split.bundles.iter().zip(&chosen).filter(|(_, &c)| c).map(|(b, _)| b),
        );
        current_v = color_vector(g, &current, n)?.deviations;
        x = x_new;
        trace.stage_vectors.push(x.clone());
        trace.stages.push(StageRecord {
            p,
            bundles: split.bundles.len(),
            attempts,
            rounding_deviation: dev,
            step_deviation: step,
            accepted,
        });
    }

    debug_assert_eq!(
        x,
        current_v
            .iter()
            .map(|&v| Rational::from_integer(v.into()))
            .collect::<Vec<_>>()
    );
    let f = current_v.iter().map(|d| d.unsigned_abs()).sum();
    Ok(PipelineOutcome {
        matching: current,
        f,
        trace,
    })
}
