//! Independent oracles and property checks shared by the integration tests
//! and the acceptance runner. Nothing here calls the counting or bound code
//! it is used to check.

#![allow(dead_code)]

use std::collections::HashSet;

use chromatch::instances::{instance_to_string, read_instance};
use chromatch::oracle::enumerate_matchings;
use chromatch::rng::rng_from_seed;
use chromatch::rounding::SplitResult;
use chromatch::rpm::rpm_sample;
use chromatch::{ColoredCompleteGraph, PerfectMatching, Swap, SwapMode};
use proptest::prelude::*;
use proptest::test_runner::TestCaseError;
use rand::Rng;

/// `(N-1)!!` by direct multiplication.
pub fn double_factorial(order: usize) -> u64 {
    (1..order as u64).step_by(2).product()
}

/// Per-color deviations by scanning the matching's pairs through the
/// checked edge lookup.
pub fn naive_deviations(g: &ColoredCompleteGraph, m: &PerfectMatching, n: usize) -> Vec<i64> {
    let mut counts = vec![0i64; g.num_colors()];
    for u in 0..m.order() {
        let v = m.partner(u);
        if u < v {
            counts[g.edge_color(u, v).unwrap()] += 1;
        }
    }
    counts.iter().map(|c| c - n as i64).collect()
}

pub fn naive_f(g: &ColoredCompleteGraph, m: &PerfectMatching, n: usize) -> i64 {
    naive_deviations(g, m, n).iter().map(|d| d.abs()).sum()
}

/// A coloring with independent uniform edge colors.
pub fn random_coloring(order: usize, k: usize, seed: u64) -> ColoredCompleteGraph {
    let mut rng = rng_from_seed(seed);
    ColoredCompleteGraph::from_fn(order, k, |_, _| rng.random_range(0..k)).unwrap()
}

fn edge_set(m: &PerfectMatching) -> HashSet<(usize, usize)> {
    (0..m.order())
        .filter(|&u| u < m.partner(u))
        .map(|u| (u, m.partner(u)))
        .collect()
}

fn norm(a: usize, b: usize) -> (usize, usize) {
    (a.min(b), a.max(b))
}

/// Re-checks the split postconditions from the edge sets alone, with exact
/// integer comparisons against multiples of `sqrt(kn)`.
pub fn independent_split_check(
    g: &ColoredCompleteGraph,
    m1: &PerfectMatching,
    m2: &PerfectMatching,
    split: &SplitResult,
    n: usize,
) -> Result<(), String> {
    let kn = (g.num_colors() * n) as u128;
    let within = |x: usize, c: u128| (x as u128).pow(2) <= c * c * kn;
    let e1 = edge_set(m1);

    // (iv)
    let mut seen = HashSet::new();
    let mut union: HashSet<(usize, usize)> = HashSet::new();
    for (bi, bundle) in split.bundles.iter().enumerate() {
        let mut weight = 0;
        for cycle in &bundle.cycles {
            let vs = cycle.vertices();
            if vs.len() < 4 || vs.len() % 2 == 1 {
                return Err(format!("bundle {bi}: bad cycle length {}", vs.len()));
            }
            for &v in vs {
                if !seen.insert(v) {
                    return Err(format!("vertex {v} used twice"));
                }
            }
            for i in 0..vs.len() {
                let e = norm(vs[i], vs[(i + 1) % vs.len()]);
                let in_m1 = e1.contains(&e);
                if in_m1 != (i % 2 == 0) {
                    return Err(format!("bundle {bi}: edge {e:?} breaks alternation"));
                }
                weight += in_m1 as usize;
                union.insert(e);
            }
        }
        if !within(weight, 5) {
            return Err(format!("bundle {bi}: {weight} m1 edges"));
        }
    }

    // (i)
    let expected: HashSet<_> = e1.symmetric_difference(&union).copied().collect();
    if expected != edge_set(&split.m2_prime) {
        return Err("m2' is not m1 toggled by the bundle edges".into());
    }

    // (ii)
    let v2 = naive_deviations(g, m2, n);
    let v2p = naive_deviations(g, &split.m2_prime, n);
    let dist: i64 = v2.iter().zip(&v2p).map(|(a, b)| (a - b).abs()).sum();
    if !within(dist as usize, 2) {
        return Err(format!("||v(m2) - v(m2')||_1 = {dist}"));
    }

    // (iii)
    if !within(split.bundles.len(), 3) {
        return Err(format!("{} bundles", split.bundles.len()));
    }
    Ok(())
}

pub fn even_order(max_half: usize) -> impl Strategy<Value = usize> {
    (2..=max_half).prop_map(|h| 2 * h)
}

/// Any swap on a uniform matching keeps it perfect, installs exactly the two
/// new edges, and is undone by its inverse.
pub fn check_swap_validity(order: usize, seed: u64, i: usize, j: usize, crossed: bool) -> Result<(), TestCaseError> {
    let m = rpm_sample(order, &mut rng_from_seed(seed)).unwrap();
    let pairs: Vec<_> = edge_set(&m).into_iter().collect();
    let (i, j) = (i % pairs.len(), j % pairs.len());
    prop_assume!(i != j);
    let mode = if crossed { SwapMode::Crossed } else { SwapMode::Parallel };
    let swap = Swap::new(pairs[i], pairs[j], mode);
    let after = m.apply_swap(&swap).unwrap();
    after.validate().unwrap();
    let before_edges = edge_set(&m);
    let after_edges = edge_set(&after);
    let removed: HashSet<_> = before_edges.difference(&after_edges).copied().collect();
    let added: HashSet<_> = after_edges.difference(&before_edges).copied().collect();
    prop_assert_eq!(removed, [pairs[i], pairs[j]].into_iter().collect::<HashSet<_>>());
    let new: HashSet<_> = swap.new_edges().iter().map(|&(a, b)| norm(a, b)).collect();
    prop_assert_eq!(added, new);
    prop_assert_eq!(after.apply_swap(&swap.inverse()).unwrap(), m);
    Ok(())
}

/// `swap_delta` equals the recounted change of `f` for every matching and
/// every swap of a random coloring of `K_order`.
pub fn check_swap_delta_exhaustive(order: usize, k: usize, seed: u64) -> Result<(), TestCaseError> {
    let n = order / (2 * k);
    let g = random_coloring(order, k, seed);
    for m in enumerate_matchings(order).unwrap() {
        let f0 = naive_f(&g, &m, n);
        let pairs: Vec<_> = edge_set(&m).into_iter().collect();
        for a in 0..pairs.len() {
            for b in a + 1..pairs.len() {
                for mode in SwapMode::BOTH {
                    let swap = Swap::new(pairs[a], pairs[b], mode);
                    let after = m.apply_swap(&swap).unwrap();
                    let expected = naive_f(&g, &after, n) - f0;
                    prop_assert_eq!(chromatch::swap_delta(&g, &m, &swap, n).unwrap(), expected);
                }
            }
        }
    }
    Ok(())
}

/// Writing and re-reading an instance preserves every edge color and the
/// canonical text.
pub fn check_round_trip(order: usize, k: usize, seed: u64) -> Result<(), TestCaseError> {
    let g = random_coloring(order, k, seed);
    let text = instance_to_string(&g);
    let back = read_instance(text.as_bytes()).unwrap();
    prop_assert_eq!(back.order(), order);
    prop_assert_eq!(back.num_colors(), k);
    for v in 1..order {
        for u in 0..v {
            prop_assert_eq!(back.edge_color(u, v).unwrap(), g.edge_color(u, v).unwrap());
        }
    }
    prop_assert_eq!(instance_to_string(&back), text);
    Ok(())
}

/// The enumerator yields `(N-1)!!` distinct valid matchings.
pub fn check_enumeration_count(order: usize) -> Result<(), TestCaseError> {
    let all: Vec<_> = enumerate_matchings(order).unwrap().collect();
    prop_assert_eq!(all.len() as u64, double_factorial(order));
    let distinct: HashSet<_> = all.iter().collect();
    prop_assert_eq!(distinct.len(), all.len());
    for m in &all {
        prop_assert!(m.validate().is_ok());
    }
    Ok(())
}

/// `(order, k)` pairs on six or eight vertices where `k` divides `order / 2`.
pub fn small_shapes() -> impl Strategy<Value = (usize, usize)> {
    prop_oneof![Just((6, 1)), Just((6, 3)), Just((8, 1)), Just((8, 2)), Just((8, 4))]
}
