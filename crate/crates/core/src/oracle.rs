//! Exhaustive ground truth for small orders.

use crate::error::{Error, Result};
use crate::graph::{ColoredCompleteGraph, PerfectMatching};

/// Largest order [`enumerate_matchings`] accepts.
pub const MAX_ENUMERATION_ORDER: usize = 16;

/// Largest order [`verify_lemma1`] sums over.
pub const MAX_SUM_ORDER: usize = 14;

const UNMATCHED: usize = usize::MAX;

/// `(N-1)!!`, the number of perfect matchings of `K_N`.
pub fn matching_count(order: usize) -> u64 {
    (1..order).step_by(2).map(|x| x as u64).product()
}

/// Iterator over all perfect matchings of `K_N`.
///
/// Always pairs the smallest unmatched vertex first, trying partners in
/// increasing order, so the output is lexicographic in the partner array.
pub struct MatchingEnumerator {
    partner: Vec<usize>,
    stack: Vec<(usize, usize)>,
    started: bool,
    done: bool,
}

pub fn enumerate_matchings(order: usize) -> Result<MatchingEnumerator> {
    if !(2..=MAX_ENUMERATION_ORDER).contains(&order) || !order.is_multiple_of(2) {
        return Err(Error::OrderTooLarge {
            order,
            min: 2,
            max: MAX_ENUMERATION_ORDER,
        });
    }
    Ok(MatchingEnumerator {
        partner: vec![UNMATCHED; order],
        stack: Vec::with_capacity(order / 2),
        started: false,
        done: false,
    })
}

impl MatchingEnumerator {
    fn next_free(&self, after: usize) -> Option<usize> {
        (after..self.partner.len()).find(|&v| self.partner[v] == UNMATCHED)
    }

    fn link(&mut self, x: usize, y: usize) {
        self.partner[x] = y;
        self.partner[y] = x;
        self.stack.push((x, y));
    }

    fn descend(&mut self) {
        while let Some(x) = self.next_free(0) {
            self.partner[x] = x; // reserve while looking for y
            let y = self.next_free(x + 1).expect("even order");
            self.link(x, y);
        }
    }

    fn backtrack(&mut self) -> bool {
        while let Some((x, y)) = self.stack.pop() {
            self.partner[y] = UNMATCHED;
            self.partner[x] = x;
            if let Some(next) = self.next_free(y + 1) {
                self.link(x, next);
                self.descend();
                return true;
            }
            self.partner[x] = UNMATCHED;
        }
        false
    }

    /// Advances to the next matching and exposes its partner array.
    pub fn advance(&mut self) -> Option<&[usize]> {
        if self.done {
            return None;
        }
        if !self.started {
            self.started = true;
            self.descend();
        } else if !self.backtrack() {
            self.done = true;
            return None;
        }
        Some(&self.partner)
    }
}

impl Iterator for MatchingEnumerator {
    type Item = PerfectMatching;

    fn next(&mut self) -> Option<PerfectMatching> {
        self.advance()
            .map(|p| PerfectMatching::from_partner_unchecked(p.to_vec()))
    }
}

fn check_oracle_size(g: &ColoredCompleteGraph, n: usize, max: usize) -> Result<()> {
    g.check_size(n)?;
    if g.order() > max {
        return Err(Error::OrderTooLarge {
            order: g.order(),
            min: 2,
            max,
        });
    }
    Ok(())
}

fn deviations_of(g: &ColoredCompleteGraph, partner: &[usize], n: usize, out: &mut [i64]) {
    out.iter_mut().for_each(|d| *d = -(n as i64));
    for (u, &v) in partner.iter().enumerate() {
        if u < v {
            out[g.color(u, v)] += 1;
        }
    }
}

#[derive(Clone, Debug)]
pub struct MinF {
    pub min_f: u64,
    pub witness: PerfectMatching,
    pub minimizers: u64,
}

/// Exact minimum of `f` over all perfect matchings, with the first witness
/// in enumeration order.
pub fn min_f(g: &ColoredCompleteGraph, n: usize) -> Result<MinF> {
    check_oracle_size(g, n, MAX_ENUMERATION_ORDER)?;
    let mut it = enumerate_matchings(g.order())?;
    let mut dev = vec![0i64; g.num_colors()];
    let mut best: Option<(u64, Vec<usize>)> = None;
    let mut minimizers = 0;
    while let Some(p) = it.advance() {
        deviations_of(g, p, n, &mut dev);
        let f: u64 = dev.iter().map(|d| d.unsigned_abs()).sum();
        match &best {
            Some((bf, _)) if f > *bf => {}
            Some((bf, _)) if f == *bf => minimizers += 1,
            _ => {
                best = Some((f, p.to_vec()));
                minimizers = 1;
            }
        }
    }
    let (min_f, witness) = best.expect("at least one matching");
    Ok(MinF {
        min_f,
        witness: PerfectMatching::from_partner_unchecked(witness),
        minimizers,
    })
}

/// Sum of `v(M)` over every perfect matching `M`.
///
/// Zero whenever the coloring is balanced.
pub fn verify_lemma1(g: &ColoredCompleteGraph, n: usize) -> Result<Vec<i64>> {
    check_oracle_size(g, n, MAX_SUM_ORDER)?;
    let mut it = enumerate_matchings(g.order())?;
    let mut dev = vec![0i64; g.num_colors()];
    let mut sum = vec![0i64; g.num_colors()];
    while let Some(p) = it.advance() {
        deviations_of(g, p, n, &mut dev);
        sum.iter_mut().zip(&dev).for_each(|(s, d)| *s += d);
    }
    Ok(sum)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::color_vector;
    use crate::instances::{figure1_instance, random_balanced};
    use std::collections::HashSet;

    #[test]
    fn counts_match_double_factorial() {
        assert_eq!(enumerate_matchings(2).unwrap().count(), 1);
        assert_eq!(enumerate_matchings(6).unwrap().count(), 15);
        assert_eq!(matching_count(12), 10395);
        assert_eq!(enumerate_matchings(12).unwrap().count(), 10395);
    }

    #[test]
    fn enumeration_is_duplicate_free_and_ordered() {
        let all: Vec<_> = enumerate_matchings(8).unwrap().collect();
        let set: HashSet<_> = all.iter().cloned().collect();
        assert_eq!(set.len(), 105);
        assert!(all.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(all[0].pairs(), vec![(0, 1), (2, 3), (4, 5), (6, 7)]);
        for m in &all {
            m.validate().unwrap();
        }
    }

    #[test]
    fn out_of_range_orders() {
        assert!(enumerate_matchings(0).is_err());
        assert!(enumerate_matchings(7).is_err());
        assert!(enumerate_matchings(18).is_err());
        let g = random_balanced(3, 3, 0).unwrap();
        assert!(matches!(min_f(&g, 3), Err(Error::OrderTooLarge { .. })));
        let g = random_balanced(4, 2, 0).unwrap();
        assert!(matches!(verify_lemma1(&g, 2), Err(Error::OrderTooLarge { .. })));
    }

    #[test]
    fn figure1_minimum_is_two() {
        let g = figure1_instance();
        let res = min_f(&g, 1).unwrap();
        assert_eq!(res.min_f, 2);
        assert!(res.minimizers >= 1);
        assert_eq!(color_vector(&g, &res.witness, 1).unwrap().f(), 2);
    }

    #[test]
    fn single_color_minimum_is_zero() {
        let g = ColoredCompleteGraph::from_fn(8, 1, |_, _| 0).unwrap();
        let res = min_f(&g, 4).unwrap();
        assert_eq!((res.min_f, res.minimizers), (0, 105));
    }

    #[test]
    fn two_colors_always_balance() {
        for n in 1..=3 {
            for seed in 0..5 {
                let g = random_balanced(2, n, seed).unwrap();
                assert_eq!(min_f(&g, n).unwrap().min_f, 0, "n={n} seed={seed}");
            }
        }
    }

    #[test]
    fn lemma1_sums_vanish_on_balanced_colorings() {
        assert_eq!(verify_lemma1(&figure1_instance(), 1).unwrap(), vec![0, 0, 0]);
        for seed in 0..3 {
            assert_eq!(
                verify_lemma1(&random_balanced(2, 2, seed).unwrap(), 2).unwrap(),
                vec![0, 0]
            );
        }
    }

    #[test]
    fn lemma1_fails_without_balance() {
        // 4/5/6 split on K6: each edge lies in 3 of the 15 matchings,
        // so the sum is 3 * (4, 5, 6) - 15 * (1, 1, 1)
        let mut seen = 0;
        let g = ColoredCompleteGraph::from_fn(6, 3, |_, _| {
            seen += 1;
            match seen {
                1..=4 => 0,
                5..=9 => 1,
                _ => 2,
            }
        })
        .unwrap();
        assert_eq!(g.color_counts(), &[4, 5, 6]);
        assert_eq!(verify_lemma1(&g, 1).unwrap(), vec![-3, 0, 3]);
    }
}
