//! Exact convex combinations of matching vectors that sum to the origin.

use std::collections::HashMap;

use num_traits::{One, Signed, Zero};
use rand::Rng;

use super::lp::feasible_point;
use super::Rational;
use crate::error::{Error, Result};
use crate::graph::{color_vector, ColoredCompleteGraph, PerfectMatching};
use crate::rpm::rpm_sample;

/// Matchings with positive rational weights summing to one whose weighted
/// `v`-vectors sum to zero.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvexCombination {
    pub matchings: Vec<PerfectMatching>,
    pub weights: Vec<Rational>,
    pub vectors: Vec<Vec<i64>>,
}

fn int(v: i64) -> Rational {
    Rational::from_integer(v.into())
}

impl ConvexCombination {
    /// Builds and validates a combination.
    pub fn new(
        g: &ColoredCompleteGraph,
        n: usize,
        matchings: Vec<PerfectMatching>,
        weights: Vec<Rational>,
    ) -> Result<Self> {
        let vectors = matchings
            .iter()
            .map(|m| color_vector(g, m, n).map(|cv| cv.deviations))
            .collect::<Result<Vec<_>>>()?;
        let cc = Self {
            matchings,
            weights,
            vectors,
        };
        cc.check_weights()?;
        Ok(cc)
    }

    pub fn support(&self) -> usize {
        self.matchings.len()
    }

    pub fn dimension(&self) -> usize {
        self.vectors.first().map_or(0, Vec::len)
    }

    /// `sum_i weights[i] * v(matchings[i])`
    pub fn weighted_sum(&self) -> Vec<Rational> {
        let mut sum = vec![Rational::zero(); self.dimension()];
        for (w, v) in self.weights.iter().zip(&self.vectors) {
            for (s, &x) in sum.iter_mut().zip(v) {
                *s += w * int(x);
            }
        }
        sum
    }

    fn check_weights(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidCombination(msg));
        if self.matchings.is_empty() {
            return bad("empty combination".into());
        }
        if self.weights.len() != self.matchings.len() || self.vectors.len() != self.matchings.len() {
            return bad("length mismatch".into());
        }
        if let Some(w) = self.weights.iter().find(|w| !w.is_positive()) {
            return bad(format!("weight {w} is not positive"));
        }
        let total: Rational = self.weights.iter().sum();
        if !total.is_one() {
            return bad(format!("weights sum to {total}"));
        }
        if let Some(s) = self.weighted_sum().iter().find(|s| !s.is_zero()) {
            return bad(format!("weighted sum has nonzero entry {s}"));
        }
        Ok(())
    }

    /// Recomputes every vector from the graph and re-checks all invariants.
    pub fn verify(&self, g: &ColoredCompleteGraph, n: usize) -> Result<()> {
        for (m, v) in self.matchings.iter().zip(&self.vectors) {
            if color_vector(g, m, n)?.deviations != *v {
                return Err(Error::InvalidCombination("stored vector differs from recount".into()));
            }
        }
        self.check_weights()
    }
}

fn solve_hull(vectors: &[Vec<i64>]) -> Option<Vec<(usize, Rational)>> {
    if let Some(i) = vectors.iter().position(|v| v.iter().all(|&x| x == 0)) {
        return Some(vec![(i, Rational::one())]);
    }
    // one LP column per distinct vector
    let mut first: HashMap<&[i64], usize> = HashMap::new();
    let mut cols = Vec::new();
    for (i, v) in vectors.iter().enumerate() {
        first.entry(v.as_slice()).or_insert_with(|| {
            cols.push(i);
            i
        });
    }
    let dim = vectors[0].len();
    let mut a: Vec<Vec<Rational>> = (0..dim)
        .map(|c| cols.iter().map(|&i| int(vectors[i][c])).collect())
        .collect();
    a.push(vec![Rational::one(); cols.len()]);
    let mut b = vec![Rational::zero(); dim];
    b.push(Rational::one());

    let x = feasible_point(&a, &b)?;
    Some(
        cols.iter()
            .zip(x)
            .filter(|(_, w)| !w.is_zero())
            .map(|(&i, w)| (i, w))
            .collect(),
    )
}

/// Certifies that the origin lies in the convex hull of the matching vectors.
///
/// Solves the feasibility problem over `matchings`; while it is infeasible,
/// adds batches of uniform random matchings until `sample_budget` extra
/// samples have been drawn.
pub fn certify_origin<R: Rng + ?Sized>(
    g: &ColoredCompleteGraph,
    n: usize,
    matchings: &[PerfectMatching],
    sample_budget: usize,
    rng: &mut R,
) -> Result<ConvexCombination> {
    g.check_size(n)?;
    let mut pool = matchings.to_vec();
    let mut vectors = pool
        .iter()
        .map(|m| color_vector(g, m, n).map(|cv| cv.deviations))
        .collect::<Result<Vec<_>>>()?;
    let mut drawn = 0;
    loop {
        if !vectors.is_empty() {
            if let Some(sol) = solve_hull(&vectors) {
                let (ms, ws) = sol.into_iter().map(|(i, w)| (pool[i].clone(), w)).unzip();
                return ConvexCombination::new(g, n, ms, ws);
            }
        }
        if drawn >= sample_budget {
            return Err(Error::HullNotCertified { samples: pool.len() });
        }
        let batch = pool.len().max(16).min(sample_budget - drawn);
        for _ in 0..batch {
            let m = rpm_sample(g.order(), rng)?;
            vectors.push(color_vector(g, &m, n)?.deviations);
            pool.push(m);
        }
        drawn += batch;
    }
}

/// Nonzero `λ` with `Σ λ_j = 0` and `Σ λ_j v_j = 0` over the given columns.
fn affine_dependency(vectors: &[&Vec<i64>]) -> Option<Vec<Rational>> {
    let cols = vectors.len();
    let dim = vectors[0].len();
    let mut m: Vec<Vec<Rational>> = (0..dim).map(|r| vectors.iter().map(|v| int(v[r])).collect()).collect();
    m.push(vec![Rational::one(); cols]);

    // reduced row echelon form
    let mut pivots = Vec::new();
    let mut row = 0;
    for col in 0..cols {
        let Some(p) = (row..m.len()).find(|&r| !m[r][col].is_zero()) else {
            continue;
        };
        m.swap(row, p);
        let inv = m[row][col].recip();
        for x in m[row].iter_mut() {
            *x *= &inv;
        }
        let pivot_row = m[row].clone();
        for (r, other) in m.iter_mut().enumerate() {
            if r != row && !other[col].is_zero() {
                let f = other[col].clone();
                for (x, p) in other.iter_mut().zip(&pivot_row) {
                    *x -= &f * p;
                }
            }
        }
        pivots.push(col);
        row += 1;
        if row == m.len() {
            break;
        }
    }
    let free = (0..cols).find(|c| !pivots.contains(c))?;
    let mut lambda = vec![Rational::zero(); cols];
    lambda[free] = Rational::one();
    for (r, &pc) in pivots.iter().enumerate() {
        lambda[pc] = -m[r][free].clone();
    }
    Some(lambda)
}

/// Shrinks the support to at most `k + 1` matchings, keeping the weighted
/// sum exactly zero.
///
/// Identical matchings are merged first. Then, while the support is too
/// large, an affine dependency among `k + 2` of the vectors is used to shift
/// weight until one of them drops to zero.
pub fn caratheodory_reduce(cc: &ConvexCombination, k: usize) -> Result<ConvexCombination> {
    cc.check_weights()?;
    if cc.support() <= k + 1 {
        return Ok(cc.clone());
    }
    let mut merged: Vec<(PerfectMatching, Rational, Vec<i64>)> = Vec::new();
    let mut index: HashMap<&PerfectMatching, usize> = HashMap::new();
    for ((m, w), v) in cc.matchings.iter().zip(&cc.weights).zip(&cc.vectors) {
        match index.get(m) {
            Some(&i) => merged[i].1 += w,
            None => {
                index.insert(m, merged.len());
                merged.push((m.clone(), w.clone(), v.clone()));
            }
        }
    }

    while merged.len() > k + 1 {
        let window: Vec<&Vec<i64>> = merged[..k + 2].iter().map(|(_, _, v)| v).collect();
        let mut lambda = affine_dependency(&window)
            .ok_or_else(|| Error::Consistency("k + 2 vectors without an affine dependency".into()))?;
        if !lambda.iter().any(|l| l.is_positive()) {
            lambda.iter_mut().for_each(|l| *l = -l.clone());
        }
        let (drop, step) = lambda
            .iter()
            .enumerate()
            .filter(|(_, l)| l.is_positive())
            .map(|(j, l)| (j, &merged[j].1 / l))
            .min_by(|a, b| a.1.cmp(&b.1).then(a.0.cmp(&b.0)))
            .expect("dependency has a positive entry");
        for (j, l) in lambda.iter().enumerate() {
            merged[j].1 -= &step * l;
        }
        merged[drop].1 = Rational::zero();
        merged.retain(|(_, w, _)| !w.is_zero());
    }

    let (matchings, rest): (Vec<_>, Vec<_>) = merged.into_iter().map(|(m, w, v)| (m, (w, v))).unzip();
    let (weights, vectors) = rest.into_iter().unzip();
    let out = ConvexCombination {
        matchings,
        weights,
        vectors,
    };
    out.check_weights()?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::random_balanced;
    use crate::oracle::enumerate_matchings;
    use crate::rng::rng_from_seed;

    fn q(a: i64, b: i64) -> Rational {
        Rational::new(a.into(), b.into())
    }

    #[test]
    fn zero_vector_gets_full_weight() {
        let g = random_balanced(2, 2, 4).unwrap();
        let all: Vec<_> = enumerate_matchings(8).unwrap().collect();
        let cc = certify_origin(&g, 2, &all, 0, &mut rng_from_seed(0)).unwrap();
        assert_eq!(cc.support(), 1);
        assert_eq!(cc.weights, vec![Rational::one()]);
        assert!(cc.vectors[0].iter().all(|&x| x == 0));
    }

    #[test]
    fn antipodal_vectors_split_evenly() {
        assert_eq!(
            solve_hull(&[vec![2, -2], vec![-2, 2]]),
            Some(vec![(0, q(1, 2)), (1, q(1, 2))])
        );
        assert_eq!(solve_hull(&[vec![2, -2], vec![4, -4]]), None);
    }

    #[test]
    fn balanced_instance_certified_from_samples() {
        let g = random_balanced(4, 3, 7).unwrap();
        let mut rng = rng_from_seed(1);
        let samples: Vec<_> = (0..200).map(|_| rpm_sample(24, &mut rng).unwrap()).collect();
        let cc = certify_origin(&g, 3, &samples, 0, &mut rng).unwrap();
        cc.verify(&g, 3).unwrap();
        assert!(cc.weighted_sum().iter().all(Zero::is_zero));
        assert!(cc.support() <= 5);
    }

    #[test]
    fn impossible_hull_reports_failure() {
        // single color class 0 everywhere except one edge: every matching
        // over-uses color 0, so the origin is outside the hull
        let g = ColoredCompleteGraph::from_fn(8, 2, |u, v| usize::from((u, v) == (0, 1))).unwrap();
        let samples = vec![PerfectMatching::identity(8).unwrap()];
        let err = certify_origin(&g, 2, &samples, 40, &mut rng_from_seed(3)).unwrap_err();
        assert!(matches!(err, Error::HullNotCertified { samples: 41 }));
    }

    #[test]
    fn invalid_combinations_rejected() {
        let g = random_balanced(2, 1, 0).unwrap();
        let m = PerfectMatching::identity(4).unwrap();
        let v = color_vector(&g, &m, 1).unwrap();
        let res = ConvexCombination::new(&g, 1, vec![m.clone()], vec![q(1, 2)]);
        assert!(matches!(res, Err(Error::InvalidCombination(_))));
        if !v.is_zero() {
            assert!(ConvexCombination::new(&g, 1, vec![m], vec![q(1, 1)]).is_err());
        }
    }

    #[test]
    fn small_support_unchanged() {
        let g = random_balanced(3, 2, 2).unwrap();
        let mut rng = rng_from_seed(5);
        let samples: Vec<_> = (0..100).map(|_| rpm_sample(12, &mut rng).unwrap()).collect();
        let cc = certify_origin(&g, 2, &samples, 0, &mut rng).unwrap();
        assert!(cc.support() <= 4);
        assert_eq!(caratheodory_reduce(&cc, 3).unwrap(), cc);
    }

    #[test]
    fn duplicate_zero_matchings_collapse() {
        let g = random_balanced(2, 2, 4).unwrap();
        let zero = crate::oracle::min_f(&g, 2).unwrap().witness;
        let k = 2;
        let copies = k + 3;
        let cc = ConvexCombination::new(&g, 2, vec![zero.clone(); copies], vec![q(1, copies as i64); copies]).unwrap();
        let out = caratheodory_reduce(&cc, k).unwrap();
        assert_eq!(out.matchings, vec![zero]);
        assert_eq!(out.weights, vec![Rational::one()]);
    }

    #[test]
    fn affine_dependency_is_a_dependency() {
        let vs = [
            vec![1, -1, 0],
            vec![0, 1, -1],
            vec![-1, 0, 1],
            vec![2, -1, -1],
            vec![0, 0, 0],
        ];
        let refs: Vec<_> = vs.iter().collect();
        let l = affine_dependency(&refs).unwrap();
        assert!(l.iter().any(|x| !x.is_zero()));
        assert!(l.iter().sum::<Rational>().is_zero());
        for c in 0..3 {
            let s: Rational = l.iter().zip(&vs).map(|(x, v)| x * int(v[c])).sum();
            assert!(s.is_zero());
        }
    }
}
