//! Colored complete graphs, perfect matchings and the imbalance measure.
//!
//! Vertices are `0..order`. Colors are `0..num_colors` in memory; the file
//! and CLI boundary shifts them to `1..=num_colors`.
//!
//! For a perfect matching `M` of `K_{2kn}`, `v(M)` holds the per-color
//! deviations `m_i(M) - n` and `f(M) = ||v(M)||_1` is the total imbalance.

use std::fmt;

use crate::error::{Error, Result};

pub type Vertex = usize;
pub type Color = usize;

/// Largest number of colors a graph can carry.
pub const MAX_COLORS: usize = u16::MAX as usize;

/// Largest number of edges a graph can carry.
pub const MAX_EDGES: usize = 1 << 28;

/// Position of the unordered pair `{u, v}` in the flat edge array.
#[inline]
pub fn edge_index(u: Vertex, v: Vertex) -> usize {
    let (lo, hi) = if u < v { (u, v) } else { (v, u) };
    hi * (hi - 1) / 2 + lo
}

/// Inverse of [`edge_index`]: returns `(u, v)` with `u < v`.
pub fn edge_endpoints(index: usize) -> (Vertex, Vertex) {
    // hi is the largest integer with hi(hi-1)/2 <= index.
    let mut hi = ((((8 * index + 1) as f64).sqrt() + 1.0) / 2.0) as usize;
    while hi * (hi - 1) / 2 > index {
        hi -= 1;
    }
    while (hi + 1) * hi / 2 <= index {
        hi += 1;
    }
    (index - hi * (hi - 1) / 2, hi)
}

pub fn pair_count(order: usize) -> Option<usize> {
    order.checked_mul(order.checked_sub(1)?).map(|x| x / 2)
}

/// Complete graph `K_order` with every edge assigned one of `num_colors` colors.
#[derive(Clone, PartialEq, Eq)]
pub struct ColoredCompleteGraph {
    order: usize,
    num_colors: usize,
    colors: Vec<u16>,
    counts: Vec<usize>,
}

impl fmt::Debug for ColoredCompleteGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ColoredCompleteGraph")
            .field("order", &self.order)
            .field("num_colors", &self.num_colors)
            .field("color_counts", &self.counts)
            .finish()
    }
}

impl ColoredCompleteGraph {
    /// Builds a graph from colors listed in edge-index order.
    pub fn from_edge_colors(order: usize, num_colors: usize, colors: Vec<Color>) -> Result<Self> {
        if order < 2 || !order.is_multiple_of(2) {
            return Err(Error::InvalidOrder(order));
        }
        if num_colors == 0 {
            return Err(Error::NoColors);
        }
        if num_colors > MAX_COLORS {
            return Err(Error::ColorOutOfRange {
                color: num_colors,
                num_colors: MAX_COLORS,
            });
        }
        let expected = pair_count(order).ok_or(Error::InvalidOrder(order))?;
        if colors.len() != expected {
            return Err(Error::EdgeCountMismatch {
                expected,
                found: colors.len(),
            });
        }
        let mut counts = vec![0; num_colors];
        let mut packed = Vec::with_capacity(colors.len());
        for &c in &colors {
            if c >= num_colors {
                return Err(Error::ColorOutOfRange { color: c, num_colors });
            }
            counts[c] += 1;
            packed.push(c as u16);
        }
        Ok(Self {
            order,
            num_colors,
            colors: packed,
            counts,
        })
    }

    /// Builds a graph by querying `color(u, v)` for every pair `u < v`.
    pub fn from_fn<F>(order: usize, num_colors: usize, mut color: F) -> Result<Self>
    where
        F: FnMut(Vertex, Vertex) -> Color,
    {
        let total = pair_count(order).ok_or(Error::InvalidOrder(order))?;
        let mut colors = Vec::with_capacity(total);
        for v in 1..order {
            for u in 0..v {
                colors.push(color(u, v));
            }
        }
        Self::from_edge_colors(order, num_colors, colors)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn num_colors(&self) -> usize {
        self.num_colors
    }

    pub fn edge_count(&self) -> usize {
        self.colors.len()
    }

    pub fn color_counts(&self) -> &[usize] {
        &self.counts
    }

    /// All color classes have the same size.
    pub fn is_balanced(&self) -> bool {
        self.counts.windows(2).all(|w| w[0] == w[1])
    }

    /// Color of `{u, v}` with range checks.
    pub fn edge_color(&self, u: Vertex, v: Vertex) -> Result<Color> {
        for w in [u, v] {
            if w >= self.order {
                return Err(Error::VertexOutOfRange {
                    vertex: w,
                    order: self.order,
                });
            }
        }
        if u == v {
            return Err(Error::SelfLoop(u));
        }
        Ok(self.color(u, v))
    }

    /// Unchecked color lookup for hot loops.
    #[inline]
    pub fn color(&self, u: Vertex, v: Vertex) -> Color {
        debug_assert!(u != v && u < self.order && v < self.order);
        self.colors[edge_index(u, v)] as Color
    }

    /// Colors in edge-index order.
    pub fn edge_colors(&self) -> impl Iterator<Item = Color> + '_ {
        self.colors.iter().map(|&c| c as Color)
    }

    pub fn color_at_index(&self, index: usize) -> Color {
        self.colors[index] as Color
    }

    pub(crate) fn set_color_at_index(&mut self, index: usize, color: Color) {
        let old = self.colors[index] as Color;
        self.counts[old] -= 1;
        self.counts[color] += 1;
        self.colors[index] = color as u16;
    }

    /// `n` such that `order = 2 * num_colors * n`.
    pub fn balance_parameter(&self) -> Result<usize> {
        let step = 2 * self.num_colors;
        if !self.order.is_multiple_of(step) {
            return Err(Error::SizeMismatch {
                order: self.order,
                k: self.num_colors,
                n: self.order / step,
            });
        }
        Ok(self.order / step)
    }

    pub fn check_size(&self, n: usize) -> Result<()> {
        if n == 0 || 2 * self.num_colors * n != self.order {
            return Err(Error::SizeMismatch {
                order: self.order,
                k: self.num_colors,
                n,
            });
        }
        Ok(())
    }

    /// Graph whose edge `{perm[u], perm[v]}` carries the color of `{u, v}`.
    pub fn relabel(&self, perm: &[Vertex]) -> Result<Self> {
        check_permutation(perm, self.order)?;
        let mut colors = vec![0; self.colors.len()];
        for v in 1..self.order {
            for u in 0..v {
                colors[edge_index(perm[u], perm[v])] = self.color(u, v);
            }
        }
        Self::from_edge_colors(self.order, self.num_colors, colors)
    }
}

fn check_permutation(perm: &[Vertex], order: usize) -> Result<()> {
    if perm.len() != order {
        return Err(Error::VertexSetMismatch(perm.len(), order));
    }
    let mut seen = vec![false; order];
    for &p in perm {
        if p >= order || seen[p] {
            return Err(Error::InvalidMatching(format!("{perm:?} is not a permutation")));
        }
        seen[p] = true;
    }
    Ok(())
}

/// A perfect matching stored as a partner array.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PerfectMatching {
    partner: Vec<Vertex>,
}

impl PerfectMatching {
    pub fn from_partner(partner: Vec<Vertex>) -> Result<Self> {
        let order = partner.len();
        if order < 2 || !order.is_multiple_of(2) {
            return Err(Error::InvalidOrder(order));
        }
        for (u, &v) in partner.iter().enumerate() {
            if v >= order {
                return Err(Error::VertexOutOfRange { vertex: v, order });
            }
            if v == u {
                return Err(Error::InvalidMatching(format!("vertex {u} matched to itself")));
            }
            if partner[v] != u {
                return Err(Error::InvalidMatching(format!(
                    "partner[{u}] = {v} but partner[{v}] = {}",
                    partner[v]
                )));
            }
        }
        Ok(Self { partner })
    }

    pub fn from_pairs(order: usize, pairs: &[(Vertex, Vertex)]) -> Result<Self> {
        if order < 2 || !order.is_multiple_of(2) {
            return Err(Error::InvalidOrder(order));
        }
        if pairs.len() * 2 != order {
            return Err(Error::InvalidMatching(format!(
                "{} pairs cannot cover {order} vertices",
                pairs.len()
            )));
        }
        let mut partner = vec![usize::MAX; order];
        for &(u, v) in pairs {
            for w in [u, v] {
                if w >= order {
                    return Err(Error::VertexOutOfRange { vertex: w, order });
                }
                if partner[w] != usize::MAX {
                    return Err(Error::InvalidMatching(format!("vertex {w} covered twice")));
                }
            }
            if u == v {
                return Err(Error::SelfLoop(u));
            }
            partner[u] = v;
            partner[v] = u;
        }
        Self::from_partner(partner)
    }

    /// The matching `{0,1}, {2,3}, ...`.
    pub fn identity(order: usize) -> Result<Self> {
        if order < 2 || !order.is_multiple_of(2) {
            return Err(Error::InvalidOrder(order));
        }
        Ok(Self {
            partner: (0..order).map(|u| u ^ 1).collect(),
        })
    }

    pub(crate) fn from_partner_unchecked(partner: Vec<Vertex>) -> Self {
        debug_assert!(Self::from_partner(partner.clone()).is_ok());
        Self { partner }
    }

    pub fn order(&self) -> usize {
        self.partner.len()
    }

    #[inline]
    pub fn partner(&self, u: Vertex) -> Vertex {
        self.partner[u]
    }

    pub fn partners(&self) -> &[Vertex] {
        &self.partner
    }

    pub fn contains(&self, u: Vertex, v: Vertex) -> bool {
        u < self.order() && v < self.order() && u != v && self.partner[u] == v
    }

    /// Pairs `(u, v)` with `u < v`, ordered by `u`.
    pub fn pairs(&self) -> Vec<(Vertex, Vertex)> {
        self.partner
            .iter()
            .enumerate()
            .filter(|&(u, &v)| u < v)
            .map(|(u, &v)| (u, v))
            .collect()
    }

    /// Re-checks the partner-array invariants.
    pub fn validate(&self) -> Result<()> {
        Self::from_partner(self.partner.clone()).map(|_| ())
    }

    pub fn relabel(&self, perm: &[Vertex]) -> Result<Self> {
        check_permutation(perm, self.order())?;
        let mut partner = vec![0; self.order()];
        for (u, &v) in self.partner.iter().enumerate() {
            partner[perm[u]] = perm[v];
        }
        Ok(Self { partner })
    }

    /// Returns the matching with `swap` applied.
    pub fn apply_swap(&self, swap: &Swap) -> Result<Self> {
        swap.check(self)?;
        let mut out = self.clone();
        out.swap_unchecked(swap);
        Ok(out)
    }

    pub(crate) fn swap_unchecked(&mut self, swap: &Swap) {
        for (a, b) in swap.new_edges() {
            self.partner[a] = b;
            self.partner[b] = a;
        }
    }

    pub(crate) fn partners_mut(&mut self) -> &mut [Vertex] {
        &mut self.partner
    }
}

/// The two ways of rewiring matching edges `uv` and `xy`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SwapMode {
    /// `{uv, xy} -> {ux, vy}`
    Parallel,
    /// `{uv, xy} -> {uy, vx}`
    Crossed,
}

impl SwapMode {
    pub const BOTH: [SwapMode; 2] = [SwapMode::Parallel, SwapMode::Crossed];
}

/// Replacement of two matching edges by a pair of parallel edges.
///
/// Endpoint order matters: `first = (u, v)` and `second = (x, y)` decide
/// which vertices get paired by each mode.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Swap {
    pub first: (Vertex, Vertex),
    pub second: (Vertex, Vertex),
    pub mode: SwapMode,
}

impl Swap {
    pub fn new(first: (Vertex, Vertex), second: (Vertex, Vertex), mode: SwapMode) -> Self {
        Self { first, second, mode }
    }

    pub fn new_edges(&self) -> [(Vertex, Vertex); 2] {
        let (u, v) = self.first;
        let (x, y) = self.second;
        match self.mode {
            SwapMode::Parallel => [(u, x), (v, y)],
            SwapMode::Crossed => [(u, y), (v, x)],
        }
    }

    /// The swap that restores the matching this swap was applied to.
    pub fn inverse(&self) -> Self {
        // new edges are (u, _) and (v, _) in both modes
        let [a, b] = self.new_edges();
        Self::new(a, b, SwapMode::Parallel)
    }

    fn check(&self, m: &PerfectMatching) -> Result<()> {
        let (u, v) = self.first;
        let (x, y) = self.second;
        for w in [u, v, x, y] {
            if w >= m.order() {
                return Err(Error::VertexOutOfRange {
                    vertex: w,
                    order: m.order(),
                });
            }
        }
        if !m.contains(u, v) {
            return Err(Error::EdgeNotInMatching(u, v));
        }
        if !m.contains(x, y) {
            return Err(Error::EdgeNotInMatching(x, y));
        }
        if u == x || u == y {
            return Err(Error::DegenerateSwap);
        }
        Ok(())
    }
}

/// `v(M)` together with its 1-norm `f(M)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ColorVector {
    pub deviations: Vec<i64>,
    pub norm1: u64,
}

impl ColorVector {
    pub fn from_deviations(deviations: Vec<i64>) -> Self {
        let norm1 = deviations.iter().map(|d| d.unsigned_abs()).sum();
        Self { deviations, norm1 }
    }

    pub fn f(&self) -> u64 {
        self.norm1
    }

    pub fn is_zero(&self) -> bool {
        self.norm1 == 0
    }
}

/// Number of matching edges of each color.
pub fn matching_color_counts(g: &ColoredCompleteGraph, m: &PerfectMatching) -> Result<Vec<usize>> {
    if g.order() != m.order() {
        return Err(Error::VertexSetMismatch(g.order(), m.order()));
    }
    let mut counts = vec![0; g.num_colors()];
    for (u, v) in m.pairs() {
        counts[g.color(u, v)] += 1;
    }
    Ok(counts)
}

pub fn color_vector(g: &ColoredCompleteGraph, m: &PerfectMatching, n: usize) -> Result<ColorVector> {
    g.check_size(n)?;
    let counts = matching_color_counts(g, m)?;
    Ok(ColorVector::from_deviations(
        counts.iter().map(|&c| c as i64 - n as i64).collect(),
    ))
}

/// The four color-count changes a swap causes: two removals, two additions.
fn swap_color_changes(g: &ColoredCompleteGraph, swap: &Swap) -> [(Color, i64); 4] {
    let [a, b] = swap.new_edges();
    [
        (g.color(swap.first.0, swap.first.1), -1),
        (g.color(swap.second.0, swap.second.1), -1),
        (g.color(a.0, a.1), 1),
        (g.color(b.0, b.1), 1),
    ]
}

/// Change of `f` caused by `swap`, given the current deviations. O(1).
pub fn swap_delta_from(g: &ColoredCompleteGraph, deviations: &[i64], swap: &Swap) -> i64 {
    let mut merged: [(Color, i64); 4] = [(usize::MAX, 0); 4];
    let mut len = 0;
    for (c, d) in swap_color_changes(g, swap) {
        match merged[..len].iter_mut().find(|(mc, _)| *mc == c) {
            Some(slot) => slot.1 += d,
            None => {
                merged[len] = (c, d);
                len += 1;
            }
        }
    }
    merged[..len]
        .iter()
        .map(|&(c, d)| (deviations[c] + d).abs() - deviations[c].abs())
        .sum()
}

/// `f(apply_swap(m, swap)) - f(m)` without building the new matching.
pub fn swap_delta(g: &ColoredCompleteGraph, m: &PerfectMatching, swap: &Swap, n: usize) -> Result<i64> {
    swap.check(m)?;
    let cv = color_vector(g, m, n)?;
    Ok(swap_delta_from(g, &cv.deviations, swap))
}

/// A matching with its deviation vector kept current under swaps.
#[derive(Clone, Debug)]
pub struct MatchingState {
    matching: PerfectMatching,
    deviations: Vec<i64>,
    f: i64,
}

impl MatchingState {
    pub fn new(g: &ColoredCompleteGraph, matching: PerfectMatching, n: usize) -> Result<Self> {
        let cv = color_vector(g, &matching, n)?;
        Ok(Self {
            matching,
            f: cv.norm1 as i64,
            deviations: cv.deviations,
        })
    }

    pub fn matching(&self) -> &PerfectMatching {
        &self.matching
    }

    pub fn into_matching(self) -> PerfectMatching {
        self.matching
    }

    pub fn deviations(&self) -> &[i64] {
        &self.deviations
    }

    pub fn f(&self) -> u64 {
        self.f as u64
    }

    pub fn delta(&self, g: &ColoredCompleteGraph, swap: &Swap) -> i64 {
        swap_delta_from(g, &self.deviations, swap)
    }

    /// Applies a swap already known to be valid for the current matching.
    pub fn apply(&mut self, g: &ColoredCompleteGraph, swap: &Swap) {
        debug_assert!(swap.check(&self.matching).is_ok());
        self.f += self.delta(g, swap);
        for (c, d) in swap_color_changes(g, swap) {
            self.deviations[c] += d;
        }
        self.matching.swap_unchecked(swap);
        #[cfg(debug_assertions)]
        {
            let n = (self.matching.order() / (2 * g.num_colors())) as i64;
            let counts = matching_color_counts(g, &self.matching).unwrap();
            for (c, &cnt) in counts.iter().enumerate() {
                debug_assert_eq!(cnt as i64 - n, self.deviations[c]);
            }
            debug_assert_eq!(self.f, self.deviations.iter().map(|d| d.abs()).sum::<i64>());
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::figure1_instance;

    #[test]
    fn edge_index_roundtrip() {
        for v in 1..60 {
            for u in 0..v {
                let i = edge_index(u, v);
                assert_eq!(edge_index(v, u), i);
                assert_eq!(edge_endpoints(i), (u, v));
            }
        }
        assert_eq!(edge_index(0, 1), 0);
        assert_eq!(edge_index(1, 2), 2);
    }

    #[test]
    fn edge_color_errors_and_symmetry() {
        let g = figure1_instance();
        assert!(matches!(g.edge_color(0, 6), Err(Error::VertexOutOfRange { .. })));
        assert!(matches!(g.edge_color(3, 3), Err(Error::SelfLoop(3))));
        for u in 0..6 {
            for v in 0..6 {
                if u != v {
                    assert_eq!(g.edge_color(u, v).unwrap(), g.edge_color(v, u).unwrap());
                }
            }
        }
        // u1u2 is bold
        assert_eq!(g.edge_color(0, 1).unwrap(), 0);
    }

    #[test]
    fn figure1_color_vector() {
        let g = figure1_instance();
        // {u1u2, u3u5, u4u6}
        let m = PerfectMatching::from_pairs(6, &[(0, 1), (2, 4), (3, 5)]).unwrap();
        let cv = color_vector(&g, &m, 1).unwrap();
        assert_eq!(cv.deviations, vec![0, 1, -1]);
        assert_eq!(cv.f(), 2);
    }

    #[test]
    fn single_color_is_always_balanced() {
        let g = ColoredCompleteGraph::from_fn(8, 1, |_, _| 0).unwrap();
        let cv = color_vector(&g, &PerfectMatching::identity(8).unwrap(), 4).unwrap();
        assert_eq!(cv.deviations, vec![0]);
        assert!(cv.is_zero());
    }

    #[test]
    fn size_mismatch_rejected() {
        let g = figure1_instance();
        let m = PerfectMatching::identity(6).unwrap();
        assert!(matches!(color_vector(&g, &m, 2), Err(Error::SizeMismatch { .. })));
    }

    #[test]
    fn four_vertex_swap() {
        let m = PerfectMatching::from_pairs(4, &[(0, 1), (2, 3)]).unwrap();
        let s = Swap::new((0, 1), (2, 3), SwapMode::Parallel);
        let out = m.apply_swap(&s).unwrap();
        assert_eq!(out.pairs(), vec![(0, 2), (1, 3)]);
        let back = out.apply_swap(&s.inverse()).unwrap();
        assert_eq!(back, m);

        let crossed = Swap::new((0, 1), (2, 3), SwapMode::Crossed);
        let out = m.apply_swap(&crossed).unwrap();
        assert_eq!(out.pairs(), vec![(0, 3), (1, 2)]);
        assert_eq!(out.apply_swap(&crossed.inverse()).unwrap(), m);
    }

    #[test]
    fn swap_errors() {
        let m = PerfectMatching::from_pairs(4, &[(0, 1), (2, 3)]).unwrap();
        let bad = Swap::new((0, 2), (1, 3), SwapMode::Parallel);
        assert!(matches!(m.apply_swap(&bad), Err(Error::EdgeNotInMatching(0, 2))));
        let same = Swap::new((0, 1), (1, 0), SwapMode::Parallel);
        assert!(matches!(m.apply_swap(&same), Err(Error::DegenerateSwap)));
    }

    #[test]
    fn figure1_swap_delta_matches_recount() {
        let g = figure1_instance();
        let m = PerfectMatching::from_pairs(6, &[(0, 1), (2, 4), (3, 5)]).unwrap();
        // {u1u2, u3u5} -> {u1u3, u2u5}
        let s = Swap::new((0, 1), (2, 4), SwapMode::Parallel);
        let after = m.apply_swap(&s).unwrap();
        assert_eq!(after.pairs(), vec![(0, 2), (1, 4), (3, 5)]);
        let direct = color_vector(&g, &after, 1).unwrap().f() as i64 - 2;
        assert_eq!(swap_delta(&g, &m, &s, 1).unwrap(), direct);
    }

    #[test]
    fn monochromatic_swap_has_zero_delta() {
        let g = ColoredCompleteGraph::from_fn(12, 3, |_, _| 1).unwrap();
        let m = PerfectMatching::identity(12).unwrap();
        let s = Swap::new((0, 1), (4, 5), SwapMode::Crossed);
        assert_eq!(swap_delta(&g, &m, &s, 2).unwrap(), 0);
    }

    #[test]
    fn invalid_partner_arrays() {
        assert!(PerfectMatching::from_partner(vec![1, 0, 2, 2]).is_err());
        assert!(PerfectMatching::from_partner(vec![1, 2, 0, 3]).is_err());
        assert!(PerfectMatching::from_partner(vec![1, 0, 3]).is_err());
        assert!(PerfectMatching::from_pairs(4, &[(0, 1), (1, 2)]).is_err());
    }
}
