//! Alternating cycles of two perfect matchings, and the split-and-group step
//! that turns them into a small number of light cycle bundles.

use std::collections::HashSet;

use num_integer::Roots;

use crate::error::{Error, Result};
use crate::graph::{color_vector, ColoredCompleteGraph, PerfectMatching, Vertex};

/// Cycle `w_0, w_1, ..., w_{2L-1}` whose edges `w_{2t} w_{2t+1}` belong to the
/// reference matching and whose remaining edges do not.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AlternatingCycle {
    vertices: Vec<Vertex>,
}

impl AlternatingCycle {
    pub fn new(vertices: Vec<Vertex>) -> Self {
        debug_assert!(vertices.len().is_multiple_of(2));
        Self { vertices }
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Number of reference-matching edges on the cycle.
    pub fn m1_edges(&self) -> usize {
        self.vertices.len() / 2
    }

    /// `(a, b, in_reference)` for every edge in cyclic order.
    pub fn edges(&self) -> impl Iterator<Item = (Vertex, Vertex, bool)> + '_ {
        let len = self.vertices.len();
        (0..len).map(move |i| (self.vertices[i], self.vertices[(i + 1) % len], i % 2 == 0))
    }
}

/// Cycles of `m1 Δ m2`, each starting at its smallest vertex with an `m1` edge.
pub fn alternating_cycles(m1: &PerfectMatching, m2: &PerfectMatching) -> Result<Vec<AlternatingCycle>> {
    if m1.order() != m2.order() {
        return Err(Error::VertexSetMismatch(m1.order(), m2.order()));
    }
    let mut visited = vec![false; m1.order()];
    let mut cycles = Vec::new();
    for start in 0..m1.order() {
        if visited[start] || m1.partner(start) == m2.partner(start) {
            continue;
        }
        let mut vertices = Vec::new();
        let mut cur = start;
        loop {
            let mate = m1.partner(cur);
            visited[cur] = true;
            visited[mate] = true;
            vertices.push(cur);
            vertices.push(mate);
            cur = m2.partner(mate);
            if cur == start {
                break;
            }
        }
        cycles.push(AlternatingCycle::new(vertices));
    }
    Ok(cycles)
}

/// Vertex-disjoint alternating cycles toggled together, with the change
/// `x(C) = v(M1 Δ E(C)) - v(M1)` they cause.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CycleBundle {
    pub cycles: Vec<AlternatingCycle>,
    pub m1_edge_count: usize,
    pub delta: Vec<i64>,
}

impl CycleBundle {
    pub fn new(g: &ColoredCompleteGraph, cycles: Vec<AlternatingCycle>) -> Self {
        let mut delta = vec![0; g.num_colors()];
        for cycle in &cycles {
            for (a, b, in_ref) in cycle.edges() {
                delta[g.color(a, b)] += if in_ref { -1 } else { 1 };
            }
        }
        let m1_edge_count = cycles.iter().map(AlternatingCycle::m1_edges).sum();
        Self {
            cycles,
            m1_edge_count,
            delta,
        }
    }

    /// Replaces the reference edges of every cycle by its other edges.
    pub fn toggle(&self, partner: &mut [Vertex]) {
        for cycle in &self.cycles {
            for (a, b, in_ref) in cycle.edges() {
                if !in_ref {
                    partner[a] = b;
                    partner[b] = a;
                }
            }
        }
    }

    pub fn edges(&self) -> impl Iterator<Item = (Vertex, Vertex, bool)> + '_ {
        self.cycles.iter().flat_map(|c| c.edges())
    }
}

/// `m1 Δ (union of the given bundles)`.
pub fn toggle_bundles<'a, I>(m1: &PerfectMatching, bundles: I) -> PerfectMatching
where
    I: IntoIterator<Item = &'a CycleBundle>,
{
    let mut out = m1.clone();
    for b in bundles {
        b.toggle(out.partners_mut());
    }
    debug_assert!(out.validate().is_ok());
    out
}

/// Integer comparisons against multiples of `sqrt(kn)`.
#[derive(Clone, Copy, Debug)]
pub(crate) struct SqrtScale {
    kn: u128,
}

impl SqrtScale {
    pub(crate) fn new(k: usize, n: usize) -> Self {
        Self {
            kn: k as u128 * n as u128,
        }
    }

    /// `x <= c * sqrt(kn)`
    pub(crate) fn le(self, x: usize, c: u128) -> bool {
        (x as u128).pow(2) <= c * c * self.kn
    }

    /// `x < c * sqrt(kn)`
    pub(crate) fn lt(self, x: usize, c: u128) -> bool {
        (x as u128).pow(2) < c * c * self.kn
    }

    /// `ceil(sqrt(kn))`
    pub(crate) fn ceil_sqrt(self) -> usize {
        let r = self.kn.sqrt();
        (if r * r == self.kn { r } else { r + 1 }) as usize
    }
}

#[derive(Clone, Debug)]
pub struct SplitResult {
    /// `m1` with every bundle toggled.
    pub m2_prime: PerfectMatching,
    pub bundles: Vec<CycleBundle>,
}

/// Cuts a long cycle into pieces of `s` reference edges each, the last piece
/// taking the remainder (between `s` and `2s - 1` edges). Each piece is closed
/// by joining its two ends.
fn split_long_cycle(cycle: &AlternatingCycle, s: usize) -> Vec<AlternatingCycle> {
    let m = cycle.m1_edges();
    let pieces = m / s;
    debug_assert!(pieces >= 1 && s >= 2);
    (0..pieces)
        .map(|t| {
            let from = 2 * s * t;
            let to = if t + 1 == pieces { cycle.len() } else { 2 * s * (t + 1) };
            AlternatingCycle::new(cycle.vertices()[from..to].to_vec())
        })
        .collect()
}

/// Rebuilds the alternating cycles of `m1 Δ m2` into bundles of bounded weight.
///
/// Cycles with more than `5 sqrt(kn)` reference edges are split into pieces
/// holding at least `ceil(sqrt(kn))` and fewer than `2 ceil(sqrt(kn))`
/// reference edges. Cycles with fewer than `sqrt(kn)` reference edges are
/// packed first-fit decreasing into bundles of weight at most `4 sqrt(kn)`;
/// every other cycle is a bundle of its own. The result satisfies
///
/// * `m2' = m1 Δ E(bundles)`,
/// * `||v(m2) - v(m2')||_1 <= 2 sqrt(kn)`,
/// * at most `3 sqrt(kn)` bundles,
/// * each bundle is a disjoint union of `m1`-alternating cycles with at most
///   `5 sqrt(kn)` reference edges,
///
/// which [`check_split`] re-verifies before returning.
pub fn split_and_group(
    g: &ColoredCompleteGraph,
    m1: &PerfectMatching,
    m2: &PerfectMatching,
    n: usize,
) -> Result<SplitResult> {
    g.check_size(n)?;
    if m1.order() != g.order() {
        return Err(Error::VertexSetMismatch(m1.order(), g.order()));
    }
    let scale = SqrtScale::new(g.num_colors(), n);
    let s = scale.ceil_sqrt();

    let mut pieces = Vec::new();
    for cycle in alternating_cycles(m1, m2)? {
        if scale.le(cycle.m1_edges(), 5) {
            pieces.push(cycle);
        } else {
            pieces.extend(split_long_cycle(&cycle, s));
        }
    }

    let (mut short, long): (Vec<_>, Vec<_>) = pieces.into_iter().partition(|c| scale.lt(c.m1_edges(), 1));
    let mut bundles: Vec<CycleBundle> = long.into_iter().map(|c| CycleBundle::new(g, vec![c])).collect();

    // first-fit decreasing; stable sort keeps discovery order among equals
    short.sort_by_key(|c| std::cmp::Reverse(c.m1_edges()));
    let mut bins: Vec<(usize, Vec<AlternatingCycle>)> = Vec::new();
    for c in short {
        let w = c.m1_edges();
        match bins.iter_mut().find(|(load, _)| scale.le(load + w, 4)) {
            Some((load, members)) => {
                *load += w;
                members.push(c);
            }
            None => bins.push((w, vec![c])),
        }
    }
    bundles.extend(bins.into_iter().map(|(_, members)| CycleBundle::new(g, members)));

    let result = SplitResult {
        m2_prime: toggle_bundles(m1, &bundles),
        bundles,
    };
    check_split(g, m1, m2, &result, n)?;
    Ok(result)
}

fn normalized(a: Vertex, b: Vertex) -> (Vertex, Vertex) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Verifies the four split postconditions from scratch, plus the stored
/// bundle weights and deltas.
pub fn check_split(
    g: &ColoredCompleteGraph,
    m1: &PerfectMatching,
    m2: &PerfectMatching,
    split: &SplitResult,
    n: usize,
) -> Result<()> {
    let fail = |msg: String| Err(Error::Consistency(msg));
    let scale = SqrtScale::new(g.num_colors(), n);

    // (iv) alternation, disjointness, weight
    let mut covered = vec![false; g.order()];
    for (bi, bundle) in split.bundles.iter().enumerate() {
        let mut weight = 0;
        for cycle in &bundle.cycles {
            if cycle.len() < 4 || cycle.len() % 2 != 0 {
                return fail(format!("bundle {bi} has a cycle of length {}", cycle.len()));
            }
            for &v in cycle.vertices() {
                if covered[v] {
                    return fail(format!("vertex {v} appears in two cycles"));
                }
                covered[v] = true;
            }
            for (a, b, in_ref) in cycle.edges() {
                if m1.contains(a, b) != in_ref {
                    return fail(format!("bundle {bi} is not m1-alternating at edge {{{a}, {b}}}"));
                }
            }
            weight += cycle.m1_edges();
        }
        if weight != bundle.m1_edge_count {
            return fail(format!(
                "bundle {bi} records weight {} but has {weight}",
                bundle.m1_edge_count
            ));
        }
        if !scale.le(weight, 5) {
            return fail(format!("bundle {bi} has {weight} m1 edges, above 5 sqrt(kn)"));
        }
        let toggled = toggle_bundles(m1, std::iter::once(bundle));
        let before = color_vector(g, m1, n)?.deviations;
        let after = color_vector(g, &toggled, n)?.deviations;
        let delta: Vec<i64> = after.iter().zip(&before).map(|(a, b)| a - b).collect();
        if delta != bundle.delta {
            return fail(format!(
                "bundle {bi} delta {:?} differs from recount {delta:?}",
                bundle.delta
            ));
        }
    }

    // (i) m2' = m1 Δ E(bundles), by explicit edge sets
    let mut edges: HashSet<(Vertex, Vertex)> = m1.pairs().into_iter().collect();
    for bundle in &split.bundles {
        for (a, b, _) in bundle.edges() {
            let e = normalized(a, b);
            if !edges.remove(&e) {
                edges.insert(e);
            }
        }
    }
    let expected: HashSet<(Vertex, Vertex)> = split.m2_prime.pairs().into_iter().collect();
    if edges != expected {
        return fail("m2' differs from m1 toggled by the bundles".into());
    }

    // (ii)
    let v2 = color_vector(g, m2, n)?.deviations;
    let v2p = color_vector(g, &split.m2_prime, n)?.deviations;
    let dist: u64 = v2.iter().zip(&v2p).map(|(a, b)| (a - b).unsigned_abs()).sum();
    if !scale.le(dist as usize, 2) {
        return fail(format!("||v(m2) - v(m2')||_1 = {dist} exceeds 2 sqrt(kn)"));
    }

    // (iii)
    if !scale.le(split.bundles.len(), 3) {
        return fail(format!("{} bundles exceed 3 sqrt(kn)", split.bundles.len()));
    }
    Ok(())
}
