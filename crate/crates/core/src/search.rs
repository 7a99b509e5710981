//! Swap-based local search minimizing `f`.
//!
//! The neighborhood of a matching is every unordered pair of its edges under
//! both rewirings. Descent takes the best improving swap; at a local minimum
//! a bounded number of random zero-delta swaps walk the plateau.

use rand::Rng;
use rayon::prelude::*;

use crate::error::Result;
use crate::graph::{ColoredCompleteGraph, MatchingState, PerfectMatching, Swap, SwapMode};
use crate::rng::derived_rng;
use crate::rpm::rpm_sample;

/// Default number of plateau moves per search.
pub const DEFAULT_PLATEAU_BUDGET: usize = 200;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Move {
    pub swap: Swap,
    pub delta: i64,
}

fn swap_for(edges: &[(usize, usize)], i: usize, j: usize, mode: SwapMode) -> Swap {
    Swap::new(edges[i], edges[j], mode)
}

/// Calls `visit(i, j, swap, delta)` for every neighbor in tie-break order.
fn scan<F: FnMut(usize, usize, Swap, i64)>(g: &ColoredCompleteGraph, state: &MatchingState, mut visit: F) {
    let edges = state.matching().pairs();
    for i in 0..edges.len() {
        for j in i + 1..edges.len() {
            for mode in SwapMode::BOTH {
                let swap = swap_for(&edges, i, j, mode);
                visit(i, j, swap, state.delta(g, &swap));
            }
        }
    }
}

fn best_in(g: &ColoredCompleteGraph, state: &MatchingState) -> Option<Move> {
    let mut best: Option<Move> = None;
    scan(g, state, |_, _, swap, delta| {
        if delta < 0 && best.is_none_or(|b| delta < b.delta) {
            best = Some(Move { swap, delta });
        }
    });
    best
}

/// The improving swap with the smallest delta, if any.
///
/// Edges are indexed by their position in [`PerfectMatching::pairs`]; ties go
/// to the lowest `(i, j, mode)`.
pub fn best_swap(g: &ColoredCompleteGraph, m: &PerfectMatching, n: usize) -> Result<Option<Move>> {
    let state = MatchingState::new(g, m.clone(), n)?;
    Ok(best_in(g, &state))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StepKind {
    Improve,
    Plateau,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TraceStep {
    pub kind: StepKind,
    pub swap: Swap,
    pub f_after: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SearchTrace {
    pub initial_f: u64,
    pub final_f: u64,
    pub steps: Vec<TraceStep>,
}

impl SearchTrace {
    pub fn improving_steps(&self) -> usize {
        self.steps.iter().filter(|s| s.kind == StepKind::Improve).count()
    }

    pub fn plateau_steps(&self) -> usize {
        self.steps.iter().filter(|s| s.kind == StepKind::Plateau).count()
    }

    /// `f` values from the start through every step.
    pub fn f_values(&self) -> impl Iterator<Item = u64> + '_ {
        std::iter::once(self.initial_f).chain(self.steps.iter().map(|s| s.f_after))
    }
}

pub fn local_search<R: Rng + ?Sized>(
    g: &ColoredCompleteGraph,
    m0: PerfectMatching,
    n: usize,
    plateau_budget: usize,
    rng: &mut R,
) -> Result<(PerfectMatching, SearchTrace)> {
    let mut state = MatchingState::new(g, m0, n)?;
    let mut trace = SearchTrace {
        initial_f: state.f(),
        ..Default::default()
    };
    let mut budget = plateau_budget;
    let mut level: Vec<Swap> = Vec::new();

    while state.f() > 0 {
        if let Some(mv) = best_in(g, &state) {
            state.apply(g, &mv.swap);
            trace.steps.push(TraceStep {
                kind: StepKind::Improve,
                swap: mv.swap,
                f_after: state.f(),
            });
            continue;
        }
        if budget == 0 {
            break;
        }
        level.clear();
        scan(g, &state, |_, _, swap, delta| {
            if delta == 0 {
                level.push(swap);
            }
        });
        if level.is_empty() {
            break;
        }
        let swap = level[rng.random_range(0..level.len())];
        state.apply(g, &swap);
        budget -= 1;
        trace.steps.push(TraceStep {
            kind: StepKind::Plateau,
            swap,
            f_after: state.f(),
        });
    }
    trace.final_f = state.f();
    Ok((state.into_matching(), trace))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RestartStats {
    pub start_f: u64,
    pub final_f: u64,
    pub improving_steps: usize,
    pub plateau_steps: usize,
}

#[derive(Clone, Debug)]
pub struct SearchSummary {
    pub best: PerfectMatching,
    pub best_f: u64,
    /// Restart that produced `best` (lowest index among ties).
    pub best_restart: usize,
    pub restarts: Vec<RestartStats>,
}

/// Local search from `restarts` independent uniform matchings.
///
/// Restart `r` draws from stream `r` of `seed`, so adding restarts only adds
/// candidates and the result does not depend on thread scheduling.
pub fn search_from_rpm(
    g: &ColoredCompleteGraph,
    n: usize,
    restarts: usize,
    plateau_budget: usize,
    seed: u64,
) -> Result<SearchSummary> {
    g.check_size(n)?;
    let runs = (0..restarts.max(1))
        .into_par_iter()
        .map(|r| {
            let mut rng = derived_rng(seed, r as u64);
            let m0 = rpm_sample(g.order(), &mut rng)?;
            let (m, trace) = local_search(g, m0, n, plateau_budget, &mut rng)?;
            Ok((
                m,
                RestartStats {
                    start_f: trace.initial_f,
                    final_f: trace.final_f,
                    improving_steps: trace.improving_steps(),
                    plateau_steps: trace.plateau_steps(),
                },
            ))
        })
        .collect::<Result<Vec<_>>>()?;

    let best_restart = (0..runs.len())
        .min_by_key(|&r| (runs[r].1.final_f, r))
        .expect("at least one restart");
    let best_f = runs[best_restart].1.final_f;
    let best = runs[best_restart].0.clone();
    Ok(SearchSummary {
        best,
        best_f,
        best_restart,
        restarts: runs.into_iter().map(|(_, s)| s).collect(),
    })
}
