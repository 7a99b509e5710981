//! Nearly color-balanced perfect matchings in edge-colored complete graphs.
//!
//! A `k`-coloring of `K_{2kn}` is balanced when every color class has
//! `n(2kn-1)` edges. For a perfect matching `M`, `f(M)` sums the distances
//! of the per-color edge counts from `n`. This crate provides three ways to
//! find matchings with small `f`:
//!
//! * [`rpm`]: uniform random matchings, which meet `3k sqrt(kn ln 2k)`
//!   with high probability;
//! * [`search`]: swap-based local search;
//! * [`rounding`]: exact hull certificates merged by randomized rounding.
//!
//! [`oracle`] enumerates all matchings of small graphs for ground truth and
//! [`experiments`] drives seeded, reproducible trial grids.

pub mod error;
pub mod experiments;
pub mod graph;
pub mod instances;
pub mod oracle;
pub mod rng;
pub mod rounding;
pub mod rpm;
pub mod search;
pub mod stats;

pub use error::{Error, Result};
pub use graph::{
    color_vector, swap_delta, ColorVector, ColoredCompleteGraph, MatchingState, PerfectMatching, Swap, SwapMode,
};
