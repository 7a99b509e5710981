//! Geometric route to a nearly balanced matching.
//!
//! When the origin lies in the convex hull of the matching vectors, an
//! exact certificate ([`certify_origin`]) is reduced to at most `k + 1`
//! matchings ([`caratheodory_reduce`]) and merged pairwise: each merge
//! splits the symmetric difference into light bundles
//! ([`split_and_group`]) and keeps each bundle independently at random
//! ([`round_bundles`]).

mod cycles;
mod hull;
mod lp;
mod pipeline;
mod round;

pub use cycles::{
    alternating_cycles, check_split, split_and_group, toggle_bundles, AlternatingCycle, CycleBundle, SplitResult,
};
pub use hull::{caratheodory_reduce, certify_origin, ConvexCombination};
pub use lp::feasible_point;
pub use pipeline::{
    merge_combination, merged_bound, theorem3_pipeline, PipelineOutcome, RoundingTrace, StageRecord,
    GUARANTEED_MIN_COLORS,
};
pub use round::{round_bundles, rounding_bound, RoundingOutcome, DEFAULT_RETRY_CAP};

pub type Rational = num_rational::BigRational;
