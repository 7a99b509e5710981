use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("vertex {vertex} out of range for order {order}")]
    VertexOutOfRange { vertex: usize, order: usize },

    #[error("self-loop at vertex {0}")]
    SelfLoop(usize),

    #[error("order {0} is not a positive even integer")]
    InvalidOrder(usize),

    #[error("number of colors must be positive")]
    NoColors,

    #[error("color {color} out of range 0..{num_colors}")]
    ColorOutOfRange { color: usize, num_colors: usize },

    #[error("expected {expected} edge colors, got {found}")]
    EdgeCountMismatch { expected: usize, found: usize },

    #[error("graph with k={k}, n={n} exceeds the supported edge count")]
    TooLarge { k: usize, n: usize },

    #[error("order {order} does not equal 2kn for k={k}, n={n}")]
    SizeMismatch { order: usize, k: usize, n: usize },

    #[error("invalid perfect matching: {0}")]
    InvalidMatching(String),

    #[error("edge {{{0}, {1}}} is not in the matching")]
    EdgeNotInMatching(usize, usize),

    #[error("swap needs two distinct matching edges")]
    DegenerateSwap,

    #[error("matchings are on different vertex sets ({0} vs {1})")]
    VertexSetMismatch(usize, usize),

    #[error("order {order} outside the enumeration range {min}..={max}")]
    OrderTooLarge { order: usize, min: usize, max: usize },

    #[error("instance file line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("instance file truncated: expected {expected} edge colors, found {found} ({missing} missing)")]
    Truncated {
        expected: usize,
        found: usize,
        missing: usize,
    },

    #[error("instance file line {line}: color {color} out of range 1..={num_colors}")]
    FileColorOutOfRange {
        line: usize,
        color: usize,
        num_colors: usize,
    },

    #[error("origin not certified in the convex hull after {samples} matchings")]
    HullNotCertified { samples: usize },

    #[error("no unbalanced hull instance found in {attempts} attempts")]
    HullSearchExhausted { attempts: usize },

    #[error("invalid convex combination: {0}")]
    InvalidCombination(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("internal consistency failure: {0}")]
    Consistency(String),

    #[error("unknown {kind} `{name}`")]
    Unknown { kind: &'static str, name: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
