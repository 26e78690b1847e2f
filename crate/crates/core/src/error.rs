use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors surfaced by the tiling engine.
#[derive(Debug, Error)]
pub enum Error {
    /// A checked integer operation overflowed. Coordinates of reachable
    /// tilings stay far below `i64` range, so this signals misuse or a bug.
    #[error("integer overflow in exact arithmetic ({0})")]
    Overflow(&'static str),

    #[error("cluster carries no key anchors")]
    NoKeys,

    #[error("clusters of mixed chirality cannot be concatenated")]
    MixedChirality,

    #[error("substitution schedules start at iteration 1 (got {0})")]
    BadIteration(u32),

    #[error("tile-count guard exceeded: iteration needs {requested} tiles, limit is {limit}")]
    GuardExceeded { requested: u128, limit: u64 },

    #[error("render guard exceeded: {tiles} tiles after culling, limit is {limit}")]
    RenderGuardExceeded { tiles: u64, limit: u64 },

    /// Wraps a failure with the iteration that produced it.
    #[error("iteration {n}: {source}")]
    Step {
        n: u32,
        #[source]
        source: Box<Error>,
    },

    #[error("internal invariant violated: {0}")]
    Internal(String),

    #[error("invalid cluster: {0}")]
    InvalidCluster(String),

    #[error("precondition not met: {0}")]
    Precondition(String),

    #[error("malformed transform document: {0}")]
    Malformed(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("transform document: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn at_iteration(self, n: u32) -> Error {
        Error::Step {
            n,
            source: Box::new(self),
        }
    }
}
