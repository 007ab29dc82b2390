use thiserror::Error;

/// Errors raised across the crate.
///
/// The CLI maps these onto exit codes: budget and search-bound exhaustion
/// become 2, bit-prefix exhaustion becomes 3, everything else 4.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("prefix exhausted at j={index}")]
    PrefixExhausted { index: u64 },

    #[error("no qualifying k within budget {budget} (after k={last_k})")]
    BudgetExhausted { budget: u64, last_k: u64 },

    #[error("chain step {step}: {source}")]
    ChainStep {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{what}: search bound {bound} exhausted")]
    SearchBound { what: &'static str, bound: u64 },

    #[error("density bound exhausted: no disjoint isomorphic copy below {bound}")]
    DensityBound { bound: u64 },

    #[error("structure with {size} elements is too large for brute force (limit {limit})")]
    TooLarge { size: usize, limit: usize },

    #[error("inconsistent task: a constraint is both positive and negative")]
    InconsistentTask,

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("bit source unavailable: {0}")]
    BitSourceUnavailable(String),
}

impl Error {
    /// Strips `ChainStep` wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::ChainStep { source, .. } => source.root(),
            e => e,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.root() {
            Error::BudgetExhausted { .. } | Error::SearchBound { .. } | Error::DensityBound { .. } => 2,
            Error::PrefixExhausted { .. } => 3,
            _ => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
