use thiserror::Error;

use crate::links::LinkSlot;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// The scenario document does not match the schema.
    #[error("scenario parse error at `{field}`: {message}")]
    Parse { field: String, message: String },

    /// A structurally valid scenario violates a model invariant.
    #[error("invalid scenario: {0}")]
    Validation(String),

    /// An input lies outside the domain of a formula.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("path loss for link {link}: {source}")]
    Channel {
        link: LinkSlot,
        #[source]
        source: Box<Error>,
    },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    Dimension { expected: usize, actual: usize },

    /// The relaxed problem has no feasible point.
    #[error("infeasible: {0}")]
    Infeasible(String),

    /// Every candidate forced-zero set in one scheduler iteration was infeasible.
    #[error("scheduler iteration {iteration} (family {family}): all {candidates} candidates infeasible")]
    CandidatesExhausted {
        iteration: usize,
        family: u8,
        candidates: usize,
    },

    /// An iteration bound that the convergence analysis guarantees was exceeded.
    #[error("iteration bound exceeded: {0}")]
    IterationBound(String),

    #[error("enumeration would visit {count} schedules, above the limit of {limit}")]
    EnumerationTooLarge { count: u128, limit: u128 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn parse(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            field: field.into(),
            message: message.into(),
        }
    }
}
