use std::path::PathBuf;

use crate::graph::Pair;
use crate::relation::Relation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Two derivations that disagree on the label of one pair.
///
/// `via` is the middle event of the triple whose composition produced
/// `derived`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Inconsistency {
    pub pair: Pair,
    pub via: u32,
    pub existing: Relation,
    pub derived: Relation,
}

impl std::fmt::Display for Inconsistency {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "triple ({}, {}, {}): pair ({}, {}) is {} but composition through {} forces {}",
            self.pair.first(),
            self.via,
            self.pair.second(),
            self.pair.first(),
            self.pair.second(),
            self.existing,
            self.via,
            self.derived
        )
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("degenerate interval [{start}, {end}]: start must be before end")]
    DegenerateInterval { start: i64, end: i64 },

    #[error("self loop on event {0}")]
    SelfLoop(u32),

    #[error("event {event} is out of range for a graph of {n_events} events")]
    EventOutOfRange { event: u32, n_events: usize },

    #[error("pair ({}, {}) labelled both {first} and {second}", .pair.first(), .pair.second())]
    ConflictingDuplicate {
        pair: Pair,
        first: Relation,
        second: Relation,
    },

    #[error("inconsistent graph: {0}")]
    InconsistentGraph(Inconsistency),

    #[error("feature index {index} out of range for dimension {dimension}")]
    Dimension { index: u32, dimension: usize },

    #[error("no label assigned to pair ({}, {})", .0.first(), .0.second())]
    MissingAssignment(Pair),

    #[error("branch-and-bound exceeded the node limit of {limit}")]
    NodeLimitExceeded { limit: u64 },

    #[error("constraint propagation emptied every branch; the instance is infeasible")]
    InfeasibleInstance,

    #[error("configuration error: {0}")]
    Config(String),

    #[error("schema error in {location}: {message}")]
    Schema { location: String, message: String },

    #[error("document {doc_id}: {source}")]
    InDocument {
        doc_id: String,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: line {line}, column {column}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },
}

impl Error {
    pub fn in_document(self, doc_id: &str) -> Error {
        match self {
            e @ Error::InDocument { .. } => e,
            e => Error::InDocument {
                doc_id: doc_id.to_string(),
                source: Box::new(e),
            },
        }
    }

    /// The error with any document wrapper stripped.
    pub fn root(&self) -> &Error {
        match self {
            Error::InDocument { source, .. } => source.root(),
            e => e,
        }
    }
}
