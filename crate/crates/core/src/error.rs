//! Error types shared across the toolkit.

use crate::model::TableKind;

/// Errors produced by parsing, fitting, normalization, and evaluation.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("empty score distribution")]
    EmptyDistribution,

    #[error("degenerate score distribution (sigma = {sigma:e} at or below floor)")]
    DegenerateDistribution { sigma: f64 },

    #[error("expected a {expected} table, got {found}")]
    TableKindMismatch {
        expected: TableKind,
        found: TableKind,
    },

    #[error("cohort for key [{key}] has {count} scores, need at least {required}")]
    InsufficientCohort {
        key: String,
        count: usize,
        required: usize,
    },

    #[error("demographic {label:?} has no usable scores")]
    MissingDemographic { label: String },

    #[error("no fitted statistics for key [{key}]")]
    UnknownKey { key: String },

    #[error("need at least two demographics, found {found}")]
    NotEnoughDemographics { found: usize },

    #[error("mixed method tags: expected {expected:?}, found {found:?}")]
    TagMismatch { expected: String, found: String },

    #[error("need at least {required} reports, found {found}")]
    NotEnoughReports { found: usize, required: usize },

    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("line {line}: {message}")]
    Consistency { line: u64, message: String },

    #[error("line {line}: demographic token {token:?} not in the declared label set")]
    ManifestViolation { line: u64, token: String },

    #[error("record {index}: {message}")]
    InvalidRecord { index: usize, message: String },

    #[error("demographic {label:?} has {available} impostor records, requested {requested}")]
    InsufficientRecords {
        label: String,
        available: usize,
        requested: usize,
    },

    #[error("demographic {label:?} admits {available} distinct pairs, requested {requested}")]
    InsufficientPairs {
        label: String,
        available: u128,
        requested: usize,
    },

    #[error("invalid specification: {0}")]
    InvalidSpec(String),

    #[error("fit did not converge for demographic {label:?} within {iterations} iterations")]
    NonConvergence { label: String, iterations: usize },

    #[error("record {index}: {source}")]
    Record {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
