use std::path::PathBuf;

use thiserror::Error;

use crate::rule::RuleViolation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parameter out of range: {name} = {value} (require {bound})")]
    ParameterOutOfRange {
        name: &'static str,
        value: f64,
        bound: &'static str,
    },

    #[error("invalid attachment rule: {}", display_violations(.0))]
    InvalidRule(Vec<RuleViolation>),

    #[error("jump budget of {cap} exceeded before horizon {horizon}")]
    JumpBudget { cap: usize, horizon: f64 },

    #[error("semigroup table does not cover {what}")]
    TableCoverage { what: String },

    #[error("state truncation insufficient: need k_max of roughly {required} (cap {cap})")]
    TruncationInsufficient { required: usize, cap: usize },

    #[error("ODE integrator failed step-halving check: discrepancy {discrepancy:e} > {tolerance:e}")]
    IntegratorNotConverged { discrepancy: f64, tolerance: f64 },

    #[error("integral diverges: {0}")]
    Divergent(String),

    #[error("edge budget of {cap} exceeded at step {step}")]
    EdgeBudget { cap: usize, step: usize },

    #[error("empty {0}")]
    Empty(&'static str),

    #[error("schema mismatch in {path}: expected header {expected:?}, found {found:?}")]
    Schema {
        path: PathBuf,
        expected: Vec<String>,
        found: Vec<String>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("malformed record in {path}: {detail}")]
    Malformed { path: PathBuf, detail: String },

    #[error("invariant violated: {0}")]
    Invariant(String),
}

fn display_violations(v: &[RuleViolation]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn csv(path: impl Into<PathBuf>, source: csv::Error) -> Self {
        Error::Csv {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn json(path: impl Into<PathBuf>, source: serde_json::Error) -> Self {
        Error::Json {
            path: path.into(),
            source,
        }
    }
}
