use std::fmt;

use thiserror::Error;

/// Position in source text, 1-based.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseError {
    #[error("{pos}: syntax error: {msg}")]
    Syntax { pos: Pos, msg: String },
    #[error("{pos}: predicate `{pred}` used with arity {found}, declared {declared}")]
    ArityMismatch {
        pos: Pos,
        pred: String,
        declared: usize,
        found: usize,
    },
    #[error("{pos}: undeclared predicate `{pred}`")]
    UnknownPredicate { pos: Pos, pred: String },
    #[error("{pos}: predicate `{pred}` declared twice")]
    Redeclared { pos: Pos, pred: String },
    #[error("{pos}: variable `{var}` in database fact")]
    VariableInFact { pos: Pos, var: String },
    #[error("{pos}: labeled null `{null}` is not allowed in source text")]
    NullInSource { pos: Pos, null: String },
    #[error("{pos}: {msg}")]
    Rule { pos: Pos, msg: String },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpoError {
    #[error("unknown feature `{0}`")]
    UnknownFeature(String),
    #[error("preference cycle through `{0}`")]
    Cycle(String),
    #[error("duplicate feature `{0}` in universe")]
    DuplicateFeature(String),
}

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("report {id}: {msg}")]
    Invalid { id: String, msg: String },
    #[error("report {id}: atom `{atom}` is not entailed by the knowledge base")]
    NotEntailed { id: String, atom: String },
    #[error("report {id}: score for `{feature}` out of range: {value}")]
    ScoreOutOfRange {
        id: String,
        feature: String,
        value: f64,
    },
    #[error("report {id}: expected scores for features {expected:?}, got {found:?}")]
    FeatureMismatch {
        id: String,
        expected: Vec<String>,
        found: Vec<String>,
    },
    #[error("report {id}: {source}")]
    Spo {
        id: String,
        #[source]
        source: SpoError,
    },
    #[error("malformed report file: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Spo(#[from] SpoError),
    #[error(transparent)]
    Report(#[from] ReportError),
    #[error("tgd `{0}` is neither linear nor guarded")]
    Unguarded(String),
    #[error("inconsistent knowledge base: {0}")]
    Inconsistent(String),
    #[error("query is not simple: {0}")]
    NotSimple(String),
    #[error("invalid hierarchy: {0}")]
    Hierarchy(String),
    #[error("invalid argument: {0}")]
    Invalid(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
