use std::fmt;

use thiserror::Error;

/// A location in query or DDL text. Lines and columns are 1-based.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub struct Position {
    pub line: u32,
    pub column: u32,
    pub offset: usize,
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

/// Renders ` at line:col` for errors that may or may not carry a position.
pub(crate) struct At(pub Option<Position>);

impl fmt::Display for At {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            Some(pos) => write!(f, " at {pos}"),
            None => Ok(()),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    // schema
    #[error("unknown concept `{0}`")]
    UnknownConcept(String),
    #[error("duplicate concept `{0}`")]
    DuplicateConcept(String),
    #[error("duplicate field `{field}` in concept `{concept}`")]
    DuplicateField { concept: String, field: String },
    #[error("cyclic schema: {}", .0.join(" -> "))]
    CyclicSchema(Vec<String>),
    #[error("concept `{0}` has no identity fields")]
    EmptyIdentity(String),
    #[error("identity field `{concept}.{field}` references a concept; identities must be primitive tuples")]
    NestedIdentity { concept: String, field: String },
    #[error("identity field `{concept}.{field}` cannot be nullable")]
    NullableIdentity { concept: String, field: String },
    #[error("schema can only be loaded into an empty database")]
    SchemaLocked,

    // data
    #[error("unknown collection `{name}`{}", At(*.at))]
    UnknownCollection { name: String, at: Option<Position> },
    #[error("duplicate identity {identity} in `{collection}`")]
    DuplicateIdentity { collection: String, identity: String },
    #[error("`{collection}.{field}` references {identity}, which is not in `{target}`")]
    DanglingReference {
        collection: String,
        field: String,
        target: String,
        identity: String,
    },
    #[error("NULL in non-nullable field `{collection}.{field}`")]
    NullViolation { collection: String, field: String },
    #[error("type mismatch for `{field}`: {detail}")]
    TypeMismatch { field: String, detail: String },
    #[error("CSV header for `{collection}` does not match its concept: {detail}")]
    HeaderMismatch { collection: String, detail: String },
    #[error("`{collection}` line {line}: {source}")]
    RowRejected {
        collection: String,
        line: u64,
        #[source]
        source: Box<Error>,
    },

    // algebra
    #[error("path not composable: {detail}{}", At(*.at))]
    PathNotComposable { detail: String, at: Option<Position> },
    #[error("no dimension path from `{from}` to `{to}`{}; {hint}", At(*.at))]
    NoPath {
        from: String,
        to: String,
        hint: &'static str,
        at: Option<Position>,
    },
    #[error("`{via}` is not a common lesser collection of `{source_collection}` and `{target}`")]
    ViaNotCommonLesser {
        via: String,
        source_collection: String,
        target: String,
    },
    #[error("duplicate alias `{name}`{}", At(*.at))]
    DuplicateAlias { name: String, at: Option<Position> },
    #[error("unknown alias `{name}`{}", At(*.at))]
    UnknownAlias { name: String, at: Option<Position> },
    #[error("path `{0}` does not end in a numeric field")]
    NonNumericPath(String),

    // query language
    #[error("lex error at {pos}: {message}")]
    Lex { pos: Position, message: String },
    #[error("parse error at {pos}: {message}")]
    Parse { pos: Position, message: String },
    #[error("unknown dimension `{name}` in `{concept}`{}", At(*.at))]
    UnknownDimension {
        name: String,
        concept: String,
        at: Option<Position>,
    },
    #[error("ambiguous path from `{from}` to `{to}` at {at}; candidates: {}", .candidates.join(", "))]
    AmbiguousPath {
        from: String,
        to: String,
        candidates: Vec<String>,
        at: Position,
    },
    #[error("invalid query at {at}: {message}")]
    InvalidQuery { at: Position, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for errors raised while turning query text into a plan.
    pub fn is_query_error(&self) -> bool {
        matches!(
            self,
            Error::Lex { .. }
                | Error::Parse { .. }
                | Error::UnknownDimension { .. }
                | Error::AmbiguousPath { .. }
                | Error::InvalidQuery { .. }
                | Error::UnknownCollection { at: Some(_), .. }
                | Error::UnknownAlias { .. }
                | Error::DuplicateAlias { .. }
                | Error::PathNotComposable { .. }
                | Error::NoPath { .. }
                | Error::ViaNotCommonLesser { .. }
                | Error::NonNumericPath(_)
                | Error::TypeMismatch { .. }
        )
    }

    /// The source position, for errors that have one.
    pub fn position(&self) -> Option<Position> {
        match self {
            Error::Lex { pos, .. } | Error::Parse { pos, .. } => Some(*pos),
            Error::AmbiguousPath { at, .. } | Error::InvalidQuery { at, .. } => Some(*at),
            Error::UnknownCollection { at, .. }
            | Error::PathNotComposable { at, .. }
            | Error::NoPath { at, .. }
            | Error::UnknownAlias { at, .. }
            | Error::DuplicateAlias { at, .. }
            | Error::UnknownDimension { at, .. } => *at,
            _ => None,
        }
    }

    pub(crate) fn unknown_collection(name: &str) -> Self {
        Error::UnknownCollection {
            name: name.to_string(),
            at: None,
        }
    }

    pub(crate) fn not_composable(detail: impl Into<String>) -> Self {
        Error::PathNotComposable {
            detail: detail.into(),
            at: None,
        }
    }

    /// Attaches a position to a resolution error that was raised without one.
    pub(crate) fn located(mut self, pos: Position) -> Self {
        match &mut self {
            Error::UnknownCollection { at, .. }
            | Error::PathNotComposable { at, .. }
            | Error::NoPath { at, .. }
            | Error::UnknownAlias { at, .. }
            | Error::DuplicateAlias { at, .. }
            | Error::UnknownDimension { at, .. } => {
                at.get_or_insert(pos);
            }
            _ => {}
        }
        self
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
