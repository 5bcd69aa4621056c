use std::fmt;
use std::path::PathBuf;

use crate::model::Violation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Location of a parse error. Lines and columns are 1-based.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SourceSpan {
    pub file: Option<PathBuf>,
    pub line: usize,
    pub column: usize,
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.file {
            Some(path) => write!(f, "{}:{}:{}", path.display(), self.line, self.column),
            None => write!(f, "{}:{}", self.line, self.column),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("{span}: {message}")]
pub struct ParseError {
    pub span: SourceSpan,
    pub message: String,
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error("invalid program: {}", join_violations(.0))]
    Invalid(Vec<Violation>),

    #[error("rule {rule} is not forward-propagating: {reason}")]
    NotForwardPropagating { rule: usize, reason: String },

    #[error("query is not object-ground: rule {rule} has object variables")]
    NotObjectGround { rule: usize },

    #[error("output predicates differ: `{left}` vs `{right}`")]
    OutputMismatch { left: String, right: String },

    #[error("object domain is empty but the query has object variables")]
    EmptyDomain,

    #[error("undeclared predicate `{0}`")]
    UndeclaredPredicate(String),

    #[error("invalid fact `{fact}`: {reason}")]
    InvalidFact { fact: String, reason: String },

    #[error("state budget of {budget} product states exhausted (explored {explored}, depth {depth})")]
    BudgetExceeded {
        budget: usize,
        explored: usize,
        depth: usize,
    },

    #[error("oracle size guard exceeded: {0}")]
    GuardExceeded(String),

    #[error("regex error: {0}")]
    Regex(String),

    #[error("{0}")]
    Unsupported(String),
}

fn join_violations(violations: &[Violation]) -> String {
    violations
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}
