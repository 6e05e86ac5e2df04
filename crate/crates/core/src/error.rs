use alloc::string::String;

use crate::formula::Var;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Error {
    /// A computation would exceed one of its configured budgets.
    #[error("budget exceeded for {what}: needs {needed}, limit {limit}")]
    Budget {
        what: &'static str,
        needed: u128,
        limit: u128,
    },
    #[error("variable `{0}` is bound in the formula and cannot be substituted")]
    BoundVariable(Var),
    #[error("variable `{0}` has no value")]
    UnboundVariable(Var),
    #[error("expected a closed term, found one mentioning `{0}`")]
    OpenTerm(Var),
    #[error("name universe is not closed under subnames")]
    NotSubnameClosed,
    #[error("formula pool is not closed under subformulas")]
    PoolNotClosed,
    #[error("name constant lies outside the quantifier universe")]
    NameOutsideUniverse,
    #[error("step at stage {stage} read slice {read}")]
    FutureRead { stage: usize, read: usize },
    #[error("{0} is not supported here")]
    Unsupported(&'static str),
    #[error("unknown class `{0}`")]
    UnknownClass(String),
    #[error("encoding error: {0}")]
    Encoding(String),
    #[error("formula outside the declared pool")]
    PoolEscape,
    #[error("notion is not separative: {p} is not below {q}, yet every extension of {p} meets {q}")]
    NotSeparative { p: usize, q: usize },
    #[error("notion carries no collapse structure")]
    NotCollapse,
    #[error("invalid notion: {0}")]
    InvalidNotion(String),
    #[error("extension is inconsistent: {0}")]
    Extension(String),
    #[error("invalid input: {0}")]
    Invalid(String),
}

impl Error {
    pub(crate) fn budget(what: &'static str, needed: impl Into<u128>, limit: impl Into<u128>) -> Self {
        Error::Budget {
            what,
            needed: needed.into(),
            limit: limit.into(),
        }
    }
}
