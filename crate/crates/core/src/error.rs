//! Error types shared across the engine.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ExprError {
    #[error("syntax error at position {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("undeclared identifier `{0}`")]
    Undeclared(String),
    #[error("identifier `{0}` declared twice")]
    Redeclared(String),
    #[error("cyclic binding through `{0}`")]
    CyclicBinding(String),
    #[error("cannot bind derivative instance of `{0}` directly; bind the base function")]
    BindDerivative(String),
    #[error("exponent must be a positive integer")]
    BadExponent,
}

#[derive(Debug, Error)]
pub enum ExteriorError {
    #[error("degree mismatch: expected {expected}, got {got}")]
    DegreeMismatch { expected: usize, got: usize },
    #[error("reduction inconclusive: {0}")]
    Inconclusive(String),
}

#[derive(Debug, Error)]
pub enum JetError {
    #[error("no substitution rule for derivative symbol `{0}`")]
    MissingRule(String),
    #[error("rule set is not triangular: cycle through `{0}`")]
    NotTriangular(String),
}

#[derive(Debug, Error)]
pub enum ProlongError {
    #[error("matrix {0} is singular")]
    Singular(String),
    #[error("degenerate (A,B) pair: {0}")]
    DegeneratePair(String),
    #[error("substitution shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("residual is not polynomial in the collection variables: contains `{0}`")]
    NotCollectable(String),
}

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("unbound symbol `{0}` at evaluation")]
    UnboundSymbol(String),
    #[error("unbound abstract function `{0}` at evaluation")]
    UnboundFn(String),
}

#[derive(Debug, Error)]
pub enum ProblemError {
    #[error("{file}:{line}: {msg}")]
    Parse {
        file: String,
        line: usize,
        msg: String,
    },
    #[error("unknown command `{0}`")]
    UnknownCommand(String),
    #[error("missing golden file `{0}`")]
    MissingGolden(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Exterior(#[from] ExteriorError),
    #[error(transparent)]
    Jet(#[from] JetError),
    #[error(transparent)]
    Prolong(#[from] ProlongError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}
