use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("syntax error at {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown identifier `{name}` at {pos}")]
    UnknownIdentifier { name: String, pos: usize },
    #[error("a second radical was introduced: {0}")]
    SecondRadical(String),
    #[error("invalid parameter name `{0}`")]
    InvalidParameter(String),
    #[error("too many parameters (limit {0})")]
    TooManyParameters(usize),
    #[error("division by zero")]
    DivisionByZero,
    #[error("jet order {0} exceeds the supported maximum")]
    OrderOverflow(usize),
    #[error("exponent overflow")]
    ExponentOverflow,
    #[error("denominator vanishes at the evaluation point")]
    EvalDenominatorZero,
    #[error("generator `{0}` has no value at the evaluation point")]
    EvalMissing(String),
    #[error("radical value inconsistent with its defining relation")]
    InconsistentRadical,
    #[error("expressions live in different radical contexts")]
    RadicalMismatch,
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("fifth-root extraction failed: {0}")]
    RootExtraction(String),
    #[error("expression is not a total derivative")]
    NotExact,
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("unknown catalog entry `{0}`")]
    UnknownEntry(String),
    #[error("unbound parameter slot `{0}`")]
    UnboundSlot(String),
    #[error("{0}")]
    Other(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
