use thiserror::Error;

/// Invalid argument to a numeric primitive or operator.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum DomainError {
    #[error("non-finite input {0}")]
    NonFinite(f64),
    #[error("value {value} outside [0, 1] ({what})")]
    OutOfUnitInterval { what: &'static str, value: f64 },
    #[error("operator needs at least one input")]
    Empty,
    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// Structural problem in a network, operator template or dataset configuration.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("network has no layers")]
    NoLayers,
    #[error("layer {layer}: {reason}")]
    Layer { layer: usize, reason: String },
    #[error("{0}")]
    Invalid(String),
    #[error("operator {kind} does not support arity {arity}")]
    UnsupportedArity { kind: String, arity: usize },
}

/// Mismatch between values that should come from the same network.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ShapeError {
    #[error("expected {expected} {what}, got {actual}")]
    Mismatch {
        what: &'static str,
        expected: usize,
        actual: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NetworkError {
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Shape(#[from] ShapeError),
    #[error("gradient supplied for frozen layer {0}")]
    FrozenGradient(usize),
}

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("loss became non-finite at step {step}")]
    Diverged { step: u64 },
    #[error("cannot {action} while session is {status}")]
    InvalidTransition { action: &'static str, status: &'static str },
    #[error("no data points to evaluate")]
    EmptyData,
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Config(#[from] ConfigError),
}

#[derive(Debug, Error)]
pub enum ModelFileError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unsupported model file version {0}")]
    UnsupportedVersion(u32),
    #[error("invalid field `{path}`: {message}")]
    Field { path: String, message: String },
    #[error("invalid network: {0}")]
    Network(#[from] ConfigError),
}

#[derive(Debug, Error)]
pub enum DataError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("row {row}: {message}")]
    Row { row: usize, message: String },
}

/// Failure to parse or compile a logical expression.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum CompileError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unknown variable `{name}` at line {line}, column {column}")]
    UnknownVariable { name: String, line: usize, column: usize },
    #[error("{op} takes {expected} operands, got {found}")]
    Arity {
        op: &'static str,
        expected: &'static str,
        found: usize,
    },
    #[error("unsupported construct: {0}")]
    Unsupported(String),
}
