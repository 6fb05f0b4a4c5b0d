use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum InstanceError {
    #[error("field `{field}` has length {found}, expected {expected}")]
    Length { field: &'static str, expected: usize, found: usize },
    #[error("matrix entry ({row}, {col}) is outside the instance dimensions")]
    IndexOutOfRange { row: usize, col: usize },
    #[error("duplicate matrix entry ({row}, {col})")]
    DuplicateEntry { row: usize, col: usize },
    #[error("non-finite value in {what}")]
    NonFinite { what: &'static str },
    #[error("variable {var} has bounds [{lower}, {upper}]")]
    BadBounds { var: usize, lower: f64, upper: f64 },
    #[error("discrete variable {var} needs finite bounds")]
    UnboundedDiscrete { var: usize },
    #[error("assignment has length {found}, expected {expected}")]
    Dimension { expected: usize, found: usize },
    #[error("variable {var} is not discrete")]
    NotDiscrete { var: usize },
    #[error("value {value} for variable {var} lies outside its bounds")]
    ValueOutOfBounds { var: usize, value: f64 },
    #[error("coverage {stated} does not match the fixed count ({actual})")]
    CoverageMismatch { stated: f64, actual: f64 },
}

#[derive(Debug, Error)]
pub enum SolveError {
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error("time budget must be positive, got {0}")]
    BadBudget(f64),
    #[error("the LP relaxation is unbounded")]
    Unbounded,
}

#[derive(Debug, Error, PartialEq)]
pub enum GenerateError {
    #[error("invalid generator parameter: {0}")]
    Parameter(String),
}

#[derive(Debug, Error, PartialEq)]
pub enum MpsError {
    #[error("line {line}: unknown or unsupported section `{section}`")]
    UnknownSection { line: usize, section: String },
    #[error("line {line}: duplicate row `{name}`")]
    DuplicateRow { line: usize, name: String },
    #[error("line {line}: column entry references unknown row `{name}`")]
    UnknownRowInColumns { line: usize, name: String },
    #[error("line {line}: input ended without ENDATA")]
    MissingEndata { line: usize },
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: invalid instance: {source}")]
    Instance { line: usize, source: InstanceError },
}

#[derive(Debug, Error, PartialEq)]
#[error("schema violation at {path}: {message}")]
pub struct SchemaError {
    pub path: String,
    pub message: String,
}

impl SchemaError {
    pub fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self { path: path.into(), message: message.into() }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("target for variable {var} is {value}, expected 0 or 1")]
    NonBinaryTarget { var: usize, value: f64 },
    #[error(transparent)]
    Schema(#[from] SchemaError),
}

#[derive(Debug, Error)]
pub enum DivingError {
    #[error("cutoff {0} outside [0.5, 1]")]
    Cutoff(f64),
    #[error("coverage {0} outside [0, 1]")]
    Coverage(f64),
    #[error("no training examples")]
    EmptyExamples,
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Instance(#[from] InstanceError),
}

#[derive(Debug, Error)]
pub enum TalError {
    #[error("no instances to train on")]
    EmptyInstances,
    #[error("invalid search interval [{lo}, {hi}] or probe count {probes}")]
    SearchInterval { lo: f64, hi: f64, probes: usize },
    #[error("exact property checks need r <= {max}, got {r}")]
    TooManyDiscrete { r: usize, max: usize },
    #[error(transparent)]
    Diving(#[from] DivingError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("primal integral undefined: no incumbent by t={0} and no cap configured")]
    UndefinedIntegral(f64),
    #[error("no reference solution found for `{0}`")]
    NoReference(String),
    #[error("empty input: {0}")]
    Empty(String),
    #[error(transparent)]
    Diving(#[from] DivingError),
    #[error(transparent)]
    Tal(#[from] TalError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Instance(#[from] InstanceError),
}
