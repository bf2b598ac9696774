use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("invalid schema: {0}")]
    InvalidSchema(String),
    #[error("schema line {line}: {message}")]
    SchemaLine { line: usize, message: String },
    #[error("line {line}: expected {expected} cells, found {found}")]
    MalformedRow { line: usize, expected: usize, found: usize },
    #[error("line {line}: unknown category '{value}' for attribute '{attribute}'")]
    UnknownCategory { line: usize, attribute: String, value: String },
    #[error("line {line}: non-numeric value '{value}' for attribute '{attribute}'")]
    NonNumericCell { line: usize, attribute: String, value: String },
    #[error("header does not match schema: {0}")]
    HeaderMismatch(String),
    #[error("row {row}: cell does not match the kind of attribute '{attribute}'")]
    CellKind { row: usize, attribute: String },
    #[error("row {row}: target is missing")]
    MissingTarget { row: usize },
    #[error("row {row}: attribute '{attribute}' is missing")]
    MissingCell { row: usize, attribute: String },
    #[error("attribute '{0}' has no observed values to average")]
    AllMissingColumn(String),
    #[error("attribute '{0}' is not numeric")]
    AttrNotNumeric(String),
    #[error("{cutpoints} cutpoints need {} labels, got {labels}", cutpoints + 1)]
    LabelArity { cutpoints: usize, labels: usize },
    #[error("invalid discretization rule '{0}'")]
    InvalidRule(String),
    #[error("unknown attribute '{0}'")]
    UnknownAttribute(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("complete or quasi-complete separation: information matrix is singular")]
    Separation,
    #[error("logistic fit did not converge after {iterations} iterations")]
    NotConverged { iterations: usize },
    #[error("attribute '{attribute}' yields a zero expected count")]
    ZeroExpectedCell { attribute: String },
    #[error("unknown attribute '{0}'")]
    UnknownAttribute(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Data(#[from] DataError),
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("training data contains a single class")]
    SingleClass,
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("degenerate split: {0}")]
    DegenerateSplit(String),
    #[error("instance does not match the model schema: {0}")]
    SchemaMismatch(String),
    #[error("attribute '{0}' is missing")]
    MissingCell(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Data(#[from] DataError),
}

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("too few instances: {0}")]
    TooFewInstances(String),
    #[error("both classes must be present")]
    SingleClass,
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("score at position {0} is not a number")]
    InvalidScore(usize),
    #[error("fold {fold}")]
    Fold {
        fold: usize,
        #[source]
        source: ModelError,
    },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Data(#[from] DataError),
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("invalid cohort spec: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Data(#[from] DataError),
}

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("expected document format '{expected}', found '{found}'")]
    WrongFormat { expected: String, found: String },
    #[error("unsupported document version {0}")]
    Version(u32),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Data(#[from] DataError),
}
