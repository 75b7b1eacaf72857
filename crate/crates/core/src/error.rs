use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Failures raised by a model while answering a prediction batch.
#[derive(Debug, Error)]
pub enum ModelError {
    #[error("input has {got} values, model expects {expected}")]
    Shape { expected: usize, got: usize },

    #[error("transport failure: {0}")]
    Transport(String),

    #[error("malformed response: {0}")]
    MalformedResponse(String),

    #[error("prediction count mismatch: sent {sent} rows, received {received} predictions")]
    CountMismatch { sent: usize, received: usize },

    #[error("model reported an error: {0}")]
    Remote(String),

    #[error("empty batch")]
    EmptyBatch,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("insufficient reference data: need at least 2 samples, got {got}")]
    InsufficientReferenceData { got: usize },

    #[error("ragged rows: row {row} has {got} values, expected {expected}")]
    RaggedRows {
        row: usize,
        expected: usize,
        got: usize,
    },

    #[error("feature-count mismatch: expected {expected} scores, got {got}")]
    FeatureCountMismatch { expected: usize, got: usize },

    #[error("non-finite score at feature {index}")]
    NonFiniteScore { index: usize },

    #[error("non-finite value at raw index {index}")]
    NonFiniteValue { index: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid feature map: {0}")]
    InvalidFeatureMap(String),

    #[error("invalid feature statistics: {0}")]
    InvalidStats(String),

    #[error("unknown feature id {0}")]
    UnknownFeature(usize),

    #[error("model returned non-finite output{}", .context.as_deref().map(|c| format!(" for {c}")).unwrap_or_default())]
    NonFiniteOutput { context: Option<String> },

    #[error("model failure while evaluating {context}: {source}")]
    Model {
        context: String,
        #[source]
        source: ModelError,
    },

    #[error("degenerate neighborhood: weighted normal equations are singular")]
    DegenerateNeighborhood,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("inconsistent reports: {0}")]
    InconsistentReports(String),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("{}", schema_message(.path, *.line, .field, .message))]
    Schema {
        path: PathBuf,
        line: Option<usize>,
        field: Option<String>,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn schema_message(
    path: &std::path::Path,
    line: Option<usize>,
    field: &Option<String>,
    message: &str,
) -> String {
    let mut out = path.display().to_string();
    if let Some(line) = line {
        out.push_str(&format!(":{line}"));
    }
    if let Some(field) = field {
        out.push_str(&format!(": field `{field}`"));
    }
    out.push_str(": ");
    out.push_str(message);
    out
}

impl Error {
    pub(crate) fn model(context: impl Into<String>, source: ModelError) -> Self {
        Error::Model {
            context: context.into(),
            source,
        }
    }

    pub(crate) fn schema(
        path: impl Into<PathBuf>,
        line: Option<usize>,
        field: Option<&str>,
        message: impl Into<String>,
    ) -> Self {
        Error::Schema {
            path: path.into(),
            line,
            field: field.map(str::to_owned),
            message: message.into(),
        }
    }

    /// A JSON syntax or shape error, with the missing field when serde names one.
    pub(crate) fn json(path: &std::path::Path, e: serde_json::Error) -> Self {
        let message = e.to_string();
        let field = message
            .split("missing field `")
            .nth(1)
            .and_then(|rest| rest.split('`').next())
            .map(str::to_owned);
        Error::Schema {
            path: path.to_owned(),
            line: Some(e.line()),
            field,
            message,
        }
    }

    /// Short machine-readable tag for the error variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InsufficientReferenceData { .. } => "insufficient_reference_data",
            Error::RaggedRows { .. } => "ragged_rows",
            Error::FeatureCountMismatch { .. } => "feature_count_mismatch",
            Error::NonFiniteScore { .. } => "non_finite_score",
            Error::NonFiniteValue { .. } => "non_finite_value",
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::InvalidFeatureMap(_) => "invalid_feature_map",
            Error::InvalidStats(_) => "invalid_stats",
            Error::UnknownFeature(_) => "unknown_feature",
            Error::NonFiniteOutput { .. } => "non_finite_output",
            Error::Model { .. } => "model",
            Error::DegenerateNeighborhood => "degenerate_neighborhood",
            Error::InvalidArgument(_) => "invalid_argument",
            Error::InconsistentReports(_) => "inconsistent_reports",
            Error::EmptyInput(_) => "empty_input",
            Error::Schema { .. } => "schema",
            Error::Io { .. } => "io",
        }
    }
}
