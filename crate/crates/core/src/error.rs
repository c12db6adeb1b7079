use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at row {row}, column {column}: {message}")]
    Parse {
        row: usize,
        column: usize,
        message: String,
    },

    #[error("duplicate date {0}")]
    DuplicateDate(String),

    #[error("duplicate firm column {0:?}")]
    DuplicateFirm(String),

    #[error("empty input: {0}")]
    Empty(String),

    #[error("invalid panel: {0}")]
    InvalidPanel(String),

    #[error("estimation error: {0}")]
    Estimation(String),

    #[error("pair ({target}, {source_firm}) is inestimable: {reason}")]
    InestimablePair {
        target: String,
        source_firm: String,
        reason: String,
    },

    #[error("degenerate denominator for firm {0}: mean return does not exceed tail mean")]
    DegenerateDenominator(String),

    #[error("graph is disconnected ({components} components)")]
    Disconnected { components: usize },

    #[error("order {0} too small: {1}")]
    OrderTooSmall(usize, &'static str),

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("unknown firm {0:?}")]
    UnknownFirm(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    /// Stable machine-readable tag, used in the CLI's JSON error output.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Parse { .. } => "parse",
            Error::DuplicateDate(_) => "duplicate_date",
            Error::DuplicateFirm(_) => "duplicate_firm",
            Error::Empty(_) => "empty",
            Error::InvalidPanel(_) => "invalid_panel",
            Error::Estimation(_) => "estimation",
            Error::InestimablePair { .. } => "inestimable_pair",
            Error::DegenerateDenominator(_) => "degenerate_denominator",
            Error::Disconnected { .. } => "disconnected",
            Error::OrderTooSmall(..) => "order_too_small",
            Error::Numerical(_) => "numerical",
            Error::Config(_) => "config",
            Error::UnknownFirm(_) => "unknown_firm",
            Error::Io { .. } => "io",
            Error::Csv(_) => "csv",
            Error::Json(_) => "json",
        }
    }
}
