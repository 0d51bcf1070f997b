use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{name} = {value} is outside the domain of {function}")]
    Domain {
        function: &'static str,
        name: &'static str,
        value: f64,
    },

    #[error("line {line}, field {field}: cannot parse {token:?} as a number")]
    Parse {
        line: usize,
        field: usize,
        token: String,
    },

    #[error("line {line} has {found} fields, expected {expected}")]
    Ragged {
        line: usize,
        expected: usize,
        found: usize,
    },

    #[error("item row {0} has no present cells")]
    EmptyRow(usize),

    #[error("participant column {0} has no present cells")]
    EmptyColumn(usize),

    #[error("table is {rows}x{cols}; at least 2 items and 2 participants are required")]
    TooSmall { rows: usize, cols: usize },

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error("residual degrees of freedom {0} must be positive")]
    NoResidualDf(i64),

    #[error("{0} participants are too few to split into two groups of at least 2")]
    TooFewParticipants(usize),

    #[error(
        "no split of {group_size} participants per group covers item {item} in both groups \
         after {attempts} attempts"
    )]
    RetryExhausted {
        group_size: usize,
        item: usize,
        attempts: usize,
    },

    #[error("item alignment: {0}")]
    Alignment(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(function: &'static str, name: &'static str, value: f64) -> Self {
        Error::Domain {
            function,
            name,
            value,
        }
    }
}
