use thiserror::Error;

use crate::contractions::Applicability;
use crate::finitelab::ReproFile;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("format error: {0}")]
    Format(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("unknown space `{0}`")]
    UnknownSpace(String),

    #[error("map entry {index} -> {image} is out of range for {n} points")]
    MapOutOfRange { index: usize, image: usize, n: usize },

    #[error("space has {0} points, at least 3 are required")]
    TooFewPoints(usize),

    /// The requested theorem does not apply; carries the full condition ledger.
    #[error("theorem not applicable: {}", .0.failed_conditions().join(", "))]
    NotApplicable(Box<Applicability>),

    #[error("syntax error at offset {offset}: expected one of {}", expected.join(", "))]
    Syntax { offset: usize, expected: Vec<String> },

    #[error("unknown identifier `{name}` at offset {offset}")]
    UnknownIdentifier { name: String, offset: usize },

    #[error("division by zero")]
    DivisionByZero,

    /// A theorem's hypotheses held on an instance but its conclusion did not.
    #[error("conclusion violated for theorem `{theorem}` on instance {}", .repro.index)]
    ConclusionViolation {
        theorem: String,
        repro: Box<ReproFile>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Short machine-readable tag used in JSON error objects.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidParameter(_) => "invalid_parameter",
            Error::Domain(_) => "domain",
            Error::Format(_) => "format",
            Error::Unsupported(_) => "unsupported",
            Error::UnknownSpace(_) => "unknown_space",
            Error::MapOutOfRange { .. } => "map_out_of_range",
            Error::TooFewPoints(_) => "too_few_points",
            Error::NotApplicable(_) => "not_applicable",
            Error::Syntax { .. } => "syntax",
            Error::UnknownIdentifier { .. } => "unknown_identifier",
            Error::DivisionByZero => "division_by_zero",
            Error::ConclusionViolation { .. } => "conclusion_violation",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}
