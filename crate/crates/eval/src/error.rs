use thiserror::Error;

/// A query line that could not be used; `line` is 1-based.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LineError {
    pub line: usize,
    pub message: String,
}

impl std::fmt::Display for LineError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("no usable query line ({} error(s), first: {})", .0.len(), .0.first().map(ToString::to_string).unwrap_or_default())]
    MalformedJsonLine(Vec<LineError>),
    #[error("answer for unknown query id {0:?}")]
    UnmatchedQueryId(String),
    #[error("more than one answer for query id {0:?}")]
    DuplicateAnswer(String),
    #[error("query {0:?} has no ground-truth box")]
    MissingGroundTruth(String),
    #[error("threshold {0} is outside (0, 1]")]
    InvalidThreshold(f64),
    #[error("unknown scene {0:?}")]
    UnknownScene(String),
    #[error("scene {scene:?} has no object {id}")]
    UnknownObject { scene: String, id: u64 },
    #[error("infeasible synthetic spec: {0}")]
    SpecInfeasible(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl EvalError {
    pub fn code(&self) -> &'static str {
        match self {
            Self::MalformedJsonLine(_) => "E_MALFORMED_JSON_LINE",
            Self::UnmatchedQueryId(_) => "E_UNMATCHED_QUERY_ID",
            Self::DuplicateAnswer(_) => "E_DUPLICATE_ANSWER",
            Self::MissingGroundTruth(_) => "E_MISSING_GT",
            Self::InvalidThreshold(_) => "E_INVALID_THRESHOLD",
            Self::UnknownScene(_) => "E_UNKNOWN_SCENE",
            Self::UnknownObject { .. } => "E_UNKNOWN_OBJECT",
            Self::SpecInfeasible(_) => "E_SPEC_INFEASIBLE",
            Self::Io(_) => "E_IO",
        }
    }
}

impl From<std::io::Error> for EvalError {
    fn from(e: std::io::Error) -> Self {
        Self::Io(e.to_string())
    }
}
