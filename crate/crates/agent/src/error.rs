use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AgentError {
    #[error("invalid tool config: {0}")]
    InvalidConfig(String),
    #[error("backend unreachable: {0}")]
    BackendUnreachable(String),
    #[error("backend protocol error: {0}")]
    Protocol(String),
    #[error("query text is empty")]
    EmptyQuery,
}

impl AgentError {
    pub fn code(&self) -> &'static str {
        match self {
            Self::InvalidConfig(_) => "E_TOOL_CONFIG",
            Self::BackendUnreachable(_) => "E_BACKEND_UNREACHABLE",
            Self::Protocol(_) => "E_BACKEND_PROTOCOL",
            Self::EmptyQuery => "E_EMPTY_QUERY",
        }
    }
}

/// Errors returned to the model as tool results.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ToolError {
    #[error("unknown tool {0:?}")]
    UnknownTool(String),
    #[error("tool {0:?} is disabled in this configuration")]
    ToolDisabled(String),
    #[error("bad arguments: {0}")]
    ToolArgError(String),
}

impl ToolError {
    pub fn code(&self) -> &'static str {
        match self {
            Self::UnknownTool(_) => "E_UNKNOWN_TOOL",
            Self::ToolDisabled(_) => "E_TOOL_DISABLED",
            Self::ToolArgError(_) => "E_TOOL_ARGS",
        }
    }
}
