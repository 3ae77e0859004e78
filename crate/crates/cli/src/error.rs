use serde::Serialize;
use thiserror::Error;

use fleet_anomaly::anomaly::AnomalyError;
use fleet_anomaly::ingest::{IngestError, PanelError};
use fleet_anomaly::synth::SynthError;

/// Machine-readable failure category, printed as the `code` of the error JSON.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ErrorCode {
    InputNotFound,
    InputInvalid,
    CorruptInput,
    ConfigInvalid,
    EmptyPanel,
    WindowTooShort,
    Io,
}

impl ErrorCode {
    pub fn as_str(self) -> &'static str {
        match self {
            ErrorCode::InputNotFound => "input-not-found",
            ErrorCode::InputInvalid => "input-invalid",
            ErrorCode::CorruptInput => "corrupt-input",
            ErrorCode::ConfigInvalid => "config-invalid",
            ErrorCode::EmptyPanel => "empty-panel",
            ErrorCode::WindowTooShort => "window-too-short",
            ErrorCode::Io => "io-error",
        }
    }

    pub fn exit_code(self) -> i32 {
        match self {
            ErrorCode::InputNotFound => 3,
            ErrorCode::ConfigInvalid => 4,
            ErrorCode::WindowTooShort => 5,
            _ => 1,
        }
    }
}

#[derive(Debug, Error)]
#[error("{code:?}: {message}")]
pub struct CliError {
    pub code: ErrorCode,
    pub message: String,
}

impl CliError {
    pub fn new(code: ErrorCode, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }

    pub fn config(message: impl Into<String>) -> Self {
        Self::new(ErrorCode::ConfigInvalid, message)
    }

    pub fn io(path: &std::path::Path, e: std::io::Error) -> Self {
        let code = if e.kind() == std::io::ErrorKind::NotFound {
            ErrorCode::InputNotFound
        } else {
            ErrorCode::Io
        };
        Self::new(code, format!("{}: {e}", path.display()))
    }

    /// `{"error":{"code":"...","message":"..."}}`
    pub fn to_json(&self) -> String {
        serde_json::json!({
            "error": { "code": self.code.as_str(), "message": self.message }
        })
        .to_string()
    }
}

impl From<IngestError> for CliError {
    fn from(e: IngestError) -> Self {
        let code = match &e {
            IngestError::Io { source, .. } if source.kind() == std::io::ErrorKind::NotFound => {
                ErrorCode::InputNotFound
            }
            IngestError::Io { .. } => ErrorCode::Io,
            IngestError::CorruptInput { .. } => ErrorCode::CorruptInput,
            IngestError::Config(_) | IngestError::Shore(_) => ErrorCode::ConfigInvalid,
            IngestError::EmptyPanel => ErrorCode::EmptyPanel,
            _ => ErrorCode::InputInvalid,
        };
        Self::new(code, e.to_string())
    }
}

impl From<PanelError> for CliError {
    fn from(e: PanelError) -> Self {
        Self::new(ErrorCode::InputInvalid, e.to_string())
    }
}

impl From<AnomalyError> for CliError {
    fn from(e: AnomalyError) -> Self {
        let code = match e {
            AnomalyError::WindowTooShort { .. } => ErrorCode::WindowTooShort,
            AnomalyError::Config(_) | AnomalyError::InvalidLag(_) => ErrorCode::ConfigInvalid,
            _ => ErrorCode::InputInvalid,
        };
        Self::new(code, e.to_string())
    }
}

impl From<SynthError> for CliError {
    fn from(e: SynthError) -> Self {
        Self::config(e.to_string())
    }
}
