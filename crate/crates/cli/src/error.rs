use serde_json::json;

/// Failure of a run, mapped onto the process exit code.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CliError {
    /// Invalid or conflicting inputs. Exit code 1.
    Config(String),
    /// A computation failed or an internal check did not pass. Exit code 2.
    Numeric(String),
    /// Reading or writing a file failed. Exit code 3.
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Config(_) => 1,
            Self::Numeric(_) => 2,
            Self::Io(_) => 3,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Self::Config(_) => "config",
            Self::Numeric(_) => "numeric",
            Self::Io(_) => "io",
        }
    }

    pub fn message(&self) -> &str {
        match self {
            Self::Config(m) | Self::Numeric(m) | Self::Io(m) => m,
        }
    }

    /// One-line JSON object `{"error": kind, "exit_code": n, "message": text}`.
    pub fn to_line(&self) -> String {
        json!({ "error": self.kind(), "exit_code": self.exit_code(), "message": self.message() }).to_string()
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} error: {}", self.kind(), self.message())
    }
}

impl std::error::Error for CliError {}
