use serde::Serialize;

pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_ANALYSIS: i32 = 3;
pub const EXIT_BOUND: i32 = 4;

/// Error reported on standard error as JSON, with the process exit code.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CliError {
    pub kind: String,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub file: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub line: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub column: Option<usize>,
    /// Attached payload, e.g. the failing verify report.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report: Option<serde_json::Value>,
    #[serde(skip)]
    pub exit_code: i32,
}

impl CliError {
    fn new(kind: &str, message: impl Into<String>, exit_code: i32) -> Self {
        Self {
            kind: kind.into(),
            message: message.into(),
            file: None,
            line: None,
            column: None,
            report: None,
            exit_code,
        }
    }

    pub fn validation(message: impl Into<String>) -> Self {
        Self::new("validation", message, EXIT_VALIDATION)
    }

    pub fn analysis(message: impl Into<String>) -> Self {
        Self::new("analysis", message, EXIT_ANALYSIS)
    }

    pub fn io(path: &std::path::Path, err: std::io::Error, exit_code: i32) -> Self {
        let mut e = Self::new("io", err.to_string(), exit_code);
        e.file = Some(path.display().to_string());
        e
    }

    /// JSON syntax or schema error at a known location.
    pub fn parse(path: &std::path::Path, err: &serde_json::Error) -> Self {
        let mut e = Self::new("parse", err.to_string(), EXIT_VALIDATION);
        e.file = Some(path.display().to_string());
        if err.line() > 0 {
            e.line = Some(err.line());
            e.column = Some(err.column());
        }
        e
    }

    pub fn with_report(mut self, report: serde_json::Value) -> Self {
        self.report = Some(report);
        self
    }

    pub fn to_json(&self) -> String {
        serde_json::json!({ "error": self, "exit_code": self.exit_code }).to_string()
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.kind, self.message)
    }
}

impl std::error::Error for CliError {}

impl From<mlab::Error> for CliError {
    fn from(err: mlab::Error) -> Self {
        let code = match err {
            mlab::Error::BoundViolated { .. } => EXIT_BOUND,
            ref e if e.is_validation() => EXIT_VALIDATION,
            _ => EXIT_ANALYSIS,
        };
        Self::new(err.kind(), err.to_string(), code)
    }
}
