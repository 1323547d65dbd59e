use serde_json::json;
use std::process::ExitCode;

pub const EXIT_VALIDATION: u8 = 1;
pub const EXIT_ABORTED: u8 = 2;

/// A failed command: one JSON object on stderr and a stable exit code.
#[derive(Debug)]
pub struct Failure {
    pub kind: &'static str,
    pub message: String,
    pub code: u8,
    pub detail: serde_json::Value,
}

impl Failure {
    pub fn new(kind: &'static str, message: impl Into<String>) -> Self {
        Failure { kind, message: message.into(), code: EXIT_VALIDATION, detail: serde_json::Value::Null }
    }

    pub fn usage(message: impl Into<String>) -> Self {
        Failure::new("usage", message)
    }

    pub fn validation(message: impl Into<String>) -> Self {
        Failure::new("validation", message)
    }

    pub fn io(message: impl Into<String>) -> Self {
        Failure::new("io", message)
    }

    pub fn with_detail(mut self, detail: serde_json::Value) -> Self {
        self.detail = detail;
        self
    }

    pub fn report(&self) -> ExitCode {
        let mut obj = json!({ "error": self.kind, "message": self.message });
        if !self.detail.is_null() {
            obj["detail"] = self.detail.clone();
        }
        eprintln!("{obj}");
        ExitCode::from(self.code)
    }
}
