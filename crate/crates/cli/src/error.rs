use serde_json::{json, Value};

use crate::schema::Violation;

#[derive(Debug)]
pub enum CliError {
    Io(String),
    Schema { path: String, violations: Vec<Violation> },
    Core(uot_core::Error),
}

impl From<uot_core::Error> for CliError {
    fn from(e: uot_core::Error) -> Self {
        CliError::Core(e)
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Io(m) => write!(f, "i/o error: {m}"),
            CliError::Schema { path, violations } => {
                write!(f, "{path}: {} schema violation(s)", violations.len())?;
                for v in violations.iter().take(5) {
                    write!(f, "; {} {}", v.pointer, v.message)?;
                }
                Ok(())
            }
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl CliError {
    /// 2 for admissibility and feasibility failures, 1 otherwise.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) if e.is_admissibility() => 2,
            _ => 1,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Io(_) => "io",
            CliError::Schema { .. } => "schema",
            CliError::Core(e) if e.is_admissibility() => "admissibility",
            CliError::Core(_) => "computation",
        }
    }

    pub fn to_json(&self) -> Value {
        let mut v = json!({ "kind": self.kind(), "message": self.to_string(), "exit_code": self.exit_code() });
        if let CliError::Schema { violations, .. } = self {
            v["violations"] = serde_json::to_value(violations).unwrap_or(Value::Null);
        }
        v
    }
}
