//! Diagnostics with stable codes.

use std::fmt;

use serde::Serialize;

use super::ast::Loc;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub line: u32,
    pub column: u32,
    pub code: &'static str,
    pub message: String,
}

impl Diagnostic {
    pub fn error(code: &'static str, loc: Loc, message: impl Into<String>) -> Self {
        Diagnostic {
            severity: Severity::Error,
            line: loc.line,
            column: loc.col,
            code,
            message: message.into(),
        }
    }

    pub fn warning(code: &'static str, loc: Loc, message: impl Into<String>) -> Self {
        Diagnostic {
            severity: Severity::Warning,
            ..Diagnostic::error(code, loc, message)
        }
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(
            f,
            "{}:{}: {sev}[{}]: {}",
            self.line, self.column, self.code, self.message
        )
    }
}

/// Stable diagnostic codes.
pub mod code {
    pub const SYNTAX: &str = "E001";
    pub const MISSING_SAFELET: &str = "E002";
    pub const DUPLICATE_DECL: &str = "E003";
    pub const UNDECLARED: &str = "E004";
    pub const WRONG_KIND: &str = "E005";
    pub const BAD_PARAM: &str = "E006";
    pub const RANGE: &str = "E007";
    pub const NOT_THIS: &str = "E008";
    pub const RETURN_POSITION: &str = "E009";
    pub const RECURSIVE_CALL: &str = "E010";
    pub const MISSION_LISTING: &str = "E011";
    pub const UNREGISTERED: &str = "E012";
    pub const RESERVED: &str = "E013";
    pub const ARITY: &str = "E014";
    pub const CONTEXT: &str = "E015";
    pub const DUPLICATE_REGISTRATION: &str = "W001";
}
