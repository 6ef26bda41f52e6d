//! Paradigm-misuse exceptions raised by the framework model.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ExceptionKind {
    #[serde(rename = "illegalStateException")]
    IllegalState,
    #[serde(rename = "illegalMonitorStateException")]
    IllegalMonitorState,
    #[serde(rename = "ceilingViolation")]
    CeilingViolation,
    #[serde(rename = "interrupted")]
    Interrupted,
    #[serde(rename = "illegalArgumentException")]
    IllegalArgument,
}

impl ExceptionKind {
    pub const ALL: [ExceptionKind; 5] = [
        ExceptionKind::IllegalState,
        ExceptionKind::IllegalMonitorState,
        ExceptionKind::CeilingViolation,
        ExceptionKind::Interrupted,
        ExceptionKind::IllegalArgument,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ExceptionKind::IllegalState => "illegalStateException",
            ExceptionKind::IllegalMonitorState => "illegalMonitorStateException",
            ExceptionKind::CeilingViolation => "ceilingViolation",
            ExceptionKind::Interrupted => "interrupted",
            ExceptionKind::IllegalArgument => "illegalArgumentException",
        }
    }
}

impl fmt::Display for ExceptionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExceptionKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ExceptionKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| {
                let names: Vec<_> = ExceptionKind::ALL.iter().map(|k| k.as_str()).collect();
                format!(
                    "unknown exception kind `{s}` (expected one of {})",
                    names.join(", ")
                )
            })
    }
}
