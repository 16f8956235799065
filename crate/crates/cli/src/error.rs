use std::fmt;

use serde_json::json;

/// A failed command, classified by exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad arguments, configuration or input files (exit 2).
    Input { kind: &'static str, message: String },
    /// A computation that could not complete (exit 1).
    Compute { kind: &'static str, message: String },
}

impl CliError {
    pub fn input(message: impl Into<String>) -> Self {
        CliError::Input {
            kind: "usage",
            message: message.into(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input { .. } => 2,
            CliError::Compute { .. } => 1,
        }
    }

    pub fn to_json(&self) -> String {
        let (kind, message) = match self {
            CliError::Input { kind, message } | CliError::Compute { kind, message } => (kind, message),
        };
        json!({
            "error": { "kind": kind, "message": message },
            "exit_code": self.exit_code(),
        })
        .to_string()
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input { message, .. } | CliError::Compute { message, .. } => f.write_str(message),
        }
    }
}

fn kind_of(e: &wmgf_core::Error) -> &'static str {
    use wmgf_core::Error::*;
    match e {
        Io { .. } => "io",
        Format { .. } => "format",
        SizeMismatch { .. } => "size_mismatch",
        Invariant(_) => "invariant",
        Domain(_) => "domain",
        Shape(_) => "shape",
        Lookup(_) => "lookup",
        Numerical(_) => "numerical",
        TooLarge { .. } => "too_large",
        Design(_) => "design",
        DegenerateRoc(_) => "degenerate_roc",
        Schema(_) => "schema",
        DegenerateVoxel(_) => "degenerate_voxel",
    }
}

impl From<wmgf_core::Error> for CliError {
    fn from(e: wmgf_core::Error) -> Self {
        let kind = kind_of(&e);
        let message = e.to_string();
        if e.is_input_error() {
            CliError::Input { kind, message }
        } else {
            CliError::Compute { kind, message }
        }
    }
}

/// Marks a library error as caused by the user's parameters: validation
/// failures of flags and config values are usage errors even when the
/// library files them under a domain error.
pub fn as_input(e: wmgf_core::Error) -> CliError {
    CliError::Input {
        kind: kind_of(&e),
        message: e.to_string(),
    }
}

pub type CliResult<T> = Result<T, CliError>;
