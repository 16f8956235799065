use std::path::PathBuf;

/// Errors produced anywhere in the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("format error in field `{field}`: {message}")]
    Format { field: String, message: String },

    #[error("size mismatch: expected {expected} values, found {found}")]
    SizeMismatch { expected: usize, found: usize },

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("shape error: {0}")]
    Shape(String),

    #[error("lookup error: {0}")]
    Lookup(String),

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("graph has {n_vertices} vertices, above the dense limit of {limit}; use the Chebyshev path")]
    TooLarge { n_vertices: usize, limit: usize },

    #[error("design matrix error: {0}")]
    Design(String),

    #[error("degenerate ROC: {0}")]
    DegenerateRoc(String),

    #[error("schema error: {0}")]
    Schema(String),

    #[error("voxel {0} has an all-zero transition profile over its neighbourhood")]
    DegenerateVoxel(usize),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(field: &str, message: impl Into<String>) -> Self {
        Error::Format {
            field: field.to_string(),
            message: message.into(),
        }
    }

    /// True for errors caused by bad input (files, arguments) rather than
    /// a failed computation.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::Io { .. }
                | Error::Format { .. }
                | Error::SizeMismatch { .. }
                | Error::Schema(_)
                | Error::Shape(_)
                | Error::Invariant(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
