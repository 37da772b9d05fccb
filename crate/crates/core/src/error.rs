use std::path::PathBuf;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("shape mismatch ({context}): {left} vs {right}")]
    ShapeMismatch {
        context: String,
        left: String,
        right: String,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("no pixels evaluated")]
    NoPixels,

    #[error("malformed {format} data: {detail}")]
    Format {
        format: &'static str,
        detail: String,
    },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("non-finite loss at iteration {iter}; diagnostic state written to {dump}")]
    NonFiniteLoss { iter: usize, dump: PathBuf },

    #[error(
        "gradient check failed: max relative error {max_rel:.3e} exceeds {tolerance:.1e} \
         at parameter {coordinate}"
    )]
    GradientCheck {
        max_rel: f64,
        tolerance: f64,
        coordinate: usize,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn shape(context: impl Into<String>, left: impl Into<String>, right: impl Into<String>) -> Self {
        Error::ShapeMismatch {
            context: context.into(),
            left: left.into(),
            right: right.into(),
        }
    }
}
