use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = DeconvError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum DeconvError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("malformed {what}: {detail}")]
    Malformed { what: &'static str, detail: String },

    #[error("invalid dimensions {width}x{height}")]
    InvalidDimensions { width: usize, height: usize },

    #[error("buffer length {len} does not match {width}x{height}")]
    LengthMismatch {
        width: usize,
        height: usize,
        len: usize,
    },

    #[error("non-finite sample at index {0}")]
    NonFinite(usize),

    #[error("invalid kernel: {0}")]
    InvalidKernel(String),

    #[error("kernel {kernel_width}x{kernel_height} does not fit in {width}x{height}")]
    KernelTooLarge {
        kernel_width: usize,
        kernel_height: usize,
        width: usize,
        height: usize,
    },

    #[error("size mismatch: {left_width}x{left_height} vs {right_width}x{right_height}")]
    SizeMismatch {
        left_width: usize,
        left_height: usize,
        right_width: usize,
        right_height: usize,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("ill-posed inverse: transfer function vanishes (|H| = {magnitude:e}) at ({u}, {v})")]
    IllPosed { u: usize, v: usize, magnitude: f64 },

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("undefined correlation: {0}")]
    UndefinedCorrelation(String),

    #[error("numerical residue: max |imag| = {0:e} after inverse transform")]
    ImaginaryResidue(f64),

    #[error("config error: {0}")]
    Config(String),

    #[error("unknown preset {0:?} (expected fig2, fig3 or fig4)")]
    UnknownPreset(String),
}

impl DeconvError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        DeconvError::Io {
            path: path.into(),
            source,
        }
    }

    /// Errors caused by what the user asked for rather than by the data or
    /// the environment. The CLI maps these to exit code 2.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            DeconvError::Config(_)
                | DeconvError::UnknownPreset(_)
                | DeconvError::InvalidParameter(_)
        )
    }
}
