use thiserror::Error;

/// Errors raised by the simulation engines and the sweep harness.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("grating grid of {grid_size} points resolves only {points} samples within one mask width (need at least 8)")]
    Resolution { grid_size: usize, points: usize },

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("position grid of {grid_size} points is too small for ladder n_max = {n_max} (need at least {required})")]
    GridTooSmall {
        grid_size: usize,
        n_max: usize,
        required: usize,
    },

    #[error(
        "momentum ladder truncated: tail mass {tail_mass:e} at n_max = {n_max} after kick {kick}"
    )]
    Aliasing {
        n_max: usize,
        tail_mass: f64,
        kick: usize,
    },

    #[error("comparison error: {0}")]
    Comparison(String),

    #[error("config parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
