use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong in the library.
///
/// Variants split into two families: configuration/input problems
/// ([`Error::is_config`]) and numerical contract violations.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not Hermitian (max deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("matrix is numerically singular (smallest/largest singular value {ratio:.3e})")]
    Singular { ratio: f64 },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error(
        "ambiguous branch assignment between samples {step} and {next}; refine the time grid",
        next = step + 1
    )]
    Ambiguous { step: usize },

    #[error(
        "branch {branch} lost continuity between samples {step} and {next} (|overlap| = {overlap:.3e}); refine the time grid",
        next = step + 1
    )]
    Continuity { step: usize, branch: usize, overlap: f64 },

    #[error("phase undefined: weighted overlap magnitude {magnitude:.3e} is below tolerance")]
    UndefinedPhase { magnitude: f64 },

    #[error("branches {branches:?} form a degenerate block; use geometric_phase_degenerate")]
    DegenerateBlock { branches: Vec<usize> },

    #[error("ill-conditioned overlap block at step {step}; time grid too coarse")]
    GridTooCoarse { step: usize },

    #[error("trace drifted by {drift:.3e} at step {step}; increase the number of steps")]
    Integration { step: usize, drift: f64 },

    #[error("negative eigenvalue {eigenvalue:.3e} at step {step}; increase the number of steps")]
    Positivity { step: usize, eigenvalue: f64 },

    #[error("parameter out of domain: {0}")]
    Domain(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for errors caused by bad user input rather than numerics.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config(_) | Error::Parse { .. } | Error::Io(_) | Error::Domain(_))
    }
}
