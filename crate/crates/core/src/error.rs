use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid density: {0}")]
    InvalidDensity(String),

    /// The velocity marginals of the two densities disagree somewhere.
    #[error("compatibility condition violated: max marginal residual {max_residual:.6e} at x = {worst_x:.6}")]
    Compatibility { max_residual: f64, worst_x: f64 },

    #[error("weight is not positive: min {min:.6e} at x = {x:.6}, t = {t:.6}")]
    Positivity { min: f64, x: f64, t: f64 },

    #[error("CFL violated: Courant number {courant:.6} exceeds 1")]
    Cfl { courant: f64 },

    #[error("non-finite density detected at step {step}")]
    NonFinite { step: usize },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("snapshot format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
