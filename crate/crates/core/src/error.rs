use thiserror::Error;

/// Errors raised anywhere in the platoon pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("eigenvalue iteration failed to converge after {iterations} iterations (block ending at row {row})")]
    NoConvergence { iterations: usize, row: usize },

    #[error("matrix is singular to working precision")]
    Singular,

    #[error("system matrix is not Hurwitz (spectral abscissa {abscissa:.6e}); H-infinity norm is unbounded")]
    NotHurwitz { abscissa: f64 },

    #[error("invalid controller gains kp={kp}, kd={kd} for tau={tau}: need kp > 0, kd > 0 and kd > kp*tau")]
    InvalidGains { kp: f64, kd: f64, tau: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("command not reconstructible: q={q} attacked channels out of N={n} violates 2q < N")]
    NotReconstructible { n: usize, q: usize },

    #[error("empty channel subset")]
    EmptySubset,

    #[error("state diverged at step {step} (vehicle {vehicle})")]
    Divergence { step: usize, vehicle: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
