use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParams(String),

    #[error("system is unstable (spectral abscissa {abscissa:.3e})")]
    Unstable { abscissa: f64 },

    #[error("linear solve near singular at frequency {freq:.6e} (condition number {condition:.3e})")]
    NearSingular { freq: f64, condition: f64 },

    #[error("adaptive quadrature did not reach tolerance {tol:.1e} within {panels} panels (estimated error {estimate:.3e})")]
    QuadratureFailure {
        tol: f64,
        panels: usize,
        estimate: f64,
    },

    #[error("unphysical state: {0}")]
    Unphysical(String),

    #[error("formula outside its domain: {0}")]
    Domain(String),

    #[error("no maximum: {0}")]
    NoMaximum(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code reported by the command-line tool.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::InvalidParams(_) => 2,
            Error::Unstable { .. } => 3,
            Error::Io(_) => 1,
            _ => 4,
        }
    }
}
