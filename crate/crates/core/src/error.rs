use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("matrix is not Hermitian (relative asymmetry {asymmetry:.3e})")]
    NotHermitian { asymmetry: f64 },

    #[error("matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:.3e}, max {max_eigenvalue:.3e})")]
    NotPsd {
        min_eigenvalue: f64,
        max_eigenvalue: f64,
    },

    #[error("channel is rank deficient (condition number {condition:.3e})")]
    SingularChannel { condition: f64 },

    #[error("channel column {user} is zero on this sub-array")]
    InvisibleUser { user: usize },

    #[error("degenerate channel batch: {0}")]
    DegenerateChannel(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("{0} is not implemented")]
    NotImplemented(&'static str),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}
