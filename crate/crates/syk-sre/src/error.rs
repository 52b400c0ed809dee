use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("dimension cap exceeded: {0}")]
    DimensionCap(String),
    #[error("size mismatch: {0}")]
    SizeMismatch(String),
    #[error("matrix is not Hermitian (deviation {0:e})")]
    NotHermitian(f64),
    #[error("phase/parity bug: coefficient {index} has imaginary part {imag:e}")]
    ComplexCoefficient { index: usize, imag: f64 },
    #[error("oracle disagreement: direct {direct} vs replicated {replicated}")]
    OracleMismatch { direct: f64, replicated: f64 },
    #[error("singular kernel in sector {sector} at iteration {iteration}")]
    Singular { sector: String, iteration: usize },
    #[error("NaN encountered at iteration {iteration}: {detail}")]
    NotANumber { iteration: usize, detail: String },
    #[error("saddle not converged (residual {residual:e} after {iterations} iterations)")]
    Unconverged { residual: f64, iterations: usize },
    #[error("estimator failed on sample at seed offset {offset}: {source}")]
    Sample {
        offset: u64,
        #[source]
        source: Box<Error>,
    },
    #[error("{0}")]
    Other(String),
}

pub type Result<T> = std::result::Result<T, Error>;
