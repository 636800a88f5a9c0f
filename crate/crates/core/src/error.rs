use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("index {index} out of range for {what} (admissible {lo}..={hi})")]
    OutOfRange {
        what: &'static str,
        index: i64,
        lo: i64,
        hi: i64,
    },

    #[error("moment index {0} missing from table")]
    MissingMoment(i64),

    #[error("quadrature stalled at level {level}: successive levels agree to {achieved_digits:.1} of {wanted_digits} digits")]
    QuadratureStalled {
        level: u32,
        achieved_digits: f64,
        wanted_digits: u32,
    },

    /// Non-positive pivot in the Hankel Cholesky factor; the working precision is too low.
    #[error("Cholesky breakdown at pivot {pivot} with {precision_bits} bits")]
    CholeskyBreakdown { pivot: usize, precision_bits: u32 },

    #[error("denominator 2n + lambda - 4 beta_n vanishes at n = {n}")]
    DenominatorGuard { n: usize },

    #[error("inconsistent t-grid: {0}")]
    GridMismatch(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures of the numerical pipeline, as opposed to bad input.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::QuadratureStalled { .. }
                | Error::CholeskyBreakdown { .. }
                | Error::DenominatorGuard { .. }
        )
    }
}
