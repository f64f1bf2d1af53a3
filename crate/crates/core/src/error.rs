use thiserror::Error;

/// Errors raised by the clustering pipeline.
///
/// The variants fall into two families that the CLI maps onto exit codes:
/// input problems (parse, schema, validation, invalid arguments) and
/// numerical failures (non-convergence, degenerate spectra, blown-up
/// integrations).
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("invalid network: {}", .0.join("; "))]
    Validation(Vec<String>),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("injections are not balanced: sum = {0:e} p.u.")]
    Imbalance(f64),

    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("graph is disconnected (lambda_2 = {0:e}); run island detection first")]
    Disconnected(f64),

    #[error("degenerate embedding: row {row} has norm {norm:e}")]
    DegenerateEmbedding { row: usize, norm: f64 },

    #[error("integration failed at step {step} (t = {time}): non-finite state")]
    IntegrationFailure { step: usize, time: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for failures caused by bad input rather than by the numerics.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::Parse { .. }
                | Error::Schema(_)
                | Error::Validation(_)
                | Error::InvalidArgument(_)
                | Error::Imbalance(_)
                | Error::NotSymmetric(_)
                | Error::Io(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
