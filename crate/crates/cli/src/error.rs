use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("unknown verification suite '{0}' (expected polar, homogeneous, scaling, stationarity, holder, dimension or all)")]
    UnknownSuite(String),

    #[error(transparent)]
    Core(#[from] ossrf::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl CliError {
    /// Process exit code: 2 invalid input, 3 violated hypothesis, 4 I/O or
    /// numerical failure. Failed verifications exit with 1 without an error.
    pub fn exit_code(&self) -> i32 {
        use ossrf::Error as E;
        match self {
            CliError::Config(_) | CliError::UnknownSuite(_) => 2,
            CliError::Core(e) => match e {
                E::Hypothesis { .. } => 3,
                E::Domain(_) | E::Invalid(_) | E::Unsupported(_) | E::NonPositiveSpectrum { .. } => 2,
                E::Range(_) | E::Quadrature { .. } | E::Numerical(_) | E::Io(_) | E::Json(_) => 4,
            },
            CliError::Io(_) | CliError::Json(_) => 4,
        }
    }
}
