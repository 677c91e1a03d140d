use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A real argument outside the region where the transform is finite.
    #[error("argument {value} outside the admissible domain of {what}")]
    Domain { what: &'static str, value: f64 },

    /// A square-root radicand landed on (or crossed) the principal-branch cut.
    #[error("branch cut crossed while evaluating {0}")]
    Branch(String),

    #[error("grid too narrow: captured probability mass {mass:.6} < 0.999")]
    GridCoverage { mass: f64 },

    #[error("damping a = {a} infeasible: E[S_T^(a+1)] is not finite for these parameters")]
    DampingInfeasible { a: f64 },

    #[error("degenerate sample: {0}")]
    Degenerate(String),

    #[error("optimizer failed: {0}")]
    NoConvergence(String),

    #[error("distribution grids built at different horizons ({0} vs {1} days)")]
    HorizonMismatch(f64, f64),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("{path}: line {line}, column {column}: {reason}")]
    Parse {
        path: String,
        line: u64,
        column: String,
        reason: String,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Short machine-readable category, used as the CLI error tag.
    pub fn category(&self) -> &'static str {
        match self {
            Error::InvalidParameter(_) => "invalid_parameter",
            Error::Domain { .. } => "domain",
            Error::Branch(_) => "numerical_domain",
            Error::GridCoverage { .. } => "grid_coverage",
            Error::DampingInfeasible { .. } => "damping_infeasible",
            Error::Degenerate(_) => "degenerate",
            Error::NoConvergence(_) => "no_convergence",
            Error::HorizonMismatch(..) => "horizon_mismatch",
            Error::InsufficientData(_) => "insufficient_data",
            Error::Parse { .. } => "parse",
            Error::Config(_) => "config",
            Error::Io(_) => "io",
            Error::Json(_) => "parse",
        }
    }
}
