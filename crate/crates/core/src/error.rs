use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("potential violates assumption {assumption}: {detail}")]
    Assumption { assumption: &'static str, detail: String },

    #[error("shape clearance {clearance:.6} is below the required {required:.6}")]
    Clearance { clearance: f64, required: f64 },

    #[error("no epsilon candidate satisfies the gradient bounds: {0}")]
    NoCompliantEpsilon(String),

    #[error("non-finite value in {what} at cell {index} (t = {t})")]
    NonFinite { what: &'static str, index: usize, t: f64 },

    #[error("|phi| bound violated at step {step} (t = {t}): max |phi| = {max_abs:.17} at cell {index}")]
    PhiBound {
        step: u64,
        t: f64,
        max_abs: f64,
        index: usize,
    },

    #[error("interface extinct: no zero crossing of phi")]
    Extinct,

    #[error("extinct at t = {0}")]
    ExtinctAt(f64),

    #[error("snapshot format: {0}")]
    Snapshot(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Short machine-readable tag, printed on the CLI reason line.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidArgument(_) => "invalid_argument",
            Error::Assumption { .. } => "potential_assumption",
            Error::Clearance { .. } => "clearance",
            Error::NoCompliantEpsilon(_) => "no_compliant_epsilon",
            Error::NonFinite { .. } => "non_finite",
            Error::PhiBound { .. } => "phi_bound",
            Error::Extinct | Error::ExtinctAt(_) => "extinct",
            Error::Snapshot(_) => "snapshot",
            Error::Config(_) => "config",
            Error::Io(_) => "io",
            Error::Csv(_) => "csv",
        }
    }
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
