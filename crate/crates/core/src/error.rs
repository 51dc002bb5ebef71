use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Input(String),

    #[error("argument outside of domain: {0}")]
    Domain(String),

    #[error("inconsistent state: {0}")]
    State(String),

    #[error("stability condition violated: {0}")]
    StabilityViolation(String),

    #[error("the stiction set is unbounded: {0}")]
    Unbounded(String),

    #[error("guard has no sign change on [{lo}, {hi}]")]
    Bracket { lo: f64, hi: f64 },

    #[error("integration failed at t = {t}: {reason}")]
    Integration { t: f64, reason: String },

    #[error("state diverged at t = {t}")]
    Divergence { t: f64 },

    #[error("transfer function is singular at ω = {omega}")]
    Singularity { omega: f64 },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("cycle is not closed: {0}")]
    Cycle(String),

    #[error("analysis inconclusive: {0}")]
    Inconclusive(String),

    #[error("gain sweep failed: {0}")]
    SweepFailed(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit status for the command-line runner.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Input(_) | Error::Precondition(_) => 1,
            Error::Inconclusive(_) | Error::InsufficientData(_) => 3,
            _ => 2,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Error::Input(_) => "input",
            Error::Domain(_) => "domain",
            Error::State(_) => "state",
            Error::StabilityViolation(_) => "stability_violation",
            Error::Unbounded(_) => "unbounded",
            Error::Bracket { .. } => "bracket",
            Error::Integration { .. } => "integration",
            Error::Divergence { .. } => "divergence",
            Error::Singularity { .. } => "singularity",
            Error::InsufficientData(_) => "insufficient_data",
            Error::Cycle(_) => "cycle",
            Error::Inconclusive(_) => "inconclusive",
            Error::SweepFailed(_) => "sweep_failed",
            Error::Precondition(_) => "precondition",
            Error::Config(_) => "config",
            Error::Io(_) => "io",
        }
    }
}
