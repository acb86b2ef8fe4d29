use thiserror::Error;

/// Errors produced by the numerical core.
#[derive(Debug, Error)]
pub enum Error {
    #[error("gauge singularity at t = {t}: polar angle {theta} outside (0, pi)")]
    GaugeSingularity { t: f64, theta: f64 },

    #[error("step size underflow at t = {t} (h = {h:e})")]
    StepUnderflow { t: f64, h: f64 },

    #[error("integration exceeded {max_steps} steps at t = {t}")]
    MaxSteps { t: f64, max_steps: usize },

    #[error("quadrature on [{a}, {b}] did not converge (estimated error {estimate:e})")]
    Quadrature { a: f64, b: f64, estimate: f64 },

    #[error("degenerate rotating-frame field (x = {x}, theta = {theta}): Rabi frequency vanishes")]
    DegenerateField { x: f64, theta: f64 },

    #[error("epsilon sweep failed on x in [{from}, {to}]")]
    SweepFailure { from: f64, to: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    /// True for failures of the numerical methods themselves (as opposed to bad
    /// input or I/O).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::GaugeSingularity { .. }
                | Error::StepUnderflow { .. }
                | Error::MaxSteps { .. }
                | Error::Quadrature { .. }
                | Error::DegenerateField { .. }
                | Error::SweepFailure { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
