use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("mode {mode} out of range for a {n_modes}-mode state")]
    ModeOutOfRange { mode: usize, n_modes: usize },

    #[error("mode {0} listed more than once")]
    DuplicateMode(usize),

    #[error("covariance matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("unphysical state: {0}")]
    Unphysical(String),

    #[error("matrix is not symplectic (max deviation {0:e})")]
    NotSymplectic(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("singular conditioning: marginal variance {0:e} below threshold")]
    Singular(f64),

    #[error("gain undefined for {component}: |input mean| {amplitude:e} is below floor {floor:e}")]
    UndefinedGain {
        component: &'static str,
        amplitude: f64,
        floor: f64,
    },

    #[error("numerical failure: {0}")]
    Numeric(String),
}

impl Error {
    /// True for violations of the uncertainty principle or numerical breakdowns,
    /// as opposed to malformed input parameters.
    pub fn is_physicality(&self) -> bool {
        matches!(
            self,
            Error::Unphysical(_) | Error::NotSymplectic(_) | Error::Singular(_) | Error::Numeric(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
