use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unknown schedule family `{0}`")]
    UnknownFamily(String),

    #[error("period {period} is not a whole number of detuning cycles (2πm/δ with δ = {delta})")]
    NonCyclicPeriod { period: f64, delta: f64 },

    #[error("excitation number {n} exceeds truncation {n_max_total}")]
    ExcitationOutOfRange { n: usize, n_max_total: usize },

    #[error("step rejected: local error {error:.3e} exceeds tolerance {tol:.3e} (dt = {dt:.3e})")]
    StepTooLarge { dt: f64, error: f64, tol: f64 },

    #[error("tolerance {tol:.3e} unachievable at t = {t}: step fell below floor {dt_min:.3e}")]
    StepFloor { t: f64, dt_min: f64, tol: f64 },

    #[error("eigenspace identification is ambiguous: {0}")]
    AmbiguousEigenspace(String),

    #[error("endpoint overlap {overlap:.3e} too small to define a phase")]
    PhaseUndefined { overlap: f64 },

    #[error("storage failed: leakage {leakage:.3e} exceeds {limit:.3e}")]
    StorageFailed { leakage: f64, limit: f64 },

    #[error("quadrature did not converge: estimated error {estimate:.3e} > {tol:.3e}")]
    Quadrature { estimate: f64, tol: f64 },
}
