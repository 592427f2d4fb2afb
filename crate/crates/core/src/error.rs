use thiserror::Error;

/// Every failure the engine can report.
///
/// Validation problems are separated from numerical ones so that callers
/// (the CLI in particular) can map them onto distinct exit codes.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("negative rate: {field} = {value}")]
    NegativeRate { field: &'static str, value: f64 },
    #[error("positions must be strictly increasing (index {index})")]
    NonMonotonePositions { index: usize },
    #[error("model {model} requires the `{block}` block")]
    MissingModelBlock { model: &'static str, block: &'static str },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("resolvent is singular at omega = {re} + {im}i")]
    SingularResolvent { re: f64, im: f64 },
    #[error("eigenvector matrix is numerically defective (condition number {condition:e})")]
    DefectiveMatrix { condition: f64 },
    #[error("eigendecomposition failed to converge")]
    EigenFailure,
    #[error("retardation series needs {terms} terms, above the limit of 1e6")]
    SeriesOverflow { terms: f64 },
    #[error("pair energy E = {re} + {im}i sits on a two-body pole")]
    SingularBubble { re: f64, im: f64 },
    #[error("adaptive quadrature did not converge (estimated error {error:e})")]
    QuadratureNonConvergence { error: f64 },
    #[error("T-matrix system is ill conditioned (condition number {condition:e})")]
    IllConditioned { condition: f64 },
    #[error("Lippmann-Schwinger residual {residual:e} exceeds tolerance")]
    ResidualTooLarge { residual: f64 },
    #[error("pair basis of dimension {dim} exceeds the supported maximum {max}")]
    BasisTooLarge { dim: usize, max: usize },
    #[error("operation {op} is not available for model {model}")]
    UnsupportedModel { op: &'static str, model: &'static str },
    #[error("operation {op} requires mode {required}")]
    UnsupportedMode { op: &'static str, required: &'static str },
    #[error("normalization constant is zero")]
    ZeroNormalization,
    #[error("wavefunction norm {norm} differs from one")]
    NotNormalized { norm: f64 },
    #[error("Nystrom eigenvalue moved by {change:e} under grid doubling")]
    GridTooCoarse { change: f64 },
    #[error("pair-energy denominator {value:e} below 1e-10")]
    DegenerateSpectrum { value: f64 },
    #[error("time step {dt} is too large (halving estimate {estimate:e})")]
    StepTooLarge { dt: f64, estimate: f64 },
    #[error("hierarchy order {have} is insufficient, {need} required")]
    InsufficientOrder { have: usize, need: usize },
}

impl Error {
    /// True for errors caused by the input rather than by the numerics.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::NegativeRate { .. }
                | Error::NonMonotonePositions { .. }
                | Error::MissingModelBlock { .. }
                | Error::InvalidConfig(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
