use thiserror::Error;

/// Errors produced while building or analysing a discretization.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("ill-conditioned basis: Vandermonde condition number {condition:.3e} exceeds cap {cap:.3e}")]
    IllConditionedBasis { condition: f64, cap: f64 },

    #[error("system is not hyperbolic along normal {normal:?}: eigenvalue imaginary part {imag:.3e}")]
    NonHyperbolic { normal: [f64; 2], imag: f64 },

    #[error("normal direction {normal:?} is characteristic (all eigenvalues of A_n vanish)")]
    DegenerateNormal { normal: [f64; 2] },

    #[error("boundary face on element {element} (tag {tag:?}) has no boundary rule for {system}")]
    MissingBoundaryRule {
        element: usize,
        tag: String,
        system: String,
    },

    #[error("flux kind {0} has no penalization and induces no conforming constraint")]
    NoPenalization(String),

    #[error("ambiguous rank: singular value {sigma:.3e} lies within a factor 10 of the threshold {threshold:.3e}")]
    AmbiguousRank { sigma: f64, threshold: f64 },

    #[error("eigensolver failed: {0}")]
    EigenSolver(String),

    #[error("factorization failed: {0}")]
    Factorization(String),

    #[error("eigenvectors of the conforming block are not unitary (deviation {0:.3e})")]
    NonUnitary(f64),

    #[error("eigenvector matrix is near-defective (condition number {0:.3e})")]
    NearDefective(f64),

    #[error("unresolvable eigenvalue crossing between tau = {tau_lo} and tau = {tau_hi}")]
    UnresolvableCrossing { tau_lo: f64, tau_hi: f64 },

    #[error("insufficient tau range: {0}")]
    InsufficientTauRange(String),

    #[error("time step {dt:.3e} exceeds the stability cap {cap:.3e}")]
    TimeStepTooLarge { dt: f64, cap: f64 },

    #[error("energy grew by {growth:.3e} (relative) at step {step}")]
    Unstable { step: usize, growth: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures of the numerical pipeline, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        !matches!(
            self,
            Error::InvalidArgument(_)
                | Error::DimensionMismatch(_)
                | Error::MissingBoundaryRule { .. }
                | Error::NoPenalization(_)
                | Error::InsufficientTauRange(_)
                | Error::TimeStepTooLarge { .. }
                | Error::Io(_)
                | Error::Json(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
