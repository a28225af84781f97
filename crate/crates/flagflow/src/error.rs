use thiserror::Error;

/// Errors produced by the flag-flow library.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// Eigenvalue clustering at the requested tolerance does not separate
    /// the spectrum cleanly enough to trust the spectral projectors.
    #[error("eigenvalue clustering at tolerance {tol:e} is unstable ({detail})")]
    ClusterAmbiguity { tol: f64, detail: String },

    /// A matrix block does not match the declared factor size.
    #[error("block {index} is not a square matrix of size {expected}")]
    NonSquareInput { index: usize, expected: usize },

    /// A block violates the tracelessness constraint of sl(n).
    #[error("block {index} has trace {trace:e}, outside tolerance")]
    NotTraceless { index: usize, trace: f64 },

    /// A block violates the unimodularity constraint of SL(n).
    #[error("block {index} has determinant {det:e}, outside tolerance of 1")]
    NotUnimodular { index: usize, det: f64 },

    /// The element has complex or defective spectrum where a real
    /// diagonalizable one is required.
    #[error("element is not hyperbolic: {0}")]
    NotHyperbolic(String),

    /// Every factor of the hyperbolic part vanishes, so no restricted root
    /// is positive and the decay constant is undefined.
    #[error("no positive restricted root: hyperbolic part vanishes in every factor")]
    NoPositiveRoot,

    /// Two values built over different semisimple specs were combined.
    #[error("semisimple specs do not match")]
    SpecMismatch,

    /// Flag-type dimensions are not strictly increasing below the factor
    /// size.
    #[error("invalid flag type in factor {factor}")]
    InvalidFlagType { factor: usize },

    /// A claimed basis is numerically rank deficient.
    #[error("basis matrix is singular in factor {factor}")]
    SingularBasis { factor: usize },

    /// A dimension profile is incompatible with the chamber multiplicities
    /// or the flag-type step sizes.
    #[error("dimension profile is inconsistent with the chamber or flag type")]
    InconsistentProfile,

    /// The flag does not classify onto the requested component.
    #[error("flag does not lie on the requested component")]
    NotOnComponent,

    /// The requested normal fiber has dimension zero.
    #[error("normal fiber is empty for the requested sign")]
    EmptyFiber,

    /// Step-halving changed the monodromy by more than the allowed drift.
    #[error("monodromy integration failed the step-halving check (change {delta:e})")]
    StepTooCoarse { delta: f64 },

    /// The QR/Schur iteration did not converge.
    #[error("Schur iteration failed to converge")]
    SchurFailed,

    /// Discrete flows are only defined at integer times.
    #[error("time {0} is not an integer, required in discrete mode")]
    NonIntegerTime(f64),
}

pub type Result<T> = std::result::Result<T, Error>;
