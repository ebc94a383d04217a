use thiserror::Error;

/// Errors raised by the simulation library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("site count {0} outside supported range 1..={max}", max = crate::spinops::MAX_SITES)]
    SiteCount(usize),
    #[error("site {site} out of range 1..={sites}")]
    SiteOutOfRange { site: usize, sites: usize },
    #[error("site {0} listed more than once")]
    DuplicateSite(usize),
    #[error("empty site list")]
    EmptySites,
    #[error("site sets overlap at site {0}")]
    OverlappingRegions(usize),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },
    #[error("operator is not Hermitian (max |A - A^dagger| = {0:e})")]
    NotHermitian(f64),
    #[error("operator is not anti-Hermitian (max |A + A^dagger| = {0:e})")]
    NotAntiHermitian(f64),
    #[error("operator is not unitary (max |U^dagger U - I| = {0:e})")]
    NotUnitary(f64),
    #[error("eigenvalue {0:e} below tolerance: corrupted density matrix")]
    NegativeEigenvalue(f64),
    #[error("LAPACK {routine} failed with info = {info}")]
    Lapack { routine: &'static str, info: i32 },
    #[error("eigen-decomposition residual {0:e} exceeds tolerance")]
    Decomposition(f64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid initial-state pattern: {0}")]
    InvalidPattern(String),
    #[error("insufficient samples: need {needed}, have {available}")]
    InsufficientSamples { needed: usize, available: usize },
    #[error("degenerate energy normalization: |E_inf - E_0| = {0:e}")]
    DegenerateEnergy(f64),
    #[error("resonant denominator {value:e} on bond ({site}, {next}): gradient too small for the expansion", next = site + 1)]
    ResonantDenominator { site: usize, value: f64 },
    #[error("numerical invariant violated: {name} (value {value:e}, tolerance {tolerance:e})")]
    InvariantBreach {
        name: &'static str,
        value: f64,
        tolerance: f64,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
