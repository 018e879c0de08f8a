use thiserror::Error;

use crate::types::C64;

/// Every failure mode of the toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("adaptive step size underflow at {at} (step {step:e})")]
    StepFailure { at: f64, step: f64 },

    #[error("column {column} is not certified at k = {k}")]
    NonCertifiedColumn { column: usize, k: C64 },

    #[error("Jost matrix is singular at k = {k} (|det| = {det:e})")]
    SingularPsi { k: C64, det: f64 },

    #[error("s2+ vanishes on the real axis near k = {k} (|s2+| = {modulus:e}); data outside the admissible class")]
    RealZeroOfS2 { k: f64, modulus: f64 },

    #[error("function vanishes on the search boundary near {at}")]
    BoundaryZero { at: C64 },

    #[error("multiple zero suspected near {at}")]
    MultipleZeroSuspected { at: C64 },

    #[error("s1+ vanishes at the eigenvalue {k}")]
    VanishingS1AtZero { k: C64 },

    #[error("k = {k} lies within the root tolerance of a pole")]
    NearPole { k: C64 },

    #[error("residue routes disagree at z = {z}: relative mismatch {mismatch:e}")]
    InconsistentResidue { z: C64, mismatch: f64 },

    #[error("quadrature did not converge: {0}")]
    QuadratureNotConverged(String),

    #[error("Marchenko system is numerically singular at x = {x}, t = {t} (condition estimate {cond:e})")]
    SingularSystem { x: f64, t: f64, cond: f64 },

    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),

    #[error("eigenvalues present; the jump check requires an empty discrete spectrum")]
    EigenvaluePresent,

    #[error("reflection samples are not on a grid symmetric about k = 0")]
    GridNotSymmetric,

    #[error("not enough samples of c(k) near the origin: {0}")]
    InsufficientNearOriginSamples(String),
}

impl Error {
    /// True for failures that signal data outside the admissible class
    /// (real or multiple zeros of s2+), as opposed to numerical trouble.
    pub fn is_class_violation(&self) -> bool {
        matches!(
            self,
            Error::RealZeroOfS2 { .. } | Error::MultipleZeroSuspected { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
