//! Steerability of real two-qubit states under real projective measurements.
//!
//! Everything is organized around the steering ellipse of a state: the curve
//! of conditional operators Bob holds after Alice measures a real projector.
//! [`criterion`] decides steerability from that curve, [`search`] sweeps out
//! phase boundaries, and [`lhs`] builds explicit local hidden-state models
//! from keyring measures when the criterion certifies unsteerability.

pub mod bloch;
pub mod cli;
pub mod criterion;
pub mod lhs;
pub mod search;
pub mod states;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parameter out of domain: {0}")]
    Domain(String),
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("conjugating operator is singular or not positive definite")]
    SingularY,
    #[error("quadrature did not converge within {0} panels")]
    QuadratureDiverged(usize),
    #[error("ellipse tilt {0} is too close to 1 for the criterion to apply")]
    TiltTooLarge(f64),
    #[error("proportional-direction search stalled at residual {0:.3e}")]
    NoConvergence(f64),
    #[error("precondition failed: {0}")]
    PreconditionFailed(String),
    #[error("target operator is not in the box of the measure")]
    NotInBox,
    #[error("model data mismatch: {0}")]
    ModelFormat(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Order-preserving map over a slice; data-parallel when the `parallel`
/// feature is enabled, plain sequential otherwise.
#[cfg(feature = "parallel")]
pub(crate) fn map_ordered<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    use rayon::prelude::*;
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn map_ordered<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    F: Fn(&T) -> U,
{
    items.iter().map(f).collect()
}
