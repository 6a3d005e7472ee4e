//! Crate-wide error type.
//!
//! Every fallible public operation returns [`Result`]. Variants carry enough
//! context to be actionable from the command line (which rule failed, the
//! offending magnitude) without dragging whole fields along.

use thiserror::Error;

/// Errors surfaced by grid construction, operators, the variational layer,
/// the solver and the diagnostics.
#[derive(Debug, Error)]
pub enum Error {
    /// Grid dimensions or box lengths violate the construction rules.
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    /// A model or option value is outside its admissible range.
    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    /// Two fields (or a field and a grid) disagree on dimensions.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A quadrature or comparison requires the field to vanish at the box
    /// boundary and it does not.
    #[error(
        "field does not decay at the box boundary (ring max / global max = {ratio:.3e}, \
         limit {limit:.1e})"
    )]
    BoundaryDecay { ratio: f64, limit: f64 },

    /// The scalar quadrature for the fractional normalization constant failed
    /// its internal refinement check.
    #[error("normalization-constant quadrature did not converge (relative delta {0:.3e})")]
    QuadratureDiverged(f64),

    /// The fiber polynomial has no positive critical point because every
    /// super-quadratic coefficient vanishes.
    #[error("no manifold projection: all super-quadratic fiber coefficients are zero")]
    NoProjection,

    /// A non-finite number appeared where a finite one was required.
    #[error("non-finite value encountered in {0}")]
    NonFinite(String),

    /// An iteration produced a non-finite or exploding energy.
    #[error("iteration diverged: {0}")]
    Diverged(String),

    /// Every start of a multistart run failed outright.
    #[error("no multistart run produced a usable candidate: {0}")]
    AllStartsFailed(String),

    /// A scan does not contain both an at-threshold point and a below-threshold
    /// point, so the crossing cannot be bisected.
    #[error("threshold crossing not bracketed: {0}")]
    NotBracketed(String),

    /// An identity or probe was requested outside the regime where it holds.
    #[error("regime mismatch: {0}")]
    RegimeMismatch(String),

    /// A binary or text artifact on disk is malformed.
    #[error("bad field file: {0}")]
    BadFieldFile(String),

    /// Underlying I/O failure.
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Convenience alias used across the crate.
pub type Result<T> = std::result::Result<T, Error>;
