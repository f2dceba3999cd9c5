//! Numerical toolkit for the attenuated Radon transform on the plane.
//!
//! The crate covers the full pipeline: forward projection of scalar fields
//! into sinograms (classical and attenuated), the divergent beam transform,
//! row-wise Hilbert transforms, reconstruction through the Novikov-Natterer
//! inversion formula, and product formulas that evaluate the inner product
//! of two fields directly from attenuated Radon data of one of them, by
//! deterministic quadrature or by Monte Carlo line sampling.
//!
//! Conventions are fixed once in [`geometry`]: a line is addressed by its
//! unit normal `ω = (cos ω, sin ω)` and signed offset `p`, and traced as
//! `x = p·ω + u·ω⊥` with `ω⊥ = (−sin ω, cos ω)`. Angles cover the full
//! circle because the attenuated transform is not symmetric under
//! `(ω, p) → (ω + π, −p)`.

pub mod beam;
pub mod fields;
pub mod geometry;
pub mod hilbert;
pub mod novikov;
pub mod plancherel;
pub mod radon;
pub mod selftest;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("unknown phantom `{0}`")]
    UnknownPhantom(String),
    #[error("invalid parameter for `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },
    #[error("field has no analytic gradient and the finite-difference fallback is disabled")]
    MissingGradient,
    #[error("row of {0} samples is too short for a Hilbert transform (need at least 8)")]
    RowTooShort(usize),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("bad file format: {0}")]
    BadFormat(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
