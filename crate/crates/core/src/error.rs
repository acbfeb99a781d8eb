//! Crate-wide error type. Every variant records the operation that failed as
//! `module.operation` so CLI diagnostics can point at the failing stage.

/// Errors raised by the numerical operations.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{op}: not a regular configuration: {msg}")]
    NotRegular { op: &'static str, msg: String },

    #[error("{op}: band-edge singularity, |v^2 - 4g| = {value:.3e}")]
    EdgeSingularity { op: &'static str, value: f64 },

    #[error("{op}: lambda = {lambda} lies outside the spectrum")]
    OutsideSpectrum { op: &'static str, lambda: f64 },

    #[error("{op}: no convergence after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence {
        op: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("{op}: domain too small, boundary weight {mass:.3e}")]
    DomainTooSmall { op: &'static str, mass: f64 },

    #[error("{op}: single band, frequency vector is empty")]
    SingleBand { op: &'static str },

    #[error("{op}: truncation too tight, boundary weight mass {mass:.3e}")]
    TruncationTooTight { op: &'static str, mass: f64 },

    #[error("{op}: loss of orthogonality at degree {at}, last good degree {last_good}")]
    LossOfOrthogonality {
        op: &'static str,
        at: usize,
        last_good: usize,
    },

    #[error("{op}: requested index range exceeds the table")]
    RangeExceeded { op: &'static str },

    #[error("{op}: spectral parameter too close to the real axis, |Im z| = {im:.3e}")]
    SpectralParameterOnAxis { op: &'static str, im: f64 },

    #[error("{op}: normalization system ill-conditioned, cond ~ {cond:.3e}")]
    IllConditioned { op: &'static str, cond: f64 },

    #[error("{op}: theta series would need truncation radius > {max} (Im tau too small)")]
    DivergentTruncation { op: &'static str, max: usize },

    #[error("{op}: argument on the theta divisor, |theta(x)| = {value:.3e}")]
    ThetaDivisor { op: &'static str, value: f64 },

    #[error("{op}: poor fit, residual {residual:.3e} exceeds {limit:.3e}")]
    PoorFit {
        op: &'static str,
        residual: f64,
        limit: f64,
    },

    #[error("{op}: walker escaped the confining region (|lambda| > {bound})")]
    NonConfining { op: &'static str, bound: f64 },

    #[error("{op}: insufficient samples, relative error {rel_err:.2}")]
    InsufficientSamples { op: &'static str, rel_err: f64 },

    #[error("{op}: {msg}")]
    Precondition { op: &'static str, msg: String },
}

impl Error {
    pub fn precondition(op: &'static str, msg: impl Into<String>) -> Self {
        Error::Precondition {
            op,
            msg: msg.into(),
        }
    }

    /// True for errors caused by invalid inputs rather than numerical failure.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Precondition { .. }
                | Error::NotRegular { .. }
                | Error::OutsideSpectrum { .. }
                | Error::RangeExceeded { .. }
                | Error::SpectralParameterOnAxis { .. }
                | Error::SingleBand { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
