//! specband: spectral data of log-gas equilibrium problems and finite-band
//! Jacobi operators.
//!
//! The crate computes, and cross-checks against each other:
//!
//! * equilibrium measures of the logarithmic energy, with a fixed band support
//!   or confined by an external polynomial field ([`equilibrium`]);
//! * recurrence coefficients of polynomials orthonormal under the varying
//!   weight `exp(-n V / g)` ([`orthopoly`]);
//! * band spectra, integrated density of states, Hill discriminants and
//!   Lyapunov exponents of periodic and window Jacobi operators ([`jacobi`]);
//! * period matrices, theta functions and the theta-ratio coefficient map of
//!   the hyperelliptic surface attached to a band set ([`riemann`]);
//! * Monte Carlo eigenvalue statistics of the unitary-invariant matrix
//!   ensemble: linear statistics, covariance scaling and Fredholm gap
//!   probabilities ([`rmt`]).
//!
//! The square-of-polynomial potential class `V = v^2 / 2q` ties everything
//! together: its bands, densities and quasimomentum are closed-form
//! ([`potential`]), which makes the cross-module identities testable.

pub mod equilibrium;
pub mod error;
pub mod jacobi;
pub mod linalg;
pub mod orthopoly;
pub mod poly;
pub mod potential;
pub mod quad;
pub mod riemann;
pub mod rmt;
pub mod verify;

pub use error::{Error, Result};
pub use potential::{BandSet, CombPoint, Potential};
