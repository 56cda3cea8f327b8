//! Escape probabilities of one-dimensional discrete-time quantum walks with a
//! single absorbing site, and the coin-state estimation stack built on them.
//!
//! Three independent routes compute the escape probability `P_E(alpha, beta; M)`:
//!
//! * [`walk`]: direct time-domain iteration of the coin + shift recurrence,
//!   removing amplitude as it lands on the absorbing site;
//! * [`spectral`]: the quasi-momentum eigenfunction route with the method of
//!   images, integrated by adaptive Gauss-Legendre quadrature;
//! * [`spectral::closed`]: exact Hadamard-walk closed forms.
//!
//! On top of these sit classical and quantum Fisher information
//! ([`fisher`]), grid scans and hot-spot search ([`grid`]), binomial
//! sampling / maximum-likelihood estimation / Cramér-Rao benchmarking
//! ([`estimation`]) and figure-data emission ([`figures`]).

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bloch;
pub mod error;
pub mod estimation;
pub mod figures;
pub mod fisher;
pub mod grid;
pub mod par;
pub mod spectral;
pub mod walk;

pub use bloch::{canonicalize, coin_matrix, initial_amplitudes, BlochState, CoinMatrix, ComplexAmplitudePair};
pub use error::{Error, Result};
pub use spectral::Boundary;
