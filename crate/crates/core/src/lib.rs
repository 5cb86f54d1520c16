//! Beta Dyson Brownian motion and beta Laguerre processes in the
//! high-temperature regime `β = 2c/N`.
//!
//! The crate is organised bottom-up:
//!
//! * [`poly`]: exact associated Hermite / associated Laguerre polynomials,
//!   their companions `q_n`, primitives `P_n` and the differential identities
//!   that make the `P_n` statistics diagonal.
//! * [`moments`]: limiting moment recurrences, moment curves `m_n(t)`, and the
//!   covariance structure of the Gaussian fluctuation limits.
//! * [`spectral`]: Jacobi matrices, spectral moments, Gauss quadrature, the
//!   `ν_c` density and the `K_c` kernel.
//! * [`sde`]: particle simulation and exact tridiagonal samplers.
//! * [`stats`]: Monte Carlo LLN / CLT verification.
//!
//! [`linalg`], [`quad`] and [`rng`] hold the numerical plumbing shared by the
//! above.

// `!(x > 0.0)` is used on purpose so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod linalg;
pub mod moments;
pub mod params;
pub mod poly;
pub mod quad;
pub mod rng;
pub mod sde;
pub mod spectral;
pub mod stats;

pub use error::{Error, Result};
pub use params::{Ensemble, EnsembleKind};
