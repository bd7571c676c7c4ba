//! Optimal reconstruction error of noisy compressed sensing with sparse
//! Gaussian signals.
//!
//! The large-system MMSE of `y = sqrt(gamma) Phi x + z` is obtained from the
//! fixed points of `1/eta = 1 + gamma * mmse(p, eta * gamma * R)`, the
//! physically relevant one being the minimizer of the free energy. On top of
//! that this crate locates the thresholds separating the performance regions
//! in the `(R, gamma)` plane and provides approximate message passing with its
//! state evolution, which tracks the smallest reachable fixed point.
//!
//! The crate is `no_std` (with `alloc`) when the default `std` feature is
//! disabled.
#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod amp;
pub mod error;
pub mod prior;
pub mod quad;
pub mod regions;
pub mod tanaka;
pub mod units;

pub use error::{Error, Result};
pub use prior::{OracleEstimate, PosteriorStats, ScalarChannel, SparseGaussianPrior};
