//! Capacity analysis of MIMO channels with residual transmitter impairments.
//!
//! The library models a flat-fading MIMO link whose transmitter radiates the
//! intended signal plus a residual distortion whose variance scales with the
//! per-antenna signal power. It provides:
//!
//! * [`numerics`] — dense complex-Hermitian kernels (eigendecomposition,
//!   Cholesky log-determinant, PSD/unit-trace projection),
//! * [`channel`] — deterministic and i.i.d. Rayleigh channel sampling with
//!   counter-based reproducible RNG streams,
//! * [`impairments`] — the distortion-covariance model parameterized by the
//!   impairment level `kappa` and the subcarrier-leakage mix `alpha`,
//! * [`capacity`] — mutual information, waterfilling capacity, ergodic Monte
//!   Carlo capacity, high-SNR capacity limits, and covariance optimization,
//! * [`muxgain`] — the finite-SNR multiplexing gain and its asymptotic bounds.
//!
//! All capacities are in bits per channel use (log base 2).

pub mod capacity;
pub mod channel;
pub mod error;
pub mod impairments;
pub mod muxgain;
pub mod numerics;

pub use error::{Error, Result};
