//! Transmitter-distortion model: maps a transmit covariance and impairment
//! parameters to the diagonal distortion covariance.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numerics::{self, CMat};

/// Residual transmitter impairment parameters.
///
/// `kappa` is the level of impairments (its square is the EVM); `alpha` mixes
/// per-antenna distortion (`alpha = 0`, single carrier) with average-power
/// distortion (`alpha = 1`, many subcarriers).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImpairmentModel {
    kappa: f64,
    alpha: f64,
}

impl ImpairmentModel {
    pub fn new(kappa: f64, alpha: f64) -> Result<Self> {
        if !kappa.is_finite() || kappa < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "kappa must be finite and >= 0, got {kappa}"
            )));
        }
        if !alpha.is_finite() || !(0.0..=1.0).contains(&alpha) {
            return Err(Error::InvalidArgument(format!(
                "alpha must lie in [0, 1], got {alpha}"
            )));
        }
        Ok(Self { kappa, alpha })
    }

    /// Ideal transceivers: no distortion at all.
    pub fn ideal() -> Self {
        Self { kappa: 0.0, alpha: 1.0 }
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
}

/// Error vector magnitude of the model: kappa^2.
pub fn evm(m: &ImpairmentModel) -> f64 {
    m.kappa * m.kappa
}

/// Hermitian PSD transmit covariance with unit trace.
#[derive(Debug, Clone)]
pub struct Covariance {
    q: CMat,
}

impl Covariance {
    /// Validates Hermitian symmetry, positive semidefiniteness (min eigenvalue
    /// >= -1e-12) and unit trace (within 1e-12).
    pub fn new(q: CMat) -> Result<Self> {
        let n = q.nrows();
        if n == 0 || q.ncols() != n {
            return Err(Error::InvalidArgument(format!(
                "covariance must be square and non-empty, got {}x{}",
                n,
                q.ncols()
            )));
        }
        let dev = numerics::hermitian_deviation(&q);
        let tol = numerics::HERMITIAN_TOL * q.norm().max(1.0);
        if dev > tol {
            return Err(Error::NotHermitian { deviation: dev, tolerance: tol });
        }
        let trace: f64 = (0..n).map(|i| q[(i, i)].re).sum();
        if (trace - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!(
                "covariance trace must be 1, got {trace}"
            )));
        }
        let eig = numerics::herm_eig(&q)?;
        let min = *eig.eigenvalues.last().unwrap();
        if min < -1e-12 {
            return Err(Error::InvalidArgument(format!(
                "covariance must be PSD, min eigenvalue {min:.3e}"
            )));
        }
        Ok(Self { q: numerics::symmetrize(&q) })
    }

    /// Constructor for matrices whose invariants hold by construction.
    pub(crate) fn new_unchecked(q: CMat) -> Self {
        Self { q }
    }

    /// Isotropic covariance I / n.
    pub fn isotropic(n: usize) -> Self {
        Self {
            q: CMat::identity(n, n).scale(1.0 / n as f64),
        }
    }

    pub fn matrix(&self) -> &CMat {
        &self.q
    }

    pub fn dim(&self) -> usize {
        self.q.nrows()
    }

    /// Real diagonal q_1, ..., q_{N_t} (per-antenna signal powers).
    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.q.nrows()).map(|i| self.q[(i, i)].re).collect()
    }

    pub fn trace(&self) -> f64 {
        self.diagonal().iter().sum()
    }

    /// Floors the diagonal at `floor`, keeping off-diagonal entries; used to
    /// regularize before the alpha = 0 asymptotic evaluation. The trace grows
    /// by at most n * floor.
    pub fn with_diagonal_floor(&self, floor: f64) -> Covariance {
        let mut q = self.q.clone();
        for i in 0..q.nrows() {
            if q[(i, i)].re < floor {
                q[(i, i)] = Complex64::new(floor, 0.0);
            }
        }
        Covariance { q }
    }
}

/// Diagonal distortion covariance: nonnegative per-antenna variances.
#[derive(Debug, Clone, PartialEq)]
pub struct DistortionCovariance {
    upsilon: Vec<f64>,
}

impl DistortionCovariance {
    pub fn variances(&self) -> &[f64] {
        &self.upsilon
    }

    pub fn total(&self) -> f64 {
        self.upsilon.iter().sum()
    }
}

/// Distortion variance at each transmit antenna:
///
/// upsilon_n = kappa^2 * ((1 - alpha) * q_n + alpha * tr(Q) / N_t)
///
/// Only the diagonal of Q enters; off-diagonal structure is ignored.
pub fn distortion_covariance(q: &Covariance, m: &ImpairmentModel) -> DistortionCovariance {
    DistortionCovariance {
        upsilon: distortion_from_diagonal(&q.diagonal(), m),
    }
}

/// Same map, expressed on a raw diagonal vector. Shared with the covariance
/// optimizer which works on unvalidated iterates.
pub(crate) fn distortion_from_diagonal(diag: &[f64], m: &ImpairmentModel) -> Vec<f64> {
    let n = diag.len() as f64;
    let mean: f64 = diag.iter().sum::<f64>() / n;
    let k2 = m.kappa * m.kappa;
    diag.iter()
        .map(|&q| (k2 * ((1.0 - m.alpha) * q + m.alpha * mean)).max(0.0))
        .collect()
}
