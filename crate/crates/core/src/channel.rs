//! Channel realizations and distributions: deterministic matrices, i.i.d.
//! Rayleigh sampling, SISO references, and normalization checks.

use std::f64::consts::FRAC_1_SQRT_2;
use std::path::Path;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::numerics::{self, CMat};

/// Relative tolerance below which a compact eigenvalue of H^H H counts as zero.
pub const RANK_TOL: f64 = 1e-12;

/// Immutable token identifying one reproducible random stream.
///
/// Streams are counter-based: trial `i` always uses `(master_seed, i)` no
/// matter which thread consumes it, so parallel runs are bit-reproducible.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngStream {
    pub master_seed: u64,
    pub stream_index: u64,
}

impl RngStream {
    pub fn new(master_seed: u64, stream_index: u64) -> Self {
        Self { master_seed, stream_index }
    }

    /// Fresh generator positioned at the start of this stream.
    pub fn rng(&self) -> ChaCha12Rng {
        let mut rng = ChaCha12Rng::seed_from_u64(self.master_seed);
        rng.set_stream(self.stream_index);
        rng
    }
}

/// One circular-symmetric complex Gaussian CN(0, 1) draw.
fn sample_cn01(rng: &mut impl Rng) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re * FRAC_1_SQRT_2, im * FRAC_1_SQRT_2)
}

/// Full-rank N_r x N_t channel realization.
#[derive(Debug, Clone)]
pub struct ChannelMatrix {
    h: CMat,
}

impl ChannelMatrix {
    /// Validates the full-rank invariant: the smallest compact eigenvalue of
    /// H^H H must exceed `RANK_TOL` times the largest.
    pub fn new(h: CMat) -> Result<Self> {
        if h.nrows() == 0 || h.ncols() == 0 {
            return Err(Error::InvalidArgument("channel matrix must be non-empty".into()));
        }
        if !is_full_rank(&h) {
            return Err(Error::InvalidArgument(format!(
                "channel matrix {}x{} is rank deficient",
                h.nrows(),
                h.ncols()
            )));
        }
        Ok(Self { h })
    }

    pub fn matrix(&self) -> &CMat {
        &self.h
    }

    pub fn n_r(&self) -> usize {
        self.h.nrows()
    }

    pub fn n_t(&self) -> usize {
        self.h.ncols()
    }

    /// min(N_t, N_r), the number of non-zero compact eigenvalues.
    pub fn rank(&self) -> usize {
        self.n_t().min(self.n_r())
    }
}

fn is_full_rank(h: &CMat) -> bool {
    let gram = if h.nrows() <= h.ncols() {
        h * h.adjoint()
    } else {
        h.adjoint() * h
    };
    match numerics::herm_eig(&gram) {
        Ok(eig) => {
            let largest = eig.eigenvalues[0];
            let smallest = *eig.eigenvalues.last().unwrap();
            largest > 0.0 && smallest > RANK_TOL * largest
        }
        Err(_) => false,
    }
}

/// Channel distribution the transmitter adapts to.
#[derive(Debug, Clone)]
pub enum ChannelDistribution {
    /// A single known realization.
    Deterministic(ChannelMatrix),
    /// Independent CN(0, 1) entries; E{tr(H^H H)} = N_t * N_r.
    IidRayleigh { n_t: usize, n_r: usize },
}

impl ChannelDistribution {
    pub fn iid_rayleigh(n_t: usize, n_r: usize) -> Result<Self> {
        if n_t == 0 || n_r == 0 {
            return Err(Error::InvalidArgument("antenna counts must be >= 1".into()));
        }
        Ok(Self::IidRayleigh { n_t, n_r })
    }

    pub fn n_t(&self) -> usize {
        match self {
            Self::Deterministic(h) => h.n_t(),
            Self::IidRayleigh { n_t, .. } => *n_t,
        }
    }

    pub fn n_r(&self) -> usize {
        match self {
            Self::Deterministic(h) => h.n_r(),
            Self::IidRayleigh { n_r, .. } => *n_r,
        }
    }

    pub fn is_deterministic(&self) -> bool {
        matches!(self, Self::Deterministic(_))
    }
}

const MAX_RESAMPLES: usize = 3;

/// Draws one realization from the distribution using the given stream.
///
/// Deterministic distributions return the stored matrix unchanged. Rayleigh
/// draws are resampled up to three times if a draw fails the full-rank check
/// (probability zero in exact arithmetic).
pub fn sample_channel(dist: &ChannelDistribution, stream: RngStream) -> Result<ChannelMatrix> {
    match dist {
        ChannelDistribution::Deterministic(h) => Ok(h.clone()),
        ChannelDistribution::IidRayleigh { n_t, n_r } => {
            let mut rng = stream.rng();
            for _ in 0..=MAX_RESAMPLES {
                let h = CMat::from_fn(*n_r, *n_t, |_, _| sample_cn01(&mut rng));
                if let Ok(ch) = ChannelMatrix::new(h) {
                    return Ok(ch);
                }
            }
            Err(Error::DegenerateDistribution { attempts: MAX_RESAMPLES + 1 })
        }
    }
}

/// SISO reference channel h for the multiplexing-gain ratio.
///
/// For Rayleigh, h ~ CN(0, 1); for deterministic distributions the reference
/// is the fixed unit-gain scalar h = 1, matching the per-entry normalization
/// of the MIMO channel.
pub fn siso_reference(dist: &ChannelDistribution, stream: RngStream) -> Complex64 {
    match dist {
        ChannelDistribution::Deterministic(_) => Complex64::new(1.0, 0.0),
        ChannelDistribution::IidRayleigh { .. } => sample_cn01(&mut stream.rng()),
    }
}

/// Sum of |h_ij|^2, equal to tr(H^H H).
pub fn frobenius_norm_sq(h: &ChannelMatrix) -> f64 {
    h.matrix().iter().map(|z| z.norm_sqr()).sum()
}

/// Loads a deterministic channel matrix from CSV.
///
/// Each of the N_r rows holds 2 * N_t values, alternating real and imaginary
/// parts, '.' as the decimal separator.
pub fn load_channel_csv(path: &Path) -> Result<ChannelMatrix> {
    let text = std::fs::read_to_string(path)?;
    let mut rows: Vec<Vec<Complex64>> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() % 2 != 0 {
            return Err(Error::InvalidArgument(format!(
                "{}:{}: expected an even number of columns (re/im pairs), got {}",
                path.display(),
                lineno + 1,
                fields.len()
            )));
        }
        let mut row = Vec::with_capacity(fields.len() / 2);
        for pair in fields.chunks(2) {
            let parse = |s: &str| -> Result<f64> {
                s.parse::<f64>().map_err(|_| {
                    Error::InvalidArgument(format!(
                        "{}:{}: '{}' is not a number",
                        path.display(),
                        lineno + 1,
                        s
                    ))
                })
            };
            row.push(Complex64::new(parse(pair[0])?, parse(pair[1])?));
        }
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(Error::InvalidArgument(format!(
                    "{}:{}: inconsistent column count",
                    path.display(),
                    lineno + 1
                )));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::InvalidArgument(format!("{}: empty channel file", path.display())));
    }
    let n_r = rows.len();
    let n_t = rows[0].len();
    let flat: Vec<Complex64> = rows.into_iter().flatten().collect();
    ChannelMatrix::new(CMat::from_row_slice(n_r, n_t, &flat))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn deterministic_pass_through() {
        let h = ChannelMatrix::new(CMat::identity(4, 4)).unwrap();
        let dist = ChannelDistribution::Deterministic(h.clone());
        let out = sample_channel(&dist, RngStream::new(1, 0)).unwrap();
        assert_eq!(out.matrix(), h.matrix());
    }

    #[test]
    fn seeded_draws_are_reproducible() {
        let dist = ChannelDistribution::iid_rayleigh(4, 4).unwrap();
        let a = sample_channel(&dist, RngStream::new(42, 3)).unwrap();
        let b = sample_channel(&dist, RngStream::new(42, 3)).unwrap();
        assert_eq!(a.matrix(), b.matrix());
        let c = sample_channel(&dist, RngStream::new(42, 4)).unwrap();
        assert_ne!(a.matrix(), c.matrix());
    }

    #[test]
    fn rayleigh_normalization() {
        let dist = ChannelDistribution::iid_rayleigh(4, 4).unwrap();
        let n = 100_000usize;
        let mean: f64 = (0..n)
            .map(|i| {
                frobenius_norm_sq(&sample_channel(&dist, RngStream::new(7, i as u64)).unwrap())
            })
            .sum::<f64>()
            / n as f64;
        assert!((mean - 16.0).abs() < 0.2, "mean tr(H^H H) = {mean}");
    }

    #[test]
    fn siso_reference_conventions() {
        let det = ChannelDistribution::Deterministic(
            ChannelMatrix::new(CMat::identity(2, 2)).unwrap(),
        );
        let h = siso_reference(&det, RngStream::new(1, 0));
        assert_abs_diff_eq!(h.norm_sqr(), 1.0, epsilon = 1e-15);

        let ray = ChannelDistribution::iid_rayleigh(1, 1).unwrap();
        let a = siso_reference(&ray, RngStream::new(9, 5));
        let b = siso_reference(&ray, RngStream::new(9, 5));
        assert_eq!(a, b);
        let n = 100_000usize;
        let mean: f64 = (0..n)
            .map(|i| siso_reference(&ray, RngStream::new(9, i as u64)).norm_sqr())
            .sum::<f64>()
            / n as f64;
        assert!((mean - 1.0).abs() < 0.02, "mean |h|^2 = {mean}");
    }

    #[test]
    fn frobenius_examples() {
        let id = ChannelMatrix::new(CMat::identity(4, 4)).unwrap();
        assert_abs_diff_eq!(frobenius_norm_sq(&id), 4.0, epsilon = 1e-15);
        let dist = ChannelDistribution::iid_rayleigh(3, 5).unwrap();
        let h = sample_channel(&dist, RngStream::new(11, 0)).unwrap();
        let gram = h.matrix().adjoint() * h.matrix();
        let trace: f64 = (0..gram.nrows()).map(|i| gram[(i, i)].re).sum();
        assert_abs_diff_eq!(frobenius_norm_sq(&h), trace, epsilon = 1e-12);
    }

    #[test]
    fn rank_deficient_rejected() {
        let mut m = CMat::zeros(2, 2);
        m[(0, 0)] = Complex64::new(1.0, 0.0);
        assert!(ChannelMatrix::new(m).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let dir = std::env::temp_dir();
        let path = dir.join("mimo_capacity_channel_test.csv");
        std::fs::write(&path, "1.0, 0.0, 0.5, -0.25\n0.0, 1.0, 2.0, 0.0\n").unwrap();
        let h = load_channel_csv(&path).unwrap();
        assert_eq!((h.n_r(), h.n_t()), (2, 2));
        assert_eq!(h.matrix()[(0, 1)], Complex64::new(0.5, -0.25));
        std::fs::write(&path, "1.0, 0.0, oops, 0.0\n").unwrap();
        let err = load_channel_csv(&path).unwrap_err();
        assert!(err.to_string().contains(":1:"), "{err}");
        std::fs::remove_file(&path).ok();
    }
}
