//! Mutual information, capacity, waterfilling, asymptotic limits, and
//! covariance optimization for the impaired channel.
//!
//! The per-realization mutual information of the impaired channel is
//!
//! ```text
//! log2 det(I + SNR H Q H^H (SNR H Y H^H + I)^-1)
//! ```
//!
//! with Y the diagonal distortion covariance. It is evaluated here as a
//! difference of two log-determinants,
//!
//! ```text
//! log2 det(I + SNR H (Q + Y) H^H) - log2 det(I + SNR H Y H^H),
//! ```
//!
//! which avoids the explicit inverse and stays well conditioned at high SNR.

use num_complex::Complex64;

use crate::channel::{sample_channel, ChannelDistribution, ChannelMatrix, RngStream};
use crate::error::{Error, Result};
use crate::impairments::{distortion_from_diagonal, Covariance, ImpairmentModel};
use crate::numerics::{self, CMat, EigenDecomposition};

/// Signal-to-noise ratio as a linear power ratio.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnrPoint {
    linear: f64,
}

impl SnrPoint {
    pub fn from_linear(linear: f64) -> Result<Self> {
        if !linear.is_finite() || linear <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "SNR must be finite and positive, got {linear}"
            )));
        }
        Ok(Self { linear })
    }

    pub fn from_db(db: f64) -> Result<Self> {
        Self::from_linear(10f64.powf(db / 10.0))
    }

    pub fn linear(&self) -> f64 {
        self.linear
    }

    pub fn db(&self) -> f64 {
        10.0 * self.linear.log10()
    }
}

fn diag_cmat(v: &[f64]) -> CMat {
    let n = v.len();
    CMat::from_fn(n, n, |i, j| {
        if i == j {
            Complex64::new(v[i], 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

/// Raw mutual-information objective on an unvalidated Hermitian transmit
/// covariance matrix. Used by the optimizer and by gradient checks; the
/// public [`mutual_information`] wraps it with validated inputs.
pub fn mi_objective(h: &CMat, q: &CMat, snr: SnrPoint, m: &ImpairmentModel) -> Result<f64> {
    let n_r = h.nrows();
    let diag: Vec<f64> = (0..q.nrows()).map(|i| q[(i, i)].re).collect();
    let ups = distortion_from_diagonal(&diag, m);
    let s = q + diag_cmat(&ups);
    let eye = CMat::identity(n_r, n_r);
    let signal = &eye + (h * s * h.adjoint()).scale(snr.linear());
    let noise = &eye + (h * diag_cmat(&ups) * h.adjoint()).scale(snr.linear());
    Ok(numerics::logdet_hpd(&signal)? - numerics::logdet_hpd(&noise)?)
}

/// Per-realization mutual information in bits per channel use.
pub fn mutual_information(
    h: &ChannelMatrix,
    q: &Covariance,
    snr: SnrPoint,
    m: &ImpairmentModel,
) -> Result<f64> {
    if q.dim() != h.n_t() {
        return Err(Error::InvalidArgument(format!(
            "covariance is {}x{} but the channel has {} transmit antennas",
            q.dim(),
            q.dim(),
            h.n_t()
        )));
    }
    Ok(mi_objective(h.matrix(), q.matrix(), snr, m)?.max(0.0))
}

/// Value and gradient of [`mi_objective`] with respect to the Hermitian
/// transmit covariance.
///
/// The distortion covariance depends linearly on diag(Q), which contributes
/// the diagonal and trace terms below on top of the usual log-det derivative.
pub fn mi_gradient(
    h: &CMat,
    q: &CMat,
    snr: SnrPoint,
    m: &ImpairmentModel,
) -> Result<(f64, CMat)> {
    let n_r = h.nrows();
    let n_t = h.ncols();
    let diag: Vec<f64> = (0..n_t).map(|i| q[(i, i)].re).collect();
    let ups = distortion_from_diagonal(&diag, m);
    let eye = CMat::identity(n_r, n_r);
    let noise = &eye + (h * diag_cmat(&ups) * h.adjoint()).scale(snr.linear());
    let signal = &noise + (h * q * h.adjoint()).scale(snr.linear());

    let value = numerics::logdet_hpd(&signal)? - numerics::logdet_hpd(&noise)?;

    let inv_signal = signal
        .try_inverse()
        .ok_or(Error::NotPositiveDefinite { pivot: 0, value: f64::NAN })?;
    let inv_noise = noise
        .try_inverse()
        .ok_or(Error::NotPositiveDefinite { pivot: 0, value: f64::NAN })?;
    let m_a = h.adjoint() * inv_signal * h;
    let m_b = h.adjoint() * inv_noise * h;

    // d upsilon_n = kappa^2 ((1 - alpha) dq_nn + alpha tr(dQ) / N_t)
    let k2 = m.kappa() * m.kappa();
    let chain = |mat: &CMat| -> CMat {
        let tr: f64 = (0..n_t).map(|i| mat[(i, i)].re).sum();
        let mut out = CMat::zeros(n_t, n_t);
        for i in 0..n_t {
            out[(i, i)] = Complex64::new(
                k2 * (1.0 - m.alpha()) * mat[(i, i)].re + k2 * m.alpha() * tr / n_t as f64,
                0.0,
            );
        }
        out
    };
    let scale = snr.linear() / std::f64::consts::LN_2;
    let grad = (&m_a + chain(&m_a) - chain(&m_b)).scale(scale);
    Ok((value, numerics::symmetrize(&grad)))
}

/// High-SNR capacity bounds; both scale with M = min(N_t, N_r) and collapse
/// to a single value when N_t <= N_r.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CapacityLimits {
    pub lower: f64,
    pub upper: f64,
    pub m: usize,
}

/// Asymptotic (SNR -> infinity) capacity bounds in bits:
///
/// lower = M log2(1 + 1/kappa^2), upper = M log2(1 + N_t / (M kappa^2)).
pub fn capacity_limits(n_t: usize, n_r: usize, m: &ImpairmentModel) -> Result<CapacityLimits> {
    if n_t == 0 || n_r == 0 {
        return Err(Error::InvalidArgument("antenna counts must be >= 1".into()));
    }
    if m.kappa() == 0.0 {
        return Err(Error::UnboundedCapacity);
    }
    let mm = n_t.min(n_r);
    let k2 = m.kappa() * m.kappa();
    Ok(CapacityLimits {
        lower: mm as f64 * (1.0 + 1.0 / k2).log2(),
        upper: mm as f64 * (1.0 + n_t as f64 / (mm as f64 * k2)).log2(),
        m: mm,
    })
}

/// Waterfilling power allocation over a set of effective stream gains.
#[derive(Debug, Clone, PartialEq)]
pub struct WaterfillAllocation {
    pub d: Vec<f64>,
    pub water_level: f64,
}

/// Exact KKT waterfilling: d_i = [mu - 1/c_i]_+ with mu chosen so that
/// sum d_i equals the budget. Solved by sorting the gains and scanning the
/// active set; equal gains receive identical allocations.
pub fn waterfill(effective_gains: &[f64], budget: f64) -> Result<WaterfillAllocation> {
    if effective_gains.is_empty() {
        return Err(Error::InvalidArgument("waterfill needs at least one gain".into()));
    }
    if effective_gains.iter().any(|&c| !c.is_finite() || c <= 0.0) {
        return Err(Error::InvalidArgument("waterfill gains must be finite and positive".into()));
    }
    if !budget.is_finite() || budget <= 0.0 {
        return Err(Error::InvalidArgument(format!("budget must be positive, got {budget}")));
    }
    let mut inv: Vec<f64> = effective_gains.iter().map(|&c| 1.0 / c).collect();
    inv.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut mu = 0.0;
    let mut prefix = 0.0;
    for (k, &v) in inv.iter().enumerate() {
        prefix += v;
        let candidate = (budget + prefix) / (k + 1) as f64;
        if candidate > v {
            mu = candidate;
        }
    }
    let d: Vec<f64> = effective_gains.iter().map(|&c| (mu - 1.0 / c).max(0.0)).collect();
    Ok(WaterfillAllocation { d, water_level: mu })
}

/// Compact eigendecomposition of H^H H: the M = min(N_t, N_r) largest
/// eigenpairs, eigenvalues descending.
pub fn compact_gram_eig(h: &ChannelMatrix) -> Result<EigenDecomposition> {
    let gram = h.matrix().adjoint() * h.matrix();
    Ok(numerics::herm_eig(&gram)?.truncate(h.rank()))
}

/// Capacity of a known deterministic channel with isotropic distortion
/// (alpha = 1, or ideal hardware), together with the optimal covariance.
///
/// The distortion covariance is (kappa^2 / N_t) I independently of Q, so the
/// problem reduces to waterfilling over the effective gains
/// c_i = SNR lambda_i / (SNR lambda_i kappa^2 / N_t + 1).
pub fn deterministic_capacity(
    h: &ChannelMatrix,
    snr: SnrPoint,
    m: &ImpairmentModel,
) -> Result<(f64, Covariance)> {
    if m.alpha() != 1.0 && m.kappa() > 0.0 {
        return Err(Error::UnsupportedConfiguration(format!(
            "the closed-form deterministic capacity requires alpha = 1 (got alpha = {}); \
             use optimize_covariance for alpha < 1",
            m.alpha()
        )));
    }
    let eig = compact_gram_eig(h)?;
    let n_t = h.n_t() as f64;
    let k2 = m.kappa() * m.kappa();
    let gains: Vec<f64> = eig
        .eigenvalues
        .iter()
        .map(|&lam| snr.linear() * lam / (snr.linear() * lam * k2 / n_t + 1.0))
        .collect();
    let alloc = waterfill(&gains, 1.0)?;
    let bits: f64 = gains
        .iter()
        .zip(alloc.d.iter())
        .map(|(&c, &d)| (1.0 + c * d).log2())
        .sum();
    let q = EigenDecomposition {
        eigenvalues: alloc.d.clone(),
        eigenvectors: eig.eigenvectors,
    }
    .reconstruct();
    Ok((bits, Covariance::new_unchecked(numerics::symmetrize(&q))))
}

/// Monte Carlo configuration. Results are a pure function of
/// `(trials, master_seed)`; `max_parallelism` only changes the wall time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MonteCarloConfig {
    pub trials: usize,
    pub master_seed: u64,
    pub max_parallelism: usize,
}

impl MonteCarloConfig {
    pub fn new(trials: usize, master_seed: u64, max_parallelism: usize) -> Result<Self> {
        if trials == 0 {
            return Err(Error::InvalidArgument("trials must be >= 1".into()));
        }
        Ok(Self {
            trials,
            master_seed,
            max_parallelism: max_parallelism.max(1),
        })
    }
}

/// Runs `trials` independent trial closures, trial `i` on stream index `i`,
/// split across at most `max_parallelism` threads. The returned vector is in
/// ascending trial order regardless of scheduling.
pub fn run_trials<F>(trials: usize, max_parallelism: usize, f: F) -> Result<Vec<f64>>
where
    F: Fn(usize) -> Result<f64> + Sync,
{
    let mut values = vec![0.0f64; trials];
    let workers = max_parallelism.max(1).min(trials.max(1));
    if workers <= 1 {
        for (i, v) in values.iter_mut().enumerate() {
            *v = f(i)?;
        }
        return Ok(values);
    }
    let chunk = trials.div_ceil(workers);
    std::thread::scope(|scope| -> Result<()> {
        let mut handles = Vec::new();
        for (w, slice) in values.chunks_mut(chunk).enumerate() {
            let f = &f;
            handles.push(scope.spawn(move || -> Result<()> {
                for (j, v) in slice.iter_mut().enumerate() {
                    *v = f(w * chunk + j)?;
                }
                Ok(())
            }));
        }
        for handle in handles {
            handle.join().expect("trial worker panicked")?;
        }
        Ok(())
    })?;
    Ok(values)
}

/// Sample mean and standard error with fixed-order pairwise summation, so the
/// result is bit-identical for any thread count.
pub fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    assert!(n >= 1);
    let mean = numerics::pairwise_sum(values) / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let sq: Vec<f64> = values.iter().map(|&x| (x - mean) * (x - mean)).collect();
    let var = numerics::pairwise_sum(&sq) / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErgodicEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub trials: usize,
}

/// Ergodic capacity with the isotropic covariance Q = I / N_t, the optimal
/// choice for right-rotationally invariant distributions at any SNR and alpha.
///
/// Deterministic distributions collapse to a single exact evaluation.
pub fn ergodic_capacity_isotropic(
    dist: &ChannelDistribution,
    snr: SnrPoint,
    m: &ImpairmentModel,
    mc: &MonteCarloConfig,
) -> Result<ErgodicEstimate> {
    let q = Covariance::isotropic(dist.n_t());
    let trials = if dist.is_deterministic() { 1 } else { mc.trials };
    let values = run_trials(trials, mc.max_parallelism, |i| {
        let h = sample_channel(dist, RngStream::new(mc.master_seed, i as u64))?;
        mutual_information(&h, &q, snr, m)
    })?;
    let (mean, std_error) = mean_and_stderr(&values);
    Ok(ErgodicEstimate { mean, std_error, trials })
}

/// Infinite-SNR mutual information of a full-rank realization.
///
/// Builds the projection onto the column space of Y^(1/2) U_M, where U_M
/// spans the compact eigenspace of H^H H, and sums log2(1 + mu_i) over the M
/// strongest eigenvalues of the projected, distortion-whitened covariance.
///
/// All distortion variances must be strictly positive; with alpha = 0 a zero
/// diagonal entry of Q must be floored by the caller
/// (see [`Covariance::with_diagonal_floor`]).
pub fn asymptotic_mi(h: &ChannelMatrix, q: &Covariance, m: &ImpairmentModel) -> Result<f64> {
    if m.kappa() == 0.0 {
        return Err(Error::UnboundedCapacity);
    }
    let ups = distortion_from_diagonal(&q.diagonal(), m);
    if let Some(idx) = ups.iter().position(|&u| u <= 0.0) {
        return Err(Error::SingularDistortion { index: idx });
    }
    let eig = compact_gram_eig(h)?;
    let u = &eig.eigenvectors; // N_t x M
    let sqrt_ups = diag_cmat(&ups.iter().map(|&v| v.sqrt()).collect::<Vec<_>>());
    let inv_sqrt_ups = diag_cmat(&ups.iter().map(|&v| 1.0 / v.sqrt()).collect::<Vec<_>>());
    let b = &sqrt_ups * u;
    let mid = (b.adjoint() * &b)
        .try_inverse()
        .ok_or(Error::EigenNonConvergence { dim: u.ncols() })?;
    let proj = &b * mid * b.adjoint();
    let whitened = &inv_sqrt_ups * q.matrix() * &inv_sqrt_ups;
    // Nonzero eigenvalues of (whitened * proj) equal those of the Hermitian
    // matrix proj * whitened * proj.
    let sym = numerics::symmetrize(&(&proj * whitened * &proj));
    let mu = numerics::herm_eig(&sym)?;
    Ok(mu
        .eigenvalues
        .iter()
        .take(h.rank())
        .map(|&v| (1.0 + v.max(0.0)).log2())
        .sum())
}

/// Outcome of the numerical covariance search.
#[derive(Debug, Clone)]
pub struct OptimizeOutcome {
    pub bits: f64,
    pub covariance: Covariance,
    /// False when the iteration cap was hit before the objective stalled; the
    /// best iterate is still returned.
    pub converged: bool,
}

const PGA_MAX_ITERS: usize = 2000;
const PGA_TOL_BITS: f64 = 1e-9;
const ARMIJO_C: f64 = 1e-4;

fn frobenius_inner(a: &CMat, b: &CMat) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x.conj() * y).re).sum()
}

fn projected_gradient_ascent(
    h: &CMat,
    start: &CMat,
    snr: SnrPoint,
    m: &ImpairmentModel,
) -> Result<(f64, CMat, bool)> {
    let mut q = start.clone();
    let (mut value, mut grad) = mi_gradient(h, &q, snr, m)?;
    let mut converged = false;
    for _ in 0..PGA_MAX_ITERS {
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let trial = numerics::project_psd_unit_trace(&(&q + grad.scale(step)))?;
            let direction = trial.matrix() - &q;
            let predicted = frobenius_inner(&grad, &direction);
            if predicted <= 0.0 {
                break; // projected step no longer ascends; stationary point
            }
            let trial_value = mi_objective(h, trial.matrix(), snr, m)?;
            if trial_value >= value + ARMIJO_C * predicted {
                accepted = Some((trial, trial_value));
                break;
            }
            step *= 0.5;
        }
        match accepted {
            Some((trial, trial_value)) => {
                let improved = trial_value - value;
                q = trial.matrix().clone();
                value = trial_value;
                if improved < PGA_TOL_BITS {
                    converged = true;
                    break;
                }
                let (_, g) = mi_gradient(h, &q, snr, m)?;
                grad = g;
            }
            None => {
                converged = true;
                break;
            }
        }
    }
    Ok((value, q, converged))
}

/// Numerically maximizes the mutual information of a known deterministic
/// channel over the Hermitian PSD unit-trace set.
///
/// Projected-gradient ascent with Armijo backtracking from two starts: the
/// isotropic covariance and the alpha = 1 waterfilling covariance. The result
/// is never below either baseline. For alpha = 1 the problem is concave and
/// the search reproduces the closed form; for alpha < 1 it is a heuristic with
/// a guaranteed floor.
pub fn optimize_covariance(
    h: &ChannelMatrix,
    snr: SnrPoint,
    m: &ImpairmentModel,
) -> Result<OptimizeOutcome> {
    let n_t = h.n_t();
    if n_t == 1 {
        // The feasible set is the single point Q = 1.
        let q = Covariance::isotropic(1);
        let bits = mutual_information(h, &q, snr, m)?;
        return Ok(OptimizeOutcome { bits, covariance: q, converged: true });
    }
    let iso = Covariance::isotropic(n_t);
    let wf_model = ImpairmentModel::new(m.kappa(), 1.0).expect("kappa already validated");
    let (_, wf_q) = deterministic_capacity(h, snr, &wf_model)?;

    let mut best: Option<(f64, CMat, bool)> = None;
    for start in [iso.matrix(), wf_q.matrix()] {
        let candidate = projected_gradient_ascent(h.matrix(), start, snr, m)?;
        if best.as_ref().map_or(true, |b| candidate.0 > b.0) {
            best = Some(candidate);
        }
    }
    let (bits, q, converged) = best.unwrap();
    Ok(OptimizeOutcome {
        bits: bits.max(0.0),
        covariance: Covariance::new_unchecked(numerics::symmetrize(&q)),
        converged,
    })
}
