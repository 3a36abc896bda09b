//! Finite-SNR multiplexing gain: the ratio of MIMO to SISO capacity at a
//! given SNR, and its low- and high-SNR bounds.

use crate::capacity::{
    deterministic_capacity, ergodic_capacity_isotropic, mean_and_stderr, run_trials,
    MonteCarloConfig, SnrPoint,
};
use crate::channel::{siso_reference, ChannelDistribution, RngStream};
use crate::error::{Error, Result};
use crate::impairments::ImpairmentModel;
use crate::{channel, numerics};

/// Asymptotic bounds on the finite-SNR multiplexing gain.
///
/// The low-SNR pair involves the channel's Frobenius and spectral norms; the
/// high-SNR pair is M and the ratio of the two capacity limits. The high-SNR
/// upper bound collapses to M when N_t <= N_r.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MuxGainBounds {
    pub low_snr_lower: f64,
    pub low_snr_upper: f64,
    pub high_snr_lower: f64,
    pub high_snr_upper: f64,
    pub m: usize,
}

/// Classic multiplexing gain lim C(SNR)/log2(SNR) under impairments: exactly
/// zero, because the capacity itself is bounded.
pub fn classic_multiplexing_gain(m: &ImpairmentModel) -> Result<f64> {
    if m.kappa() == 0.0 {
        return Err(Error::UnboundedCapacity);
    }
    Ok(0.0)
}

/// Capacity of the scalar (1x1) impaired channel with gain |h|^2. With a
/// single antenna both distortion terms coincide, so alpha drops out.
pub fn siso_capacity(gain: f64, snr: SnrPoint, m: &ImpairmentModel) -> f64 {
    let k2 = m.kappa() * m.kappa();
    let s = snr.linear() * gain;
    (1.0 + s / (s * k2 + 1.0)).log2()
}

/// Finite-SNR multiplexing gain with its Monte Carlo standard error.
///
/// Deterministic distributions: waterfilling capacity over the fixed
/// unit-gain SISO reference, both exact (stderr 0). Rayleigh: ergodic
/// isotropic capacity over the ergodic SISO capacity, each estimated with the
/// seeded-stream discipline of [`MonteCarloConfig`].
pub fn finite_snr_mux_gain_detailed(
    dist: &ChannelDistribution,
    snr: SnrPoint,
    m: &ImpairmentModel,
    mc: &MonteCarloConfig,
) -> Result<(f64, f64)> {
    let (num, num_se, den, den_se) = match dist {
        ChannelDistribution::Deterministic(h) => {
            let (bits, _) = deterministic_capacity(h, snr, m)?;
            (bits, 0.0, siso_capacity(1.0, snr, m), 0.0)
        }
        ChannelDistribution::IidRayleigh { .. } => {
            let est = ergodic_capacity_isotropic(dist, snr, m, mc)?;
            let siso_dist = ChannelDistribution::iid_rayleigh(1, 1)?;
            let values = run_trials(mc.trials, mc.max_parallelism, |i| {
                let h = siso_reference(&siso_dist, RngStream::new(mc.master_seed, i as u64));
                Ok(siso_capacity(h.norm_sqr(), snr, m))
            })?;
            let (den, den_se) = mean_and_stderr(&values);
            (est.mean, est.std_error, den, den_se)
        }
    };
    if den < 1e-15 {
        return Err(Error::DegenerateRatio { denominator: den });
    }
    let ratio = num / den;
    let stderr = if num_se == 0.0 && den_se == 0.0 {
        0.0
    } else {
        ratio * ((num_se / num).powi(2) + (den_se / den).powi(2)).sqrt()
    };
    Ok((ratio, stderr))
}

/// Finite-SNR multiplexing gain C_{N_t,N_r}(SNR) / C_{1,1}(SNR).
pub fn finite_snr_mux_gain(
    dist: &ChannelDistribution,
    snr: SnrPoint,
    m: &ImpairmentModel,
    mc: &MonteCarloConfig,
) -> Result<f64> {
    finite_snr_mux_gain_detailed(dist, snr, m, mc).map(|(v, _)| v)
}

/// Asymptotic bounds of the finite-SNR multiplexing gain.
///
/// Low-SNR pair: (E||H||_F^2 / (N_t E|h|^2), E||H||_2^2 / E|h|^2), with
/// expectations exact for deterministic channels and closed-form where exact
/// for Rayleigh (E||H||_F^2 = N_t N_r, E|h|^2 = 1), Monte Carlo otherwise.
/// High-SNR pair: (M, M log2(1 + N_t/(M kappa^2)) / log2(1 + 1/kappa^2)),
/// which requires kappa > 0.
pub fn mux_gain_bounds(
    dist: &ChannelDistribution,
    m: &ImpairmentModel,
    mc: &MonteCarloConfig,
) -> Result<MuxGainBounds> {
    let n_t = dist.n_t() as f64;
    let (e_frob, e_spec, e_siso) = match dist {
        ChannelDistribution::Deterministic(h) => (
            channel::frobenius_norm_sq(h),
            numerics::spectral_norm_sq(h.matrix()),
            1.0,
        ),
        ChannelDistribution::IidRayleigh { n_t, n_r } => {
            let spec_samples = run_trials(mc.trials, mc.max_parallelism, |i| {
                let h = channel::sample_channel(dist, RngStream::new(mc.master_seed, i as u64))?;
                Ok(numerics::spectral_norm_sq(h.matrix()))
            })?;
            let (e_spec, _) = mean_and_stderr(&spec_samples);
            ((n_t * n_r) as f64, e_spec, 1.0)
        }
    };
    if m.kappa() == 0.0 {
        return Err(Error::UnboundedCapacity);
    }
    let mm = dist.n_t().min(dist.n_r());
    let k2 = m.kappa() * m.kappa();
    Ok(MuxGainBounds {
        low_snr_lower: e_frob / (n_t * e_siso),
        low_snr_upper: e_spec / e_siso,
        high_snr_lower: mm as f64,
        high_snr_upper: mm as f64 * (1.0 + n_t / (mm as f64 * k2)).log2()
            / (1.0 + 1.0 / k2).log2(),
        m: mm,
    })
}
