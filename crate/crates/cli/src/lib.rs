//! Experiment harness: SNR sweeps, figure-style scenarios, configuration and
//! CSV output on top of the `mimo-capacity` library.
//!
//! The CSV artifact is self-describing: a comment block (lines starting with
//! '#') records the tool version and the full effective configuration, then a
//! `series,snr_db,value,stderr` header row, values with 6 significant digits.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use mimo_capacity::capacity::{
    capacity_limits, deterministic_capacity, ergodic_capacity_isotropic, mean_and_stderr,
    optimize_covariance, run_trials, MonteCarloConfig, SnrPoint,
};
use mimo_capacity::channel::{
    load_channel_csv, sample_channel, siso_reference, ChannelDistribution, ChannelMatrix,
    RngStream,
};
use mimo_capacity::impairments::ImpairmentModel;
use mimo_capacity::muxgain::{mux_gain_bounds, siso_capacity};
use mimo_capacity::numerics::CMat;
use num_complex::Complex64;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Environment variable consulted for the default worker count when
/// `--threads` is absent.
pub const THREADS_ENV: &str = "MIMOCAP_THREADS";

/// CLI-level error split by exit code: usage/config problems exit with 2,
/// runtime/numerical problems with 3.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(msg) => write!(f, "{msg}"),
            CliError::Runtime(msg) => write!(f, "{msg}"),
        }
    }
}

impl std::error::Error for CliError {}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }
}

impl From<mimo_capacity::Error> for CliError {
    fn from(e: mimo_capacity::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Figure-reproduction scenarios plus a free-form custom sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    Fig2,
    Fig3,
    Fig4,
    Fig5,
    Custom,
}

impl Scenario {
    pub fn as_str(&self) -> &'static str {
        match self {
            Scenario::Fig2 => "fig2",
            Scenario::Fig3 => "fig3",
            Scenario::Fig4 => "fig4",
            Scenario::Fig5 => "fig5",
            Scenario::Custom => "custom",
        }
    }

    fn default_grid(&self) -> (f64, f64, f64) {
        match self {
            Scenario::Fig2 | Scenario::Fig3 | Scenario::Custom => (-10.0, 70.0, 2.0),
            Scenario::Fig4 | Scenario::Fig5 => (-40.0, 80.0, 2.0),
        }
    }

    fn default_trials(&self) -> usize {
        match self {
            Scenario::Fig2 => 1000,
            Scenario::Fig3 => 100,
            Scenario::Fig4 | Scenario::Fig5 => 1000,
            Scenario::Custom => 1000,
        }
    }
}

impl FromStr for Scenario {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "fig2" => Ok(Scenario::Fig2),
            "fig3" => Ok(Scenario::Fig3),
            "fig4" => Ok(Scenario::Fig4),
            "fig5" => Ok(Scenario::Fig5),
            "custom" => Ok(Scenario::Custom),
            other => Err(format!(
                "unknown scenario '{other}' (expected fig2, fig3, fig4, fig5 or custom)"
            )),
        }
    }
}

/// Fully resolved sweep description; every field has a concrete value.
#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub scenario: Scenario,
    pub n_t: usize,
    pub n_r: usize,
    pub kappa: Option<f64>,
    pub alpha: f64,
    pub snr_db_start: f64,
    pub snr_db_stop: f64,
    pub snr_db_step: f64,
    pub trials: usize,
    pub seed: u64,
    pub threads: usize,
    pub output_path: PathBuf,
    pub channel_csv: Option<PathBuf>,
    /// Draw the SISO reference per realization instead of the fixed unit gain
    /// (deterministic mux-gain scenarios only).
    pub siso_random: bool,
    /// Report mean(MIMO)/mean(SISO) instead of the mean of per-realization
    /// ratios (deterministic mux-gain scenarios only).
    pub ratio_of_means: bool,
}

/// Optional values collected from a config file and/or flags; merged into a
/// [`SweepSpec`] by [`resolve_spec`].
#[derive(Debug, Clone, Default)]
pub struct PartialSpec {
    pub scenario: Option<Scenario>,
    pub n_t: Option<usize>,
    pub n_r: Option<usize>,
    pub kappa: Option<f64>,
    pub alpha: Option<f64>,
    pub snr_db_start: Option<f64>,
    pub snr_db_stop: Option<f64>,
    pub snr_db_step: Option<f64>,
    pub trials: Option<usize>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub output_path: Option<PathBuf>,
    pub channel_csv: Option<PathBuf>,
    pub siso_random: Option<bool>,
    pub ratio_of_means: Option<bool>,
}

impl PartialSpec {
    /// Layer `other` (higher precedence, e.g. command-line flags) on top.
    pub fn overridden_by(self, other: PartialSpec) -> PartialSpec {
        PartialSpec {
            scenario: other.scenario.or(self.scenario),
            n_t: other.n_t.or(self.n_t),
            n_r: other.n_r.or(self.n_r),
            kappa: other.kappa.or(self.kappa),
            alpha: other.alpha.or(self.alpha),
            snr_db_start: other.snr_db_start.or(self.snr_db_start),
            snr_db_stop: other.snr_db_stop.or(self.snr_db_stop),
            snr_db_step: other.snr_db_step.or(self.snr_db_step),
            trials: other.trials.or(self.trials),
            seed: other.seed.or(self.seed),
            threads: other.threads.or(self.threads),
            output_path: other.output_path.or(self.output_path),
            channel_csv: other.channel_csv.or(self.channel_csv),
            siso_random: other.siso_random.or(self.siso_random),
            ratio_of_means: other.ratio_of_means.or(self.ratio_of_means),
        }
    }
}

const CONFIG_KEYS: &[&str] = &[
    "scenario",
    "nt",
    "nr",
    "kappa",
    "alpha",
    "snr_db_start",
    "snr_db_stop",
    "snr_db_step",
    "trials",
    "seed",
    "threads",
    "out",
    "channel_csv",
    "siso_random",
    "ratio_of_means",
];

/// Parses a `key=value` config file ('#' starts a comment line).
pub fn load_config(path: &Path) -> CliResult<PartialSpec> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    let mut spec = PartialSpec::default();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            CliError::Usage(format!(
                "{}:{}: expected key=value, got '{line}'",
                path.display(),
                lineno + 1
            ))
        })?;
        let key = key.trim();
        let value = value.trim();
        let bad_value = |kind: &str| {
            CliError::Usage(format!(
                "{}:{}: value '{value}' for key '{key}' is not a valid {kind}",
                path.display(),
                lineno + 1
            ))
        };
        match key {
            "scenario" => {
                spec.scenario = Some(value.parse().map_err(|_| bad_value("scenario"))?)
            }
            "nt" => spec.n_t = Some(value.parse().map_err(|_| bad_value("count"))?),
            "nr" => spec.n_r = Some(value.parse().map_err(|_| bad_value("count"))?),
            "kappa" => spec.kappa = Some(value.parse().map_err(|_| bad_value("number"))?),
            "alpha" => spec.alpha = Some(value.parse().map_err(|_| bad_value("number"))?),
            "snr_db_start" => {
                spec.snr_db_start = Some(value.parse().map_err(|_| bad_value("number"))?)
            }
            "snr_db_stop" => {
                spec.snr_db_stop = Some(value.parse().map_err(|_| bad_value("number"))?)
            }
            "snr_db_step" => {
                spec.snr_db_step = Some(value.parse().map_err(|_| bad_value("number"))?)
            }
            "trials" => spec.trials = Some(value.parse().map_err(|_| bad_value("count"))?),
            "seed" => spec.seed = Some(value.parse().map_err(|_| bad_value("integer"))?),
            "threads" => spec.threads = Some(value.parse().map_err(|_| bad_value("count"))?),
            "out" => spec.output_path = Some(PathBuf::from(value)),
            "channel_csv" => spec.channel_csv = Some(PathBuf::from(value)),
            "siso_random" => {
                spec.siso_random = Some(value.parse().map_err(|_| bad_value("boolean"))?)
            }
            "ratio_of_means" => {
                spec.ratio_of_means = Some(value.parse().map_err(|_| bad_value("boolean"))?)
            }
            other => {
                return Err(CliError::Usage(format!(
                    "{}:{}: unknown key '{other}'; valid keys: {}",
                    path.display(),
                    lineno + 1,
                    CONFIG_KEYS.join(", ")
                )))
            }
        }
    }
    Ok(spec)
}

/// Default worker count: `MIMOCAP_THREADS` if set, otherwise the machine's
/// available parallelism.
pub fn default_threads() -> usize {
    if let Ok(v) = std::env::var(THREADS_ENV) {
        if let Ok(n) = v.parse::<usize>() {
            if n >= 1 {
                return n;
            }
        }
    }
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

/// Fills defaults and validates the merged partial spec.
pub fn resolve_spec(partial: PartialSpec) -> CliResult<SweepSpec> {
    let scenario = partial
        .scenario
        .ok_or_else(|| CliError::Usage("missing scenario (use --scenario)".into()))?;
    let (g_start, g_stop, g_step) = scenario.default_grid();
    let spec = SweepSpec {
        scenario,
        n_t: partial.n_t.unwrap_or(4),
        n_r: partial.n_r.unwrap_or(4),
        kappa: partial.kappa,
        alpha: partial.alpha.unwrap_or(1.0),
        snr_db_start: partial.snr_db_start.unwrap_or(g_start),
        snr_db_stop: partial.snr_db_stop.unwrap_or(g_stop),
        snr_db_step: partial.snr_db_step.unwrap_or(g_step),
        trials: partial.trials.unwrap_or_else(|| scenario.default_trials()),
        seed: partial.seed.unwrap_or(1),
        threads: partial.threads.unwrap_or_else(default_threads),
        output_path: partial.output_path.unwrap_or_else(|| PathBuf::from("sweep.csv")),
        channel_csv: partial.channel_csv,
        siso_random: partial.siso_random.unwrap_or(false),
        ratio_of_means: partial.ratio_of_means.unwrap_or(false),
    };
    if spec.n_t == 0 || spec.n_r == 0 {
        return Err(CliError::Usage("antenna counts must be >= 1".into()));
    }
    if let Some(kappa) = spec.kappa {
        if !kappa.is_finite() || kappa < 0.0 {
            return Err(CliError::Usage(format!("kappa must be >= 0, got {kappa}")));
        }
    }
    if !(0.0..=1.0).contains(&spec.alpha) {
        return Err(CliError::Usage(format!("alpha must lie in [0, 1], got {}", spec.alpha)));
    }
    if !(spec.snr_db_step > 0.0) {
        return Err(CliError::Usage(format!(
            "snr_db_step must be > 0, got {}",
            spec.snr_db_step
        )));
    }
    if spec.snr_db_start > spec.snr_db_stop {
        return Err(CliError::Usage(format!(
            "snr_db_start ({}) must not exceed snr_db_stop ({})",
            spec.snr_db_start, spec.snr_db_stop
        )));
    }
    if spec.trials == 0 {
        return Err(CliError::Usage("trials must be >= 1".into()));
    }
    Ok(spec)
}

/// SNR grid in dB, inclusive of the stop point up to half a step.
pub fn snr_grid(spec: &SweepSpec) -> Vec<f64> {
    let mut grid = Vec::new();
    let mut i = 0usize;
    loop {
        let v = spec.snr_db_start + i as f64 * spec.snr_db_step;
        if v > spec.snr_db_stop + spec.snr_db_step * 0.5 {
            break;
        }
        grid.push(v.min(spec.snr_db_stop));
        i += 1;
    }
    grid
}

/// One CSV row.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveRecord {
    pub series: String,
    pub snr_db: f64,
    pub value: f64,
    pub stderr: f64,
}

fn sig6(v: f64) -> String {
    if v == 0.0 {
        "0".to_string()
    } else {
        format!("{v:.5e}")
    }
}

/// Renders the CSV artifact (comment header + rows) as a string.
pub fn render_csv(spec: &SweepSpec, records: &[CurveRecord]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# mimocap {TOOL_VERSION}");
    let _ = writeln!(out, "# scenario={}", spec.scenario.as_str());
    let _ = writeln!(out, "# nt={}", spec.n_t);
    let _ = writeln!(out, "# nr={}", spec.n_r);
    match spec.kappa {
        Some(k) => {
            let _ = writeln!(out, "# kappa={k}");
        }
        None => {
            let _ = writeln!(out, "# kappa=default");
        }
    }
    let _ = writeln!(out, "# alpha={}", spec.alpha);
    let _ = writeln!(out, "# snr_db_start={}", spec.snr_db_start);
    let _ = writeln!(out, "# snr_db_stop={}", spec.snr_db_stop);
    let _ = writeln!(out, "# snr_db_step={}", spec.snr_db_step);
    let _ = writeln!(out, "# trials={}", spec.trials);
    let _ = writeln!(out, "# seed={}", spec.seed);
    if let Some(csv) = &spec.channel_csv {
        let _ = writeln!(out, "# channel_csv={}", csv.display());
    }
    let _ = writeln!(out, "# siso_random={}", spec.siso_random);
    let _ = writeln!(out, "# ratio_of_means={}", spec.ratio_of_means);
    let _ = writeln!(out, "series,snr_db,value,stderr");
    for r in records {
        let _ = writeln!(
            out,
            "{},{:.2},{},{}",
            r.series,
            r.snr_db,
            sig6(r.value),
            sig6(r.stderr)
        );
    }
    out
}

fn model(kappa: f64, alpha: f64) -> CliResult<ImpairmentModel> {
    ImpairmentModel::new(kappa, alpha).map_err(|e| CliError::Usage(e.to_string()))
}

fn snr_point(db: f64) -> CliResult<SnrPoint> {
    SnrPoint::from_db(db).map_err(|e| CliError::Usage(e.to_string()))
}

/// Gaussian ensemble member i for deterministic-channel scenarios.
fn ensemble_channel(n_t: usize, n_r: usize, seed: u64, i: usize) -> mimo_capacity::Result<ChannelMatrix> {
    let dist = ChannelDistribution::iid_rayleigh(n_t, n_r)?;
    sample_channel(&dist, RngStream::new(seed, i as u64))
}

/// Average capacity of an ensemble of deterministic channels under the
/// alpha = 1 waterfilling solution.
fn ensemble_waterfilling_series(
    label: &str,
    n_t: usize,
    n_r: usize,
    kappa: f64,
    grid: &[f64],
    spec: &SweepSpec,
) -> CliResult<Vec<CurveRecord>> {
    let m = model(kappa, 1.0)?;
    let mut records = Vec::new();
    for &db in grid {
        let snr = snr_point(db)?;
        let values = run_trials(spec.trials, spec.threads, |i| {
            let h = ensemble_channel(n_t, n_r, spec.seed, i)?;
            Ok(deterministic_capacity(&h, snr, &m)?.0)
        })?;
        let (mean, stderr) = mean_and_stderr(&values);
        records.push(CurveRecord { series: label.to_string(), snr_db: db, value: mean, stderr });
    }
    Ok(records)
}

/// Same ensemble, but the covariance is found numerically (used for alpha < 1
/// where no closed form exists).
fn ensemble_optimizer_series(
    label: &str,
    n_t: usize,
    n_r: usize,
    kappa: f64,
    alpha: f64,
    grid: &[f64],
    spec: &SweepSpec,
) -> CliResult<Vec<CurveRecord>> {
    let m = model(kappa, alpha)?;
    let mut records = Vec::new();
    for &db in grid {
        let snr = snr_point(db)?;
        let values = run_trials(spec.trials, spec.threads, |i| {
            let h = ensemble_channel(n_t, n_r, spec.seed, i)?;
            Ok(optimize_covariance(&h, snr, &m)?.bits)
        })?;
        let (mean, stderr) = mean_and_stderr(&values);
        records.push(CurveRecord { series: label.to_string(), snr_db: db, value: mean, stderr });
    }
    Ok(records)
}

fn rayleigh_series(
    label: &str,
    n_t: usize,
    n_r: usize,
    kappa: f64,
    alpha: f64,
    grid: &[f64],
    spec: &SweepSpec,
) -> CliResult<Vec<CurveRecord>> {
    let m = model(kappa, alpha)?;
    let dist = ChannelDistribution::iid_rayleigh(n_t, n_r)?;
    let mc = MonteCarloConfig::new(spec.trials, spec.seed, spec.threads)?;
    let mut records = Vec::new();
    for &db in grid {
        let est = ergodic_capacity_isotropic(&dist, snr_point(db)?, &m, &mc)?;
        records.push(CurveRecord {
            series: label.to_string(),
            snr_db: db,
            value: est.mean,
            stderr: est.std_error,
        });
    }
    Ok(records)
}

/// Constant reference line rendered at the grid endpoints.
fn reference_line(label: &str, value: f64, grid: &[f64]) -> Vec<CurveRecord> {
    let endpoints: Vec<f64> = if grid.len() <= 1 {
        grid.to_vec()
    } else {
        vec![grid[0], *grid.last().unwrap()]
    };
    endpoints
        .into_iter()
        .map(|db| CurveRecord { series: label.to_string(), snr_db: db, value, stderr: 0.0 })
        .collect()
}

fn limit_lines(
    n_t: usize,
    n_r: usize,
    kappa: f64,
    suffix: &str,
    grid: &[f64],
) -> CliResult<Vec<CurveRecord>> {
    let m = model(kappa, 1.0)?;
    let lim = capacity_limits(n_t, n_r, &m).map_err(CliError::from)?;
    let mut records = reference_line(&format!("limit-lower{suffix}"), lim.lower, grid);
    if (lim.upper - lim.lower).abs() > 1e-12 {
        records.extend(reference_line(&format!("limit-upper{suffix}"), lim.upper, grid));
    }
    Ok(records)
}

fn fig2_records(spec: &SweepSpec, grid: &[f64]) -> CliResult<Vec<CurveRecord>> {
    let kappas: Vec<f64> = match spec.kappa {
        Some(k) if k > 0.0 => vec![k],
        _ => vec![0.05, 0.1],
    };
    let mut records =
        ensemble_waterfilling_series("ideal", spec.n_t, spec.n_r, 0.0, grid, spec)?;
    for &kappa in &kappas {
        let label = format!("kappa-{kappa}");
        records.extend(ensemble_waterfilling_series(&label, spec.n_t, spec.n_r, kappa, grid, spec)?);
        records.extend(limit_lines(spec.n_t, spec.n_r, kappa, &format!("-kappa-{kappa}"), grid)?);
    }
    Ok(records)
}

fn fig3_records(spec: &SweepSpec, grid: &[f64]) -> CliResult<Vec<CurveRecord>> {
    let kappa = spec.kappa.unwrap_or(0.05);
    if kappa <= 0.0 {
        return Err(CliError::Usage("fig3 requires kappa > 0".into()));
    }
    let mut records = Vec::new();
    for n_t in [spec.n_t, 3 * spec.n_t] {
        let suffix = format!("-nt{n_t}");
        records.extend(ensemble_waterfilling_series(
            &format!("det-alpha1{suffix}"),
            n_t,
            spec.n_r,
            kappa,
            grid,
            spec,
        )?);
        records.extend(ensemble_optimizer_series(
            &format!("det-alpha0{suffix}"),
            n_t,
            spec.n_r,
            kappa,
            0.0,
            grid,
            spec,
        )?);
        records.extend(rayleigh_series(
            &format!("rayleigh{suffix}"),
            n_t,
            spec.n_r,
            kappa,
            1.0,
            grid,
            spec,
        )?);
        records.extend(limit_lines(n_t, spec.n_r, kappa, &suffix, grid)?);
    }
    Ok(records)
}

/// Mux-gain curve for a Rayleigh distribution, with ratio standard error.
fn rayleigh_muxgain_series(
    label: &str,
    n_t: usize,
    n_r: usize,
    m: &ImpairmentModel,
    grid: &[f64],
    spec: &SweepSpec,
) -> CliResult<Vec<CurveRecord>> {
    let dist = ChannelDistribution::iid_rayleigh(n_t, n_r)?;
    let mc = MonteCarloConfig::new(spec.trials, spec.seed, spec.threads)?;
    let mut records = Vec::new();
    for &db in grid {
        let (value, stderr) = mimo_capacity::muxgain::finite_snr_mux_gain_detailed(
            &dist,
            snr_point(db)?,
            m,
            &mc,
        )?;
        records.push(CurveRecord { series: label.to_string(), snr_db: db, value, stderr });
    }
    Ok(records)
}

/// Per-realization mux-gain average over a deterministic Gaussian ensemble.
fn deterministic_muxgain_series(
    label: &str,
    n_t: usize,
    n_r: usize,
    m: &ImpairmentModel,
    grid: &[f64],
    spec: &SweepSpec,
) -> CliResult<Vec<CurveRecord>> {
    let siso_dist = ChannelDistribution::iid_rayleigh(1, 1).map_err(CliError::from)?;
    let mut records = Vec::new();
    for &db in grid {
        let snr = snr_point(db)?;
        let numerators = run_trials(spec.trials, spec.threads, |i| {
            let h = ensemble_channel(n_t, n_r, spec.seed, i)?;
            Ok(deterministic_capacity(&h, snr, m)?.0)
        })?;
        let denominators = run_trials(spec.trials, spec.threads, |i| {
            let gain = if spec.siso_random {
                siso_reference(&siso_dist, RngStream::new(spec.seed, i as u64)).norm_sqr()
            } else {
                1.0
            };
            Ok(siso_capacity(gain, snr, m))
        })?;
        let (value, stderr) = if spec.ratio_of_means {
            let (num, num_se) = mean_and_stderr(&numerators);
            let (den, den_se) = mean_and_stderr(&denominators);
            if den < 1e-15 {
                return Err(CliError::Runtime(format!(
                    "mux-gain denominator underflowed at {db} dB"
                )));
            }
            let ratio = num / den;
            let se = if num_se == 0.0 && den_se == 0.0 {
                0.0
            } else {
                ratio * ((num_se / num).powi(2) + (den_se / den).powi(2)).sqrt()
            };
            (ratio, se)
        } else {
            let ratios: Vec<f64> = numerators
                .iter()
                .zip(denominators.iter())
                .map(|(&n, &d)| n / d)
                .collect();
            if denominators.iter().any(|&d| d < 1e-15) {
                return Err(CliError::Runtime(format!(
                    "mux-gain denominator underflowed at {db} dB"
                )));
            }
            mean_and_stderr(&ratios)
        };
        records.push(CurveRecord { series: label.to_string(), snr_db: db, value, stderr });
    }
    Ok(records)
}

fn muxgain_figure_records(
    spec: &SweepSpec,
    grid: &[f64],
    deterministic: bool,
) -> CliResult<Vec<CurveRecord>> {
    let kappa = spec.kappa.unwrap_or(0.05);
    if kappa <= 0.0 {
        return Err(CliError::Usage("mux-gain scenarios require kappa > 0".into()));
    }
    let m = model(kappa, spec.alpha)?;
    let mc = MonteCarloConfig::new(spec.trials, spec.seed, spec.threads)?;
    let mut records = Vec::new();
    for n_t in [spec.n_t, 2 * spec.n_t, 3 * spec.n_t] {
        let suffix = format!("-nt{n_t}");
        let label = if deterministic {
            format!("det{suffix}")
        } else {
            format!("rayleigh{suffix}")
        };
        if deterministic {
            records.extend(deterministic_muxgain_series(&label, n_t, spec.n_r, &m, grid, spec)?);
        } else {
            records.extend(rayleigh_muxgain_series(&label, n_t, spec.n_r, &m, grid, spec)?);
        }
        let dist = ChannelDistribution::iid_rayleigh(n_t, spec.n_r).map_err(CliError::from)?;
        let bounds = mux_gain_bounds(&dist, &m, &mc)?;
        records.extend(reference_line(
            &format!("bound-low-lower{suffix}"),
            bounds.low_snr_lower,
            grid,
        ));
        records.extend(reference_line(
            &format!("bound-low-upper{suffix}"),
            bounds.low_snr_upper,
            grid,
        ));
        records.extend(reference_line(
            &format!("bound-high-lower{suffix}"),
            bounds.high_snr_lower,
            grid,
        ));
        records.extend(reference_line(
            &format!("bound-high-upper{suffix}"),
            bounds.high_snr_upper,
            grid,
        ));
    }
    Ok(records)
}

/// Default custom-scenario channel: ones on the main diagonal.
fn diagonal_ones_channel(n_t: usize, n_r: usize) -> CliResult<ChannelMatrix> {
    let h = CMat::from_fn(n_r, n_t, |i, j| {
        if i == j {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    ChannelMatrix::new(h).map_err(CliError::from)
}

fn custom_records(spec: &SweepSpec, grid: &[f64]) -> CliResult<Vec<CurveRecord>> {
    let kappa = spec.kappa.unwrap_or(0.0);
    let m = model(kappa, spec.alpha)?;
    let h = match &spec.channel_csv {
        Some(path) => load_channel_csv(path).map_err(CliError::from)?,
        None => diagonal_ones_channel(spec.n_t, spec.n_r)?,
    };
    if h.n_t() != spec.n_t || h.n_r() != spec.n_r {
        return Err(CliError::Usage(format!(
            "channel file is {}x{} but nt/nr request {}x{}",
            h.n_r(),
            h.n_t(),
            spec.n_r,
            spec.n_t
        )));
    }
    let mut records = Vec::new();
    for &db in grid {
        let snr = snr_point(db)?;
        let bits = if spec.alpha == 1.0 || kappa == 0.0 {
            deterministic_capacity(&h, snr, &m)?.0
        } else {
            optimize_covariance(&h, snr, &m)?.bits
        };
        records.push(CurveRecord {
            series: "deterministic".to_string(),
            snr_db: db,
            value: bits,
            stderr: 0.0,
        });
    }
    records.extend(rayleigh_series("rayleigh", spec.n_t, spec.n_r, kappa, spec.alpha, grid, spec)?);
    if kappa > 0.0 {
        records.extend(limit_lines(spec.n_t, spec.n_r, kappa, "", grid)?);
    }
    Ok(records)
}

/// Computes every record of the sweep without touching the filesystem.
pub fn sweep_records(spec: &SweepSpec) -> CliResult<Vec<CurveRecord>> {
    let grid = snr_grid(spec);
    if grid.is_empty() {
        return Err(CliError::Usage("the SNR grid is empty".into()));
    }
    match spec.scenario {
        Scenario::Fig2 => fig2_records(spec, &grid),
        Scenario::Fig3 => fig3_records(spec, &grid),
        Scenario::Fig4 => muxgain_figure_records(spec, &grid, false),
        Scenario::Fig5 => muxgain_figure_records(spec, &grid, true),
        Scenario::Custom => custom_records(spec, &grid),
    }
}

/// Runs the sweep, writes the CSV artifact, and prints a short summary.
pub fn run_sweep(spec: &SweepSpec, summary: &mut dyn std::io::Write) -> CliResult<()> {
    let records = sweep_records(spec)?;
    let csv = render_csv(spec, &records);
    std::fs::write(&spec.output_path, csv).map_err(|e| {
        CliError::Runtime(format!("cannot write {}: {e}", spec.output_path.display()))
    })?;
    let mut seen = Vec::new();
    for r in &records {
        if !seen.contains(&r.series) {
            seen.push(r.series.clone());
        }
    }
    let _ = writeln!(
        summary,
        "wrote {} records ({} series) to {}",
        records.len(),
        seen.len(),
        spec.output_path.display()
    );
    for series in &seen {
        let last = records.iter().rev().find(|r| &r.series == series).unwrap();
        let _ = writeln!(
            summary,
            "  {:<28} {:>8.2} dB -> {:.4} (stderr {:.2e})",
            series, last.snr_db, last.value, last.stderr
        );
    }
    Ok(())
}
