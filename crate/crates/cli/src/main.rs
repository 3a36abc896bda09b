use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mimo_capacity::capacity::{capacity_limits, MonteCarloConfig, SnrPoint};
use mimo_capacity::channel::{load_channel_csv, ChannelDistribution};
use mimo_capacity::impairments::ImpairmentModel;
use mimo_capacity::muxgain::{finite_snr_mux_gain_detailed, mux_gain_bounds};
use mimocap::{
    default_threads, load_config, resolve_spec, run_sweep, CliError, CliResult, PartialSpec,
    Scenario,
};

#[derive(Parser)]
#[command(name = "mimocap", version, about = "MIMO capacity experiments under transmitter impairments")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run an SNR sweep and write a CSV artifact.
    Sweep(SweepArgs),
    /// Print the high-SNR capacity limits for a configuration.
    Limits(LimitsArgs),
    /// Estimate the finite-SNR multiplexing gain at one operating point.
    Muxgain(MuxgainArgs),
    /// Print the low/high-SNR multiplexing-gain bounds.
    Bounds(BoundsArgs),
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    scenario: Option<Scenario>,
    #[arg(long)]
    nt: Option<usize>,
    #[arg(long)]
    nr: Option<usize>,
    #[arg(long)]
    kappa: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    snr_db_start: Option<f64>,
    #[arg(long)]
    snr_db_stop: Option<f64>,
    #[arg(long)]
    snr_db_step: Option<f64>,
    /// Shorthand for a single-point grid: sets start and stop.
    #[arg(long)]
    snr_db: Option<f64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    threads: Option<usize>,
    /// key=value config file; flags take precedence over its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Deterministic channel for the custom scenario (rows = receive antennas,
    /// columns alternate real and imaginary parts).
    #[arg(long)]
    channel_csv: Option<PathBuf>,
    /// Draw the SISO reference per realization instead of using unit gain.
    #[arg(long)]
    siso_random: bool,
    /// Report mean(MIMO)/mean(SISO) instead of the mean of ratios.
    #[arg(long)]
    ratio_of_means: bool,
}

#[derive(Args)]
struct LimitsArgs {
    #[arg(long, default_value_t = 4)]
    nt: usize,
    #[arg(long, default_value_t = 4)]
    nr: usize,
    #[arg(long)]
    kappa: f64,
}

#[derive(Args)]
struct MuxgainArgs {
    #[arg(long, default_value_t = 4)]
    nt: usize,
    #[arg(long, default_value_t = 4)]
    nr: usize,
    #[arg(long)]
    kappa: f64,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long)]
    snr_db: f64,
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    threads: Option<usize>,
    /// Evaluate a fixed channel loaded from CSV instead of the Rayleigh
    /// ensemble average.
    #[arg(long)]
    channel_csv: Option<PathBuf>,
}

#[derive(Args)]
struct BoundsArgs {
    #[arg(long, default_value_t = 4)]
    nt: usize,
    #[arg(long, default_value_t = 4)]
    nr: usize,
    #[arg(long)]
    kappa: f64,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    threads: Option<usize>,
}

fn sweep_partial(args: &SweepArgs) -> PartialSpec {
    PartialSpec {
        scenario: args.scenario,
        n_t: args.nt,
        n_r: args.nr,
        kappa: args.kappa,
        alpha: args.alpha,
        snr_db_start: args.snr_db_start.or(args.snr_db),
        snr_db_stop: args.snr_db_stop.or(args.snr_db),
        snr_db_step: args.snr_db_step,
        trials: args.trials,
        seed: args.seed,
        threads: args.threads,
        output_path: args.out.clone(),
        channel_csv: args.channel_csv.clone(),
        siso_random: args.siso_random.then_some(true),
        ratio_of_means: args.ratio_of_means.then_some(true),
    }
}

fn cmd_sweep(args: SweepArgs) -> CliResult<()> {
    let flags = sweep_partial(&args);
    let merged = match &args.config {
        Some(path) => load_config(path)?.overridden_by(flags),
        None => flags,
    };
    let spec = resolve_spec(merged)?;
    run_sweep(&spec, &mut std::io::stdout())
}

fn cmd_limits(args: LimitsArgs) -> CliResult<()> {
    let m = ImpairmentModel::new(args.kappa, 1.0).map_err(|e| CliError::Usage(e.to_string()))?;
    let lim = capacity_limits(args.nt, args.nr, &m)?;
    println!("nt={} nr={} kappa={}", args.nt, args.nr, args.kappa);
    println!("lower limit: {:.4} bits/s/Hz", lim.lower);
    println!("upper limit: {:.4} bits/s/Hz", lim.upper);
    Ok(())
}

fn mc(trials: usize, seed: u64, threads: Option<usize>) -> CliResult<MonteCarloConfig> {
    Ok(MonteCarloConfig::new(trials, seed, threads.unwrap_or_else(default_threads))
        .map_err(|e| CliError::Usage(e.to_string()))?)
}

fn cmd_muxgain(args: MuxgainArgs) -> CliResult<()> {
    let m = ImpairmentModel::new(args.kappa, args.alpha)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let snr = SnrPoint::from_db(args.snr_db).map_err(|e| CliError::Usage(e.to_string()))?;
    let dist = match &args.channel_csv {
        Some(path) => ChannelDistribution::Deterministic(load_channel_csv(path)?),
        None => ChannelDistribution::iid_rayleigh(args.nt, args.nr)
            .map_err(|e| CliError::Usage(e.to_string()))?,
    };
    let mc = mc(args.trials, args.seed, args.threads)?;
    let (gain, stderr) = finite_snr_mux_gain_detailed(&dist, snr, &m, &mc)?;
    println!(
        "finite-SNR multiplexing gain at {} dB: {:.4} (stderr {:.2e})",
        args.snr_db, gain, stderr
    );
    Ok(())
}

fn cmd_bounds(args: BoundsArgs) -> CliResult<()> {
    let m = ImpairmentModel::new(args.kappa, args.alpha)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let dist = ChannelDistribution::iid_rayleigh(args.nt, args.nr)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let mc = mc(args.trials, args.seed, args.threads)?;
    let b = mux_gain_bounds(&dist, &m, &mc)?;
    println!("nt={} nr={} kappa={}", args.nt, args.nr, args.kappa);
    println!("low-SNR bounds:  [{:.4}, {:.4}]", b.low_snr_lower, b.low_snr_upper);
    println!("high-SNR bounds: [{:.4}, {:.4}]", b.high_snr_lower, b.high_snr_upper);
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.cmd {
        Cmd::Sweep(args) => cmd_sweep(args),
        Cmd::Limits(args) => cmd_limits(args),
        Cmd::Muxgain(args) => cmd_muxgain(args),
        Cmd::Bounds(args) => cmd_bounds(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
