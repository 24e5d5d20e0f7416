//! Batch front end for the field-of-view RF localization simulator.
//!
//! Subcommands: `simulate` (Monte-Carlo batches), `sweep cone` / `sweep rate`
//! (parameter sweeps), `replay` (empirical statistics from flight logs), and
//! `dump-config` (print the effective configuration). Summary statistics go
//! to stdout; data only ever goes to files. Exit codes: 0 success, 2 usage
//! error, 1 runtime error.

mod config;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{CommonOpts, RunConfig};
use fovloc_core::replay::{empirical_stats, group_by_tag, load_log, EmpiricalStats};
use fovloc_core::simulator::{
    batch_csv, cone_sweep_csv, rate_sweep_csv, run_batch, run_trial_traced, sweep_cone_width,
    sweep_sample_rate, write_trajectory_csv, BatchSummary, TrialConfig,
};

#[derive(Debug)]
pub enum CliError {
    /// Bad flags or configuration values; exits with code 2.
    Usage(String),
    /// Failures while running: I/O, malformed logs, simulation errors.
    Runtime(String),
}

impl From<fovloc_core::Error> for CliError {
    fn from(e: fovloc_core::Error) -> Self {
        match e {
            fovloc_core::Error::InvalidParameter(_) => CliError::Usage(e.to_string()),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "fovloc",
    version,
    about = "RF source localization simulator: field-of-view sensing, histogram filtering, information-greedy control"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a Monte-Carlo batch and print its summary.
    Simulate(SimulateArgs),
    /// Batch over a parameter grid and emit a tidy CSV.
    #[command(subcommand)]
    Sweep(SweepCommand),
    /// Compute empirical sensor statistics from a flight log.
    Replay(ReplayArgs),
    /// Print the effective configuration as key=value lines.
    DumpConfig(DumpConfigArgs),
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: CommonOpts,
    /// Write the per-trial CSV here.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Write one trajectory CSV per trial into this directory.
    #[arg(long, value_name = "DIR")]
    trajectory_dir: Option<PathBuf>,
    /// Write the terminal belief of the first trial as row,col,weight CSV.
    #[arg(long, value_name = "PATH")]
    belief_out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum SweepCommand {
    /// Sweep FOV cone width and mistake rate (greedy policy).
    Cone(ConeSweepArgs),
    /// Sweep the measurement sample rate (FOV, greedy policy).
    Rate(RateSweepArgs),
}

#[derive(Args)]
struct ConeSweepArgs {
    #[command(flatten)]
    common: CommonOpts,
    /// Cone widths in degrees.
    #[arg(long, value_delimiter = ',', default_value = "120,140,160,180")]
    alphas: Vec<f64>,
    /// Mistake rates.
    #[arg(long, value_delimiter = ',', default_value = "0.10,0.05,0.01")]
    mus: Vec<f64>,
    /// Write the sweep CSV here.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RateSweepArgs {
    #[command(flatten)]
    common: CommonOpts,
    /// Sample rates in Hz.
    #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5,7,10,20")]
    rates: Vec<f64>,
    /// Write the sweep CSV here.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReplayArgs {
    /// Flight log CSV (header: t_s,uav_north_m,uav_east_m,heading_deg,
    /// src_north_m,src_east_m,z[,tag]).
    #[arg(long, value_name = "PATH")]
    log: PathBuf,
    /// Cone width in degrees (0 < alpha <= 180).
    #[arg(long, value_name = "DEG", default_value_t = 120.0)]
    alpha: f64,
    /// Also report statistics per tag value.
    #[arg(long)]
    per_tag: bool,
    /// Write the aggregate statistics as a single-row CSV.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DumpConfigArgs {
    #[command(flatten)]
    common: CommonOpts,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return ExitCode::from(u8::try_from(code).unwrap_or(2));
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate(args) => simulate(args),
        Command::Sweep(SweepCommand::Cone(args)) => sweep_cone(args),
        Command::Sweep(SweepCommand::Rate(args)) => sweep_rate(args),
        Command::Replay(args) => replay(args),
        Command::DumpConfig(args) => {
            let cfg = RunConfig::resolve(&args.common)?;
            print!("{}", cfg.dump());
            Ok(())
        }
    }
}

fn resolved_batch(common: &CommonOpts) -> Result<(RunConfig, TrialConfig), CliError> {
    let run_cfg = RunConfig::resolve(common)?;
    if run_cfg.trials == 0 {
        return Err(CliError::Usage("--trials must be at least 1".into()));
    }
    let trial_cfg = run_cfg.to_trial_config()?;
    Ok((run_cfg, trial_cfg))
}

fn write_file(path: &PathBuf, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents)
        .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))
}

fn summary_line(s: &BatchSummary) -> String {
    format!(
        "n_trials={} mean_s={:.4} median_s={:.4} std_s={:.4} ci95_s=[{:.4}, {:.4}] timeouts={}",
        s.n_trials, s.mean_s, s.median_s, s.std_s, s.ci95_lo_s, s.ci95_hi_s, s.timeout_count
    )
}

fn simulate(args: SimulateArgs) -> Result<(), CliError> {
    let (run_cfg, trial_cfg) = resolved_batch(&args.common)?;
    let (summary, results) = run_batch(&trial_cfg, run_cfg.trials, run_cfg.jobs)?;

    println!(
        "sensor={} policy={} seed={} jobs={}",
        run_cfg.sensor, run_cfg.policy, run_cfg.seed, run_cfg.jobs
    );
    println!("{}", summary_line(&summary));

    if let Some(path) = &args.out {
        write_file(path, &batch_csv(&trial_cfg, &results))?;
    }
    if let Some(dir) = &args.trajectory_dir {
        fs::create_dir_all(dir)
            .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", dir.display())))?;
        for result in &results {
            let path = dir.join(format!("trial_{}.csv", result.seed));
            let mut buf = Vec::new();
            write_trajectory_csv(&mut buf, &trial_cfg, result)
                .map_err(|e| CliError::Runtime(format!("cannot encode trajectory: {e}")))?;
            write_file(&path, std::str::from_utf8(&buf).expect("utf8 csv"))?;
        }
    }
    if let Some(path) = &args.belief_out {
        let (_, belief) = run_trial_traced(&trial_cfg)?;
        let mut buf = Vec::new();
        belief
            .write_csv(&mut buf)
            .map_err(|e| CliError::Runtime(format!("cannot encode belief: {e}")))?;
        write_file(path, std::str::from_utf8(&buf).expect("utf8 csv"))?;
    }
    Ok(())
}

fn sweep_cone(args: ConeSweepArgs) -> Result<(), CliError> {
    let (run_cfg, trial_cfg) = resolved_batch(&args.common)?;
    if args.alphas.is_empty() || args.mus.is_empty() {
        return Err(CliError::Usage("--alphas and --mus must be non-empty".into()));
    }
    let rows = sweep_cone_width(&trial_cfg, &args.alphas, &args.mus, run_cfg.trials, run_cfg.jobs)?;
    for row in &rows {
        println!(
            "alpha_deg={} mu={} {}",
            row.alpha_deg,
            row.mu,
            summary_line(&row.summary)
        );
    }
    if let Some(path) = &args.out {
        write_file(path, &cone_sweep_csv(&rows))?;
    }
    Ok(())
}

fn sweep_rate(args: RateSweepArgs) -> Result<(), CliError> {
    let (run_cfg, trial_cfg) = resolved_batch(&args.common)?;
    if args.rates.is_empty() {
        return Err(CliError::Usage("--rates must be non-empty".into()));
    }
    let rows = sweep_sample_rate(&trial_cfg, &args.rates, run_cfg.trials, run_cfg.jobs)?;
    for row in &rows {
        println!("rate_hz={} {}", row.rate_hz, summary_line(&row.summary));
    }
    if let Some(path) = &args.out {
        write_file(path, &rate_sweep_csv(&rows))?;
    }
    Ok(())
}

const REPLAY_CSV_HEADER: &str =
    "in_cone_total,in_cone_correct,uncertainty_total,uncertainty_z1,mistake_rate_hat,uncertainty_z1_frac";

fn stats_csv_row(stats: &EmpiricalStats) -> String {
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    format!(
        "{},{},{},{},{},{}",
        stats.in_cone_total,
        stats.in_cone_correct,
        stats.uncertainty_total,
        stats.uncertainty_z1,
        opt(stats.mistake_rate_hat()),
        opt(stats.uncertainty_z1_frac()),
    )
}

fn print_stats(label: &str, stats: &EmpiricalStats) {
    let opt = |v: Option<f64>| {
        v.map(|x| format!("{x:.6}"))
            .unwrap_or_else(|| "undefined".into())
    };
    println!("{label}");
    println!("  in_cone_total       {}", stats.in_cone_total);
    println!("  in_cone_correct     {}", stats.in_cone_correct);
    println!("  uncertainty_total   {}", stats.uncertainty_total);
    println!("  uncertainty_z1      {}", stats.uncertainty_z1);
    println!("  mistake_rate_hat    {}", opt(stats.mistake_rate_hat()));
    println!("  uncertainty_z1_frac {}", opt(stats.uncertainty_z1_frac()));
}

fn replay(args: ReplayArgs) -> Result<(), CliError> {
    if !(args.alpha > 0.0 && args.alpha <= 180.0) {
        return Err(CliError::Usage(format!(
            "--alpha must lie in (0, 180], got {}",
            args.alpha
        )));
    }
    let records = load_log(&args.log)?;
    let stats = empirical_stats(&records, args.alpha)?;
    print_stats(
        &format!("replay of {} ({} records)", args.log.display(), records.len()),
        &stats,
    );
    if args.per_tag {
        for (tag, group) in group_by_tag(&records) {
            let label = format!("tag={} ({} records)", tag.as_deref().unwrap_or("<none>"), group.len());
            let stats = empirical_stats(&group, args.alpha)?;
            print_stats(&label, &stats);
        }
    }
    if let Some(path) = &args.out {
        write_file(path, &format!("{REPLAY_CSV_HEADER}\n{}\n", stats_csv_row(&stats)))?;
    }
    Ok(())
}
