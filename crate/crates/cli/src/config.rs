//! Effective run configuration: baseline defaults, an optional key=value
//! config file, and command-line flags, applied in that order.

use std::fmt;
use std::path::Path;

use fovloc_core::sensors::{BearingModel, FovModel};
use fovloc_core::simulator::{Policy, SensorModel, SourcePlacement, TrialConfig};
use fovloc_core::SourcePosition;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum SensorKind {
    /// Binary front/rear field-of-view sensor.
    Fov,
    /// Instantaneous bearing.
    Ib,
    /// Rotate-for-bearing.
    Rfb,
}

impl fmt::Display for SensorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SensorKind::Fov => "fov",
            SensorKind::Ib => "ib",
            SensorKind::Rfb => "rfb",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum PolicyKind {
    Greedy,
    Random,
    /// Greedy waypoint planner for the rfb sensor.
    RfbGreedy,
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PolicyKind::Greedy => "greedy",
            PolicyKind::Random => "random",
            PolicyKind::RfbGreedy => "rfb-greedy",
        })
    }
}

/// Flags shared by every subcommand that runs the simulator. Unset flags
/// fall back to the config file, then to the baseline defaults.
#[derive(Debug, Clone, Default, clap::Args)]
pub struct CommonOpts {
    /// Plain-text key=value configuration file; flags override file values.
    #[arg(long, value_name = "PATH")]
    pub config: Option<std::path::PathBuf>,
    /// Search-area side length in meters.
    #[arg(long, value_name = "M")]
    pub area: Option<f64>,
    /// Grid-cell side length in meters.
    #[arg(long, value_name = "M")]
    pub cell: Option<f64>,
    /// Sensing modality.
    #[arg(long, value_enum)]
    pub sensor: Option<SensorKind>,
    /// Control policy.
    #[arg(long, value_enum)]
    pub policy: Option<PolicyKind>,
    /// FOV cone width in degrees (0 < alpha <= 180).
    #[arg(long, value_name = "DEG")]
    pub alpha: Option<f64>,
    /// FOV mistake rate (0 <= mu < 0.5).
    #[arg(long, value_name = "PROB")]
    pub mu: Option<f64>,
    /// Bearing noise standard deviation in degrees.
    #[arg(long, value_name = "DEG")]
    pub sigma: Option<f64>,
    /// Seconds per in-place rotation for the rfb sensor.
    #[arg(long, value_name = "S")]
    pub rotation_time: Option<f64>,
    /// Measurement sample rate in Hz.
    #[arg(long, value_name = "HZ")]
    pub rate: Option<f64>,
    /// UAV planar speed in m/s.
    #[arg(long, value_name = "MPS")]
    pub speed: Option<f64>,
    /// Heading rate magnitude in deg/s.
    #[arg(long, value_name = "DPS")]
    pub heading_rate: Option<f64>,
    /// Belief max-norm threshold declaring localization.
    #[arg(long, value_name = "PROB")]
    pub threshold: Option<f64>,
    /// Per-trial timeout in simulated seconds.
    #[arg(long, value_name = "S")]
    pub timeout: Option<f64>,
    /// Base seed; trial i uses seed + i.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of Monte-Carlo trials.
    #[arg(long)]
    pub trials: Option<u64>,
    /// Worker threads (0 = all cores, 1 = sequential).
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Fixed source position as "north,east" in meters (default: a random
    /// cell center per trial).
    #[arg(long, value_name = "N,E")]
    pub source: Option<String>,
}

/// Fully resolved configuration with the baseline defaults of the simulated
/// experiments: 200 m area, 5 m cells, FOV alpha 120 / mu 0.1, sigma 5, 24 s
/// rotation, greedy policy at 1 Hz, 5 m/s, 10 deg/s, threshold 0.5.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub area_side_m: f64,
    pub cell_side_m: f64,
    pub sensor: SensorKind,
    pub alpha_deg: f64,
    pub mu: f64,
    pub sigma_deg: f64,
    pub rotation_time_s: f64,
    pub policy: PolicyKind,
    pub sample_rate_hz: f64,
    pub speed_mps: f64,
    pub heading_rate_dps: f64,
    pub maxnorm_threshold: f64,
    pub timeout_s: f64,
    pub seed: u64,
    pub trials: u64,
    pub jobs: usize,
    pub source: Option<(f64, f64)>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            area_side_m: 200.0,
            cell_side_m: 5.0,
            sensor: SensorKind::Fov,
            alpha_deg: 120.0,
            mu: 0.1,
            sigma_deg: 5.0,
            rotation_time_s: 24.0,
            policy: PolicyKind::Greedy,
            sample_rate_hz: 1.0,
            speed_mps: 5.0,
            heading_rate_dps: 10.0,
            maxnorm_threshold: 0.5,
            timeout_s: 3600.0,
            seed: 0,
            trials: 1000,
            jobs: 0,
            source: None,
        }
    }
}

impl RunConfig {
    /// Resolve defaults -> config file -> flags.
    pub fn resolve(opts: &CommonOpts) -> Result<Self, CliError> {
        let mut cfg = RunConfig::default();
        if let Some(path) = &opts.config {
            cfg.apply_file(path)?;
        }
        cfg.apply_flags(opts)?;
        Ok(cfg)
    }

    fn apply_file(&mut self, path: &Path) -> Result<(), CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Runtime(format!("cannot read config {}: {e}", path.display())))?;
        for (idx, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::Usage(format!(
                    "config {} line {}: expected key=value, got {line:?}",
                    path.display(),
                    idx + 1
                ))
            })?;
            self.apply_kv(key.trim(), value.trim()).map_err(|msg| {
                CliError::Usage(format!("config {} line {}: {msg}", path.display(), idx + 1))
            })?;
        }
        Ok(())
    }

    fn apply_kv(&mut self, key: &str, value: &str) -> Result<(), String> {
        fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, String> {
            value
                .parse()
                .map_err(|_| format!("cannot parse {key}={value:?}"))
        }
        match key {
            "area_side_m" => self.area_side_m = num(key, value)?,
            "cell_side_m" => self.cell_side_m = num(key, value)?,
            "sensor" => {
                self.sensor = match value {
                    "fov" => SensorKind::Fov,
                    "ib" => SensorKind::Ib,
                    "rfb" => SensorKind::Rfb,
                    _ => return Err(format!("unknown sensor {value:?}")),
                }
            }
            "alpha_deg" => self.alpha_deg = num(key, value)?,
            "mu" => self.mu = num(key, value)?,
            "sigma_deg" => self.sigma_deg = num(key, value)?,
            "rotation_time_s" => self.rotation_time_s = num(key, value)?,
            "policy" => {
                self.policy = match value {
                    "greedy" => PolicyKind::Greedy,
                    "random" => PolicyKind::Random,
                    "rfb-greedy" => PolicyKind::RfbGreedy,
                    _ => return Err(format!("unknown policy {value:?}")),
                }
            }
            "sample_rate_hz" => self.sample_rate_hz = num(key, value)?,
            "speed_mps" => self.speed_mps = num(key, value)?,
            "heading_rate_dps" => self.heading_rate_dps = num(key, value)?,
            "maxnorm_threshold" => self.maxnorm_threshold = num(key, value)?,
            "timeout_s" => self.timeout_s = num(key, value)?,
            "seed" => self.seed = num(key, value)?,
            "trials" => self.trials = num(key, value)?,
            "jobs" => self.jobs = num(key, value)?,
            "source" => {
                self.source = if value == "random" {
                    None
                } else {
                    Some(parse_source(value)?)
                }
            }
            _ => return Err(format!("unknown key {key:?}")),
        }
        Ok(())
    }

    fn apply_flags(&mut self, opts: &CommonOpts) -> Result<(), CliError> {
        macro_rules! take {
            ($field:ident, $opt:expr) => {
                if let Some(v) = $opt {
                    self.$field = v;
                }
            };
        }
        take!(area_side_m, opts.area);
        take!(cell_side_m, opts.cell);
        take!(sensor, opts.sensor);
        take!(policy, opts.policy);
        take!(alpha_deg, opts.alpha);
        take!(mu, opts.mu);
        take!(sigma_deg, opts.sigma);
        take!(rotation_time_s, opts.rotation_time);
        take!(sample_rate_hz, opts.rate);
        take!(speed_mps, opts.speed);
        take!(heading_rate_dps, opts.heading_rate);
        take!(maxnorm_threshold, opts.threshold);
        take!(timeout_s, opts.timeout);
        take!(seed, opts.seed);
        take!(trials, opts.trials);
        take!(jobs, opts.jobs);
        if let Some(raw) = &opts.source {
            self.source = Some(parse_source(raw).map_err(CliError::Usage)?);
        }
        Ok(())
    }

    /// Stable key=value dump, one key per line.
    pub fn dump(&self) -> String {
        let source = match self.source {
            None => "random".to_string(),
            Some((n, e)) => format!("{n},{e}"),
        };
        format!(
            "area_side_m={}\ncell_side_m={}\nsensor={}\nalpha_deg={}\nmu={}\nsigma_deg={}\nrotation_time_s={}\npolicy={}\nsample_rate_hz={}\nspeed_mps={}\nheading_rate_dps={}\nmaxnorm_threshold={}\ntimeout_s={}\nseed={}\ntrials={}\njobs={}\nsource={}\n",
            self.area_side_m,
            self.cell_side_m,
            self.sensor,
            self.alpha_deg,
            self.mu,
            self.sigma_deg,
            self.rotation_time_s,
            self.policy,
            self.sample_rate_hz,
            self.speed_mps,
            self.heading_rate_dps,
            self.maxnorm_threshold,
            self.timeout_s,
            self.seed,
            self.trials,
            self.jobs,
            source,
        )
    }

    /// Build the simulator configuration; parameter violations are usage
    /// errors.
    pub fn to_trial_config(&self) -> Result<TrialConfig, CliError> {
        let usage = |e: fovloc_core::Error| CliError::Usage(e.to_string());
        let sensor = match self.sensor {
            SensorKind::Fov => SensorModel::Fov(FovModel::new(self.alpha_deg, self.mu).map_err(usage)?),
            SensorKind::Ib => SensorModel::InstantaneousBearing(
                BearingModel::new(self.sigma_deg, 0.0).map_err(usage)?,
            ),
            SensorKind::Rfb => SensorModel::RotateForBearing(
                BearingModel::new(self.sigma_deg, self.rotation_time_s).map_err(usage)?,
            ),
        };
        let policy = match self.policy {
            PolicyKind::Greedy => Policy::Greedy,
            PolicyKind::Random => Policy::Random,
            PolicyKind::RfbGreedy => Policy::RfbGreedy,
        };
        let source = match self.source {
            None => SourcePlacement::RandomCell,
            Some((n, e)) => SourcePlacement::Fixed(SourcePosition::new(n, e)),
        };
        let cfg = TrialConfig {
            seed: self.seed,
            area_side_m: self.area_side_m,
            cell_side_m: self.cell_side_m,
            sensor,
            policy,
            sample_rate_hz: self.sample_rate_hz,
            speed_mps: self.speed_mps,
            heading_rate_dps: self.heading_rate_dps,
            maxnorm_threshold: self.maxnorm_threshold,
            timeout_s: self.timeout_s,
            source,
            record_trajectory: true,
        };
        cfg.validate().map_err(usage)?;
        Ok(cfg)
    }
}

fn parse_source(raw: &str) -> Result<(f64, f64), String> {
    let (n, e) = raw
        .split_once(',')
        .ok_or_else(|| format!("source must be \"north,east\", got {raw:?}"))?;
    let north: f64 = n
        .trim()
        .parse()
        .map_err(|_| format!("cannot parse source north {n:?}"))?;
    let east: f64 = e
        .trim()
        .parse()
        .map_err(|_| format!("cannot parse source east {e:?}"))?;
    if !north.is_finite() || !east.is_finite() {
        return Err("source components must be finite".into());
    }
    Ok((north, east))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_baseline() {
        let cfg = RunConfig::default();
        assert_eq!(cfg.area_side_m, 200.0);
        assert_eq!(cfg.alpha_deg, 120.0);
        assert_eq!(cfg.mu, 0.1);
        assert_eq!(cfg.sigma_deg, 5.0);
        assert_eq!(cfg.rotation_time_s, 24.0);
        assert_eq!(cfg.sample_rate_hz, 1.0);
        assert_eq!(cfg.maxnorm_threshold, 0.5);
        let trial = cfg.to_trial_config().unwrap();
        assert!(trial.validate().is_ok());
    }

    #[test]
    fn kv_and_flag_precedence() {
        let mut cfg = RunConfig::default();
        cfg.apply_kv("alpha_deg", "140").unwrap();
        cfg.apply_kv("sensor", "ib").unwrap();
        assert_eq!(cfg.alpha_deg, 140.0);
        assert_eq!(cfg.sensor, SensorKind::Ib);

        let opts = CommonOpts {
            alpha: Some(160.0),
            ..CommonOpts::default()
        };
        cfg.apply_flags(&opts).unwrap();
        assert_eq!(cfg.alpha_deg, 160.0);
        assert_eq!(cfg.sensor, SensorKind::Ib);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let mut cfg = RunConfig::default();
        assert!(cfg.apply_kv("frobnicate", "1").is_err());
        assert!(cfg.apply_kv("sensor", "sonar").is_err());
    }

    #[test]
    fn source_parsing() {
        assert_eq!(parse_source("10,20").unwrap(), (10.0, 20.0));
        assert_eq!(parse_source(" 2.5 , 97.5 ").unwrap(), (2.5, 97.5));
        assert!(parse_source("10").is_err());
        assert!(parse_source("a,b").is_err());
    }
}
