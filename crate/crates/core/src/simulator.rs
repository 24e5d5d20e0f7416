//! Single-trial episode loop and the Monte-Carlo batch harness.
//!
//! Every trial is a pure function of its [`TrialConfig`]: all randomness
//! (source placement, observation noise, the random policy) flows from one
//! ChaCha generator seeded with the trial seed. Batches derive trial `i`'s
//! seed as `base seed + i`, so results are identical no matter how many
//! worker threads run them.

use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::belief::{bayes_update_bearing, bayes_update_fov, GridBelief};
use crate::error::{Error, Result};
use crate::geometry::{bearing_or_zero, SourcePosition, UavState};
use crate::planner::{
    action_set, greedy_select_fov, greedy_select_ib, propagate, random_select,
    rfb_select_waypoint, velocity_action_set, waypoint_lattice, StepClock,
};
use crate::sensors::{BearingModel, FovModel, FovObservation};

/// Side length of the rotate-for-bearing candidate waypoint lattice.
pub const RFB_LATTICE_PER_SIDE: usize = 10;

/// Slack when comparing accumulated simulation time against the timeout, so
/// a measurement landing exactly on the timeout still counts.
const TIMEOUT_EPS_S: f64 = 1e-9;

/// Sensing modality under test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SensorModel {
    /// Binary front/rear field-of-view sensor.
    Fov(FovModel),
    /// Instantaneous bearing: a noisy bearing every time step.
    InstantaneousBearing(BearingModel),
    /// Rotate-for-bearing: a noisy bearing after each timed in-place
    /// rotation; the model's rotation time must be positive.
    RotateForBearing(BearingModel),
}

impl SensorModel {
    /// Short name used in CSV output.
    pub fn name(&self) -> &'static str {
        match self {
            SensorModel::Fov(_) => "fov",
            SensorModel::InstantaneousBearing(_) => "ib",
            SensorModel::RotateForBearing(_) => "rfb",
        }
    }
}

/// Control policy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Policy {
    /// Greedy mutual-information maximization (FOV and IB sensors).
    Greedy,
    /// Uniform draw over the action set each step (FOV and IB sensors).
    Random,
    /// Greedy waypoint selection for the RFB sensor.
    RfbGreedy,
}

impl Policy {
    pub fn name(&self) -> &'static str {
        match self {
            Policy::Greedy => "greedy",
            Policy::Random => "random",
            Policy::RfbGreedy => "rfb-greedy",
        }
    }
}

/// Where the transmitter sits in a trial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SourcePlacement {
    /// Uniform draw over grid-cell centers (likelihoods are evaluated at
    /// cell centers, so off-center placement would inject model mismatch).
    RandomCell,
    Fixed(SourcePosition),
}

/// Full specification of one simulated trial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialConfig {
    pub seed: u64,
    pub area_side_m: f64,
    pub cell_side_m: f64,
    pub sensor: SensorModel,
    pub policy: Policy,
    pub sample_rate_hz: f64,
    pub speed_mps: f64,
    pub heading_rate_dps: f64,
    pub maxnorm_threshold: f64,
    pub timeout_s: f64,
    pub source: SourcePlacement,
    /// Record per-measurement `(t, state, observation)` samples. Sweeps turn
    /// this off to keep batch memory flat.
    pub record_trajectory: bool,
}

impl Default for TrialConfig {
    /// Baseline configuration: 200 m x 200 m area, 5 m cells, FOV sensor
    /// with a 120-degree cone and 0.1 mistake rate, greedy control at 1 Hz,
    /// 5 m/s, 10 deg/s, localization at max-norm 0.5.
    fn default() -> Self {
        Self {
            seed: 0,
            area_side_m: 200.0,
            cell_side_m: 5.0,
            sensor: SensorModel::Fov(FovModel::new(120.0, 0.1).expect("valid defaults")),
            policy: Policy::Greedy,
            sample_rate_hz: 1.0,
            speed_mps: 5.0,
            heading_rate_dps: 10.0,
            maxnorm_threshold: 0.5,
            timeout_s: 3600.0,
            source: SourcePlacement::RandomCell,
            record_trajectory: true,
        }
    }
}

impl TrialConfig {
    pub fn validate(&self) -> Result<()> {
        let belief = GridBelief::uniform(self.area_side_m, self.cell_side_m)?;
        // Inclusive lower bound: a threshold equal to the uniform weight is
        // degenerate but well-defined (the trial terminates at t = 0).
        let uniform_weight = 1.0 / belief.n_cells() as f64;
        if !(self.maxnorm_threshold >= uniform_weight && self.maxnorm_threshold <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "max-norm threshold must lie in [{uniform_weight}, 1], got {}",
                self.maxnorm_threshold
            )));
        }
        if !self.timeout_s.is_finite() || self.timeout_s <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "timeout must be positive, got {}",
                self.timeout_s
            )));
        }
        if !self.sample_rate_hz.is_finite() || self.sample_rate_hz <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "sample rate must be positive, got {}",
                self.sample_rate_hz
            )));
        }
        if !self.speed_mps.is_finite() || self.speed_mps <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "speed must be positive, got {}",
                self.speed_mps
            )));
        }
        if !self.heading_rate_dps.is_finite() || self.heading_rate_dps < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "heading rate must be non-negative, got {}",
                self.heading_rate_dps
            )));
        }
        match (&self.sensor, self.policy) {
            (SensorModel::RotateForBearing(m), Policy::RfbGreedy) => {
                if m.rotation_time_s() <= 0.0 {
                    return Err(Error::InvalidParameter(
                        "rotate-for-bearing requires a positive rotation time".into(),
                    ));
                }
            }
            (SensorModel::RotateForBearing(_), p) => {
                return Err(Error::InvalidParameter(format!(
                    "rfb sensor requires the rfb-greedy policy, got {}",
                    p.name()
                )));
            }
            (_, Policy::RfbGreedy) => {
                return Err(Error::InvalidParameter(
                    "rfb-greedy policy requires the rfb sensor".into(),
                ));
            }
            (SensorModel::InstantaneousBearing(m), _) if m.rotation_time_s() != 0.0 => {
                return Err(Error::InvalidParameter(
                    "instantaneous bearing sensor must have zero rotation time".into(),
                ));
            }
            _ => {}
        }
        if let SourcePlacement::Fixed(s) = &self.source {
            let inside = (0.0..=self.area_side_m).contains(&s.north_m())
                && (0.0..=self.area_side_m).contains(&s.east_m());
            if !inside {
                return Err(Error::InvalidParameter(format!(
                    "fixed source ({}, {}) lies outside the search area",
                    s.north_m(),
                    s.east_m()
                )));
            }
        }
        Ok(())
    }
}

/// Observation recorded in a trajectory sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Observation {
    Fov(FovObservation),
    Bearing(f64),
}

/// One measurement event: simulation time, the state the measurement was
/// taken from, and the observation itself.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectorySample {
    pub t_s: f64,
    pub state: UavState,
    pub obs: Observation,
}

/// Outcome of a single trial.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult {
    pub seed: u64,
    /// Simulated seconds until the max-norm first reached the threshold, or
    /// the timeout value for timed-out trials.
    pub localization_time_s: f64,
    pub timed_out: bool,
    pub terminal_maxnorm: f64,
    /// Distance between the belief's MAP cell center and the true source.
    pub estimate_error_m: f64,
    /// Number of measurements taken.
    pub steps: u64,
    pub source: SourcePosition,
    pub trajectory: Vec<TrajectorySample>,
}

/// Run one trial; see [`run_trial_traced`] for the loop contract.
pub fn run_trial(cfg: &TrialConfig) -> Result<TrialResult> {
    run_trial_traced(cfg).map(|(result, _)| result)
}

/// Run one trial and also return the terminal belief (for snapshot export).
///
/// The loop per measurement is: select an action (policy-dependent),
/// propagate one step of `1 / sample_rate`, sample an observation at the new
/// state, Bayes-update the belief, then check the max-norm threshold.
/// Measurement `k` therefore lands at `t = k / sample_rate`, `k >= 1`; a
/// belief already past the threshold terminates at `t = 0`. The RFB variant
/// instead alternates waypoint travel, a timed rotation, and one bearing
/// measurement.
///
/// Draw order from the trial's seeded generator: first the source cell (when
/// randomly placed), then per measurement the random policy's action draw
/// (random policy only) followed by the observation noise draw.
pub fn run_trial_traced(cfg: &TrialConfig) -> Result<(TrialResult, GridBelief)> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut belief = GridBelief::uniform(cfg.area_side_m, cfg.cell_side_m)?;
    let source = match &cfg.source {
        SourcePlacement::RandomCell => {
            let idx = rng.random_range(0..belief.n_cells());
            belief.cell_center_at(idx)
        }
        SourcePlacement::Fixed(s) => *s,
    };
    let start = UavState::new(cfg.area_side_m / 2.0, cfg.area_side_m / 2.0, 0.0);

    let mut trial = TrialRun {
        cfg,
        source,
        rng,
        x: start,
        steps: 0,
        trajectory: Vec::new(),
    };
    let (loc_time, timed_out) = match &cfg.sensor {
        SensorModel::Fov(m) => trial.run_fov(&mut belief, m)?,
        SensorModel::InstantaneousBearing(m) => trial.run_ib(&mut belief, m)?,
        SensorModel::RotateForBearing(m) => trial.run_rfb(&mut belief, m)?,
    };

    let est = belief.map_estimate();
    let dn = est.north_m() - source.north_m();
    let de = est.east_m() - source.east_m();
    let result = TrialResult {
        seed: cfg.seed,
        localization_time_s: loc_time,
        timed_out,
        terminal_maxnorm: belief.max_norm(),
        estimate_error_m: (dn * dn + de * de).sqrt(),
        steps: trial.steps,
        source,
        trajectory: trial.trajectory,
    };
    Ok((result, belief))
}

struct TrialRun<'a> {
    cfg: &'a TrialConfig,
    source: SourcePosition,
    rng: ChaCha8Rng,
    x: UavState,
    steps: u64,
    trajectory: Vec<TrajectorySample>,
}

impl TrialRun<'_> {
    fn record(&mut self, t_s: f64, obs: Observation) {
        if self.cfg.record_trajectory {
            self.trajectory.push(TrajectorySample {
                t_s,
                state: self.x,
                obs,
            });
        }
    }

    fn run_fov(&mut self, belief: &mut GridBelief, m: &FovModel) -> Result<(f64, bool)> {
        let cfg = self.cfg;
        let clock = StepClock::from_rate_hz(cfg.sample_rate_hz)?;
        let actions = action_set(cfg.speed_mps, cfg.heading_rate_dps);
        loop {
            if belief.max_norm() >= cfg.maxnorm_threshold {
                return Ok((clock.measurement_time_s(self.steps), false));
            }
            let t_next = clock.measurement_time_s(self.steps + 1);
            if t_next > cfg.timeout_s + TIMEOUT_EPS_S {
                return Ok((cfg.timeout_s, true));
            }
            let u = match cfg.policy {
                Policy::Greedy => greedy_select_fov(belief, &self.x, m, clock.dt_s(), &actions),
                Policy::Random => random_select(&mut self.rng, &actions),
                Policy::RfbGreedy => unreachable!("rejected by validate"),
            };
            self.x = propagate(&self.x, &u, clock.dt_s(), cfg.area_side_m);
            self.steps += 1;
            let z = m.sample(&self.x, &self.source, &mut self.rng);
            bayes_update_fov(belief, m, &self.x, z)?;
            self.record(t_next, Observation::Fov(z));
        }
    }

    fn run_ib(&mut self, belief: &mut GridBelief, m: &BearingModel) -> Result<(f64, bool)> {
        let cfg = self.cfg;
        let clock = StepClock::from_rate_hz(cfg.sample_rate_hz)?;
        // The bearing measurement is heading-independent, so the greedy
        // search covers the velocity actions only; the random baseline draws
        // from the full 24-action set.
        let greedy_actions = velocity_action_set(cfg.speed_mps);
        let random_actions = action_set(cfg.speed_mps, cfg.heading_rate_dps);
        loop {
            if belief.max_norm() >= cfg.maxnorm_threshold {
                return Ok((clock.measurement_time_s(self.steps), false));
            }
            let t_next = clock.measurement_time_s(self.steps + 1);
            if t_next > cfg.timeout_s + TIMEOUT_EPS_S {
                return Ok((cfg.timeout_s, true));
            }
            let u = match cfg.policy {
                Policy::Greedy => {
                    greedy_select_ib(belief, &self.x, m, clock.dt_s(), &greedy_actions)
                }
                Policy::Random => random_select(&mut self.rng, &random_actions),
                Policy::RfbGreedy => unreachable!("rejected by validate"),
            };
            self.x = propagate(&self.x, &u, clock.dt_s(), cfg.area_side_m);
            self.steps += 1;
            let true_bearing = bearing_or_zero(&self.x, &self.source);
            let obs = m.sample_at(true_bearing, &mut self.rng);
            bayes_update_bearing(belief, m, &self.x, obs)?;
            self.record(t_next, Observation::Bearing(obs.bearing_deg()));
        }
    }

    fn run_rfb(&mut self, belief: &mut GridBelief, m: &BearingModel) -> Result<(f64, bool)> {
        let cfg = self.cfg;
        let candidates = waypoint_lattice(cfg.area_side_m, RFB_LATTICE_PER_SIDE);
        let mut t = 0.0f64;
        loop {
            if belief.max_norm() >= cfg.maxnorm_threshold {
                return Ok((t, false));
            }
            let w = rfb_select_waypoint(belief, m, &candidates)?;
            let dn = w.north_m - self.x.north_m();
            let de = w.east_m - self.x.east_m();
            let travel_s = (dn * dn + de * de).sqrt() / cfg.speed_mps;
            let t_next = t + travel_s + m.rotation_time_s();
            if t_next > cfg.timeout_s + TIMEOUT_EPS_S {
                return Ok((cfg.timeout_s, true));
            }
            self.x = UavState::new(w.north_m, w.east_m, self.x.heading_deg());
            t = t_next;
            self.steps += 1;
            let true_bearing = bearing_or_zero(&self.x, &self.source);
            let obs = m.sample_at(true_bearing, &mut self.rng);
            bayes_update_bearing(belief, m, &self.x, obs)?;
            self.record(t, Observation::Bearing(obs.bearing_deg()));
        }
    }
}

/// Aggregate statistics over a batch of trials. Timed-out trials contribute
/// their timeout value to every statistic and are counted separately.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchSummary {
    pub n_trials: u64,
    pub mean_s: f64,
    pub median_s: f64,
    pub std_s: f64,
    pub ci95_lo_s: f64,
    pub ci95_hi_s: f64,
    pub timeout_count: u64,
}

impl BatchSummary {
    fn from_results(results: &[TrialResult]) -> Self {
        let times: Vec<f64> = results.iter().map(|r| r.localization_time_s).collect();
        let n = times.len() as f64;
        let mean = times.iter().sum::<f64>() / n;
        let mut sorted = times.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite times"));
        let median = if sorted.len() % 2 == 1 {
            sorted[sorted.len() / 2]
        } else {
            0.5 * (sorted[sorted.len() / 2 - 1] + sorted[sorted.len() / 2])
        };
        let std = if times.len() > 1 {
            (times.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        let half_width = 1.96 * std / n.sqrt();
        BatchSummary {
            n_trials: times.len() as u64,
            mean_s: mean,
            median_s: median,
            std_s: std,
            ci95_lo_s: mean - half_width,
            ci95_hi_s: mean + half_width,
            timeout_count: results.iter().filter(|r| r.timed_out).count() as u64,
        }
    }
}

/// Run `n_trials` trials with seeds `base.seed + 0 .. base.seed + n - 1`.
///
/// `parallelism` is the worker thread count: 1 runs sequentially, 0 uses all
/// cores. Per-trial results and the summary are identical for every value.
/// Without the `parallel` feature the batch always runs sequentially.
pub fn run_batch(
    base: &TrialConfig,
    n_trials: u64,
    parallelism: usize,
) -> Result<(BatchSummary, Vec<TrialResult>)> {
    if n_trials == 0 {
        return Err(Error::InvalidParameter(
            "batch needs at least one trial".into(),
        ));
    }
    base.validate()?;
    let trial_cfg = |i: u64| TrialConfig {
        seed: base.seed.wrapping_add(i),
        ..*base
    };

    #[cfg(feature = "parallel")]
    let results: Result<Vec<TrialResult>> = if parallelism == 1 {
        (0..n_trials).map(|i| run_trial(&trial_cfg(i))).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(parallelism)
            .build()
            .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
        pool.install(|| {
            (0..n_trials)
                .into_par_iter()
                .map(|i| run_trial(&trial_cfg(i)))
                .collect()
        })
    };
    #[cfg(not(feature = "parallel"))]
    let results: Result<Vec<TrialResult>> = {
        let _ = parallelism;
        (0..n_trials).map(|i| run_trial(&trial_cfg(i))).collect()
    };

    let results = results?;
    Ok((BatchSummary::from_results(&results), results))
}

/// One row of the cone-width sweep.
#[derive(Debug, Clone)]
pub struct ConeSweepRow {
    pub alpha_deg: f64,
    pub mu: f64,
    pub summary: BatchSummary,
}

/// Batch the greedy FOV configuration over every `(alpha, mu)` pair.
/// Rows are ordered mistake rate outer, cone width inner.
pub fn sweep_cone_width(
    base: &TrialConfig,
    alphas_deg: &[f64],
    mus: &[f64],
    n_trials: u64,
    parallelism: usize,
) -> Result<Vec<ConeSweepRow>> {
    let mut rows = Vec::with_capacity(alphas_deg.len() * mus.len());
    for &mu in mus {
        for &alpha in alphas_deg {
            let cfg = TrialConfig {
                sensor: SensorModel::Fov(FovModel::new(alpha, mu)?),
                policy: Policy::Greedy,
                record_trajectory: false,
                ..*base
            };
            let (summary, _) = run_batch(&cfg, n_trials, parallelism)?;
            rows.push(ConeSweepRow {
                alpha_deg: alpha,
                mu,
                summary,
            });
        }
    }
    Ok(rows)
}

/// One row of the sample-rate sweep.
#[derive(Debug, Clone)]
pub struct RateSweepRow {
    pub rate_hz: f64,
    pub summary: BatchSummary,
}

/// Batch the greedy FOV configuration over measurement rates. The UAV's
/// speed limits are unchanged; only the measurement interval shrinks.
pub fn sweep_sample_rate(
    base: &TrialConfig,
    rates_hz: &[f64],
    n_trials: u64,
    parallelism: usize,
) -> Result<Vec<RateSweepRow>> {
    let mut rows = Vec::with_capacity(rates_hz.len());
    for &rate in rates_hz {
        let sensor = match base.sensor {
            SensorModel::Fov(m) => SensorModel::Fov(m),
            _ => SensorModel::Fov(FovModel::new(120.0, 0.1)?),
        };
        let cfg = TrialConfig {
            sensor,
            policy: Policy::Greedy,
            sample_rate_hz: rate,
            record_trajectory: false,
            ..*base
        };
        let (summary, _) = run_batch(&cfg, n_trials, parallelism)?;
        rows.push(RateSweepRow {
            rate_hz: rate,
            summary,
        });
    }
    Ok(rows)
}

// ---------------------------------------------------------------------------
// CSV emission
// ---------------------------------------------------------------------------

/// Header of the per-trial CSV.
pub const TRIAL_CSV_HEADER: &str = "seed,policy,sensor,alpha_deg,mu,sigma_deg,sample_rate_hz,loc_time_s,terminal_maxnorm,err_m,steps,timed_out";

/// One per-trial CSV row. Sensor parameters that do not apply to the
/// configured modality are left empty.
pub fn trial_csv_row(cfg: &TrialConfig, r: &TrialResult) -> String {
    let (alpha, mu, sigma) = match &cfg.sensor {
        SensorModel::Fov(m) => (
            m.cone_width_deg().to_string(),
            m.mistake_rate().to_string(),
            String::new(),
        ),
        SensorModel::InstantaneousBearing(m) | SensorModel::RotateForBearing(m) => {
            (String::new(), String::new(), m.sigma_deg().to_string())
        }
    };
    format!(
        "{},{},{},{},{},{},{},{},{},{},{},{}",
        r.seed,
        cfg.policy.name(),
        cfg.sensor.name(),
        alpha,
        mu,
        sigma,
        cfg.sample_rate_hz,
        r.localization_time_s,
        r.terminal_maxnorm,
        r.estimate_error_m,
        r.steps,
        r.timed_out
    )
}

/// Full per-trial CSV (header plus one row per trial, trailing newline).
pub fn batch_csv(cfg: &TrialConfig, results: &[TrialResult]) -> String {
    let mut out = String::with_capacity(64 * (results.len() + 1));
    out.push_str(TRIAL_CSV_HEADER);
    out.push('\n');
    for r in results {
        out.push_str(&trial_csv_row(cfg, r));
        out.push('\n');
    }
    out
}

const SUMMARY_COLUMNS: &str = "n_trials,mean_s,median_s,std_s,ci95_lo_s,ci95_hi_s,timeouts";

fn summary_fields(s: &BatchSummary) -> String {
    format!(
        "{},{},{},{},{},{},{}",
        s.n_trials, s.mean_s, s.median_s, s.std_s, s.ci95_lo_s, s.ci95_hi_s, s.timeout_count
    )
}

/// Tidy CSV for the cone-width sweep: one row per `(alpha, mu)` pair.
pub fn cone_sweep_csv(rows: &[ConeSweepRow]) -> String {
    let mut out = format!("alpha_deg,mu,{SUMMARY_COLUMNS}\n");
    for row in rows {
        out.push_str(&format!(
            "{},{},{}\n",
            row.alpha_deg,
            row.mu,
            summary_fields(&row.summary)
        ));
    }
    out
}

/// Tidy CSV for the sample-rate sweep: one row per rate.
pub fn rate_sweep_csv(rows: &[RateSweepRow]) -> String {
    let mut out = format!("rate_hz,{SUMMARY_COLUMNS}\n");
    for row in rows {
        out.push_str(&format!("{},{}\n", row.rate_hz, summary_fields(&row.summary)));
    }
    out
}

/// Write one trial's trajectory as CSV. FOV trials use the flight-log schema
/// (`z` column) shared with the replay pipeline; bearing trials emit a
/// `bearing_deg` column instead and are not replayable.
pub fn write_trajectory_csv<W: Write>(mut out: W, cfg: &TrialConfig, r: &TrialResult) -> io::Result<()> {
    let fov = matches!(cfg.sensor, SensorModel::Fov(_));
    let last = if fov { "z" } else { "bearing_deg" };
    writeln!(
        out,
        "t_s,uav_north_m,uav_east_m,heading_deg,src_north_m,src_east_m,{last}"
    )?;
    for sample in &r.trajectory {
        let obs = match sample.obs {
            Observation::Fov(z) => z.as_bit().to_string(),
            Observation::Bearing(b) => b.to_string(),
        };
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            sample.t_s,
            sample.state.north_m(),
            sample.state.east_m(),
            sample.state.heading_deg(),
            r.source.north_m(),
            r.source.east_m(),
            obs
        )?;
    }
    Ok(())
}
