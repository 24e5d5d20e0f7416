//! Dynamics propagation, the discrete action set, and control policies.
//!
//! The greedy policy scores every candidate action by the mutual information
//! between the next observation and the current belief, i.e. the expected
//! entropy reduction of the belief after one more measurement, and picks the
//! maximizer. A random policy and the rotate-for-bearing waypoint planner
//! serve as baselines.

use rand::Rng;

use crate::belief::GridBelief;
use crate::error::{Error, Result};
use crate::geometry::{bearing_from_point, UavState};
use crate::sensors::{BearingModel, ConeGeometry, ConeRegion, FovModel, BEARING_BIN_COUNT};

/// One commanded step: planar velocity plus heading rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Action {
    /// Direction of travel, east of north, one of {0, 45, ..., 315}.
    pub velocity_dir_deg: f64,
    pub speed_mps: f64,
    /// Heading rate command, one of {-r, 0, +r}.
    pub heading_rate_dps: f64,
}

/// Interval between measurements, `dt = 1 / sample_rate`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepClock {
    dt_s: f64,
}

impl StepClock {
    pub fn new(dt_s: f64) -> Result<Self> {
        if !dt_s.is_finite() || dt_s <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "step interval must be positive, got {dt_s}"
            )));
        }
        Ok(Self { dt_s })
    }

    pub fn from_rate_hz(rate_hz: f64) -> Result<Self> {
        if !rate_hz.is_finite() || rate_hz <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "sample rate must be positive, got {rate_hz}"
            )));
        }
        Self::new(1.0 / rate_hz)
    }

    pub fn dt_s(&self) -> f64 {
        self.dt_s
    }

    /// Simulation time of measurement `k` (`k >= 1`), computed as `k * dt`
    /// so long runs accumulate no drift.
    pub fn measurement_time_s(&self, k: u64) -> f64 {
        k as f64 * self.dt_s
    }
}

/// The full 8 x 3 = 24 action set in its canonical order: velocity direction
/// outer (0, 45, ..., 315), heading rate inner (-r, 0, +r). Argmax ties break
/// to the first action in this order.
pub fn action_set(speed_mps: f64, heading_rate_dps: f64) -> Vec<Action> {
    let mut actions = Vec::with_capacity(24);
    for k in 0..8 {
        for rate in [-heading_rate_dps, 0.0, heading_rate_dps] {
            actions.push(Action {
                velocity_dir_deg: 45.0 * k as f64,
                speed_mps,
                heading_rate_dps: rate,
            });
        }
    }
    actions
}

/// The 8 velocity-only actions (heading rate 0), for sensors whose
/// measurement does not depend on heading.
pub fn velocity_action_set(speed_mps: f64) -> Vec<Action> {
    (0..8)
        .map(|k| Action {
            velocity_dir_deg: 45.0 * k as f64,
            speed_mps,
            heading_rate_dps: 0.0,
        })
        .collect()
}

/// Forward-Euler propagation over one step, with the position clamped to the
/// `[0, area_side_m]` square and the heading wrapped.
pub fn propagate(x: &UavState, u: &Action, dt_s: f64, area_side_m: f64) -> UavState {
    assert!(dt_s > 0.0, "dt must be positive, got {dt_s}");
    let dir = u.velocity_dir_deg.to_radians();
    let north = x.north_m() + u.speed_mps * dir.cos() * dt_s;
    let east = x.east_m() + u.speed_mps * dir.sin() * dt_s;
    UavState::new(
        north.clamp(0.0, area_side_m),
        east.clamp(0.0, area_side_m),
        x.heading_deg() + u.heading_rate_dps * dt_s,
    )
}

/// Binary entropy in nats, with the `0 ln 0 = 0` convention.
pub fn binary_entropy(p: f64) -> f64 {
    let q = 1.0 - p;
    let mut h = 0.0;
    if p > 0.0 {
        h -= p * p.ln();
    }
    if q > 0.0 {
        h -= q * q.ln();
    }
    h
}

/// Mutual information (nats) between the binary FOV observation at `x_next`
/// and the current belief: `H(z) - H(z | b)`, clamped to `[0, ln 2]`.
///
/// `H(z)` uses the predictive observation probability (the belief-weighted
/// likelihood) and `H(z | b)` is the belief-weighted per-cell observation
/// entropy.
pub fn mutual_information(b: &GridBelief, m: &FovModel, x_next: &UavState) -> f64 {
    let mu = m.mistake_rate();
    // Evaluated through binary_entropy so per-branch values match a fresh
    // evaluation bit-for-bit; a point-mass belief then scores exactly 0.
    let h_front = binary_entropy(1.0 - mu);
    let h_rear = binary_entropy(mu);
    let geometry = ConeGeometry::new(x_next, m.cone_width_deg());
    let n = b.n_per_side();
    let weights = b.weights();

    let mut p_front = 0.0;
    let mut h_cond = 0.0;
    let mut idx = 0;
    for r in 0..n {
        for c in 0..n {
            let w = weights[idx];
            idx += 1;
            if w == 0.0 {
                continue;
            }
            let center = b.cell_center(r, c);
            match geometry.classify(&center) {
                ConeRegion::FrontCone => {
                    p_front += w * (1.0 - mu);
                    h_cond += w * h_front;
                }
                ConeRegion::RearCone => {
                    p_front += w * mu;
                    h_cond += w * h_rear;
                }
                ConeRegion::Uncertainty => {
                    p_front += w * 0.5;
                    h_cond += w * std::f64::consts::LN_2;
                }
            }
        }
    }
    (binary_entropy(p_front) - h_cond).clamp(0.0, std::f64::consts::LN_2)
}

/// Mutual information (nats) between a discretized bearing observation taken
/// at the given point and the current belief, using the
/// [`BEARING_BIN_COUNT`]-bin observation model that also drives the filter's
/// bearing updates.
///
/// Per cell, only the bins within ten sigma of the true bearing carry mass;
/// their probabilities come from one shared sweep of CDF evaluations over
/// consecutive bin edges (unwrapped, which is exact here because the window
/// spans well under a half circle).
pub fn bearing_mutual_information(
    b: &GridBelief,
    m: &BearingModel,
    from_north_m: f64,
    from_east_m: f64,
) -> f64 {
    let sigma = m.sigma_deg();
    let bin_width = 360.0 / BEARING_BIN_COUNT as f64;
    let window = ((bin_width / 2.0 + 10.0 * sigma) / bin_width).ceil() as isize;
    let windowed = window < (BEARING_BIN_COUNT / 2) as isize;

    let mut p_bins = [0.0f64; BEARING_BIN_COUNT];
    let mut h_cond = 0.0;
    let n = b.n_per_side();
    let weights = b.weights();
    let mut idx = 0;
    for r in 0..n {
        for c in 0..n {
            let w = weights[idx];
            idx += 1;
            if w == 0.0 {
                continue;
            }
            let center = b.cell_center(r, c);
            let beta = bearing_from_point(from_north_m, from_east_m, &center).unwrap_or(0.0);
            let mut h_cell = 0.0;
            if windowed {
                // Stage the cell's bin masses, then fold them in bin order so
                // a point-mass belief yields H(z) == H(z|b) bit-for-bit.
                let mut cell_bins = [0.0f64; BEARING_BIN_COUNT];
                let k0 = crate::sensors::bearing_bin_index(beta) as isize;
                let mut cdf_prev =
                    normal_cdf(((k0 - window) as f64 * bin_width - beta) / sigma);
                for j in (k0 - window)..=(k0 + window) {
                    let cdf = normal_cdf(((j + 1) as f64 * bin_width - beta) / sigma);
                    let p = cdf - cdf_prev;
                    cdf_prev = cdf;
                    if p > 0.0 {
                        cell_bins[j.rem_euclid(BEARING_BIN_COUNT as isize) as usize] = p;
                    }
                }
                for (k, &p) in cell_bins.iter().enumerate() {
                    if p > 0.0 {
                        p_bins[k] += w * p;
                        h_cell -= p * p.ln();
                    }
                }
            } else {
                // Sigma so wide the window wraps; fall back to per-bin masses.
                for (k, p_bin) in p_bins.iter_mut().enumerate() {
                    let p = m.bin_probability(k, beta);
                    if p > 0.0 {
                        *p_bin += w * p;
                        h_cell -= p * p.ln();
                    }
                }
            }
            h_cond += w * h_cell;
        }
    }
    let h_z: f64 = p_bins
        .iter()
        .filter(|p| **p > 0.0)
        .map(|p| -p * p.ln())
        .sum();
    (h_z - h_cond).max(0.0)
}

fn normal_cdf(x: f64) -> f64 {
    0.5 * (1.0 + libm::erf(x / std::f64::consts::SQRT_2))
}

/// Mutual-information score of every action's successor state, in action
/// order.
pub fn fov_action_scores(
    b: &GridBelief,
    x: &UavState,
    m: &FovModel,
    dt_s: f64,
    actions: &[Action],
) -> Vec<f64> {
    actions
        .iter()
        .map(|u| mutual_information(b, m, &propagate(x, u, dt_s, b.area_side_m())))
        .collect()
}

/// Greedy FOV policy: the action whose successor state maximizes mutual
/// information. Ties break to the lowest action index.
pub fn greedy_select_fov(
    b: &GridBelief,
    x: &UavState,
    m: &FovModel,
    dt_s: f64,
    actions: &[Action],
) -> Action {
    argmax_by_score(actions, |u| {
        mutual_information(b, m, &propagate(x, u, dt_s, b.area_side_m()))
    })
}

/// Greedy instantaneous-bearing policy over the velocity-only action set.
pub fn greedy_select_ib(
    b: &GridBelief,
    x: &UavState,
    m: &BearingModel,
    dt_s: f64,
    actions: &[Action],
) -> Action {
    argmax_by_score(actions, |u| {
        let next = propagate(x, u, dt_s, b.area_side_m());
        bearing_mutual_information(b, m, next.north_m(), next.east_m())
    })
}

/// Uniform draw over the action set.
pub fn random_select<R: Rng + ?Sized>(rng: &mut R, actions: &[Action]) -> Action {
    actions[rng.random_range(0..actions.len())]
}

/// A candidate measurement location for the rotate-for-bearing planner.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Waypoint {
    pub north_m: f64,
    pub east_m: f64,
}

/// Uniform `per_side x per_side` lattice of candidate waypoints over the
/// search area, row-major from the south-west corner (north index outer).
pub fn waypoint_lattice(area_side_m: f64, per_side: usize) -> Vec<Waypoint> {
    let spacing = area_side_m / per_side as f64;
    let mut points = Vec::with_capacity(per_side * per_side);
    for r in 0..per_side {
        for c in 0..per_side {
            points.push(Waypoint {
                north_m: (r as f64 + 0.5) * spacing,
                east_m: (c as f64 + 0.5) * spacing,
            });
        }
    }
    points
}

/// Rotate-for-bearing planner: the candidate whose bearing measurement most
/// reduces expected belief entropy, i.e. maximizes
/// [`bearing_mutual_information`]. Ties break to the lowest candidate index.
///
/// Errors on an empty candidate set.
pub fn rfb_select_waypoint(
    b: &GridBelief,
    m: &BearingModel,
    candidates: &[Waypoint],
) -> Result<Waypoint> {
    if candidates.is_empty() {
        return Err(Error::InvalidParameter(
            "waypoint candidate set is empty".into(),
        ));
    }
    Ok(argmax_by_score(candidates, |w| {
        bearing_mutual_information(b, m, w.north_m, w.east_m)
    }))
}

fn argmax_by_score<T: Copy>(items: &[T], mut score: impl FnMut(&T) -> f64) -> T {
    let mut best = items[0];
    let mut best_score = f64::NEG_INFINITY;
    for item in items {
        let s = score(item);
        if s > best_score {
            best_score = s;
            best = *item;
        }
    }
    best
}
