//! Observation models: likelihood evaluation and stochastic sampling.
//!
//! Three modalities are covered. The field-of-view (FOV) sensor compares
//! simultaneous front/rear antenna strengths and reports a single bit. The
//! instantaneous-bearing (IB) and rotate-for-bearing (RFB) baselines both
//! deliver a noisy bearing and share [`BearingModel`]; RFB merely adds a
//! nonzero rotation time that the planner has to budget for.
//!
//! Likelihoods are pure functions; sampling takes a caller-owned generator so
//! no randomness is hidden from the simulation harness.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::geometry::{bearing, wrap_angle, wrap_to_360, SourcePosition, UavState};

/// Density floor applied to the bearing likelihood so one far-tail
/// observation cannot zero an entire belief row.
pub const BEARING_DENSITY_FLOOR: f64 = 1e-300;

/// Number of bins the continuous bearing observation is discretized into
/// (10 degrees each) when a bearing sensor feeds the histogram filter or an
/// expectation over observations.
pub const BEARING_BIN_COUNT: usize = 36;

const BEARING_BIN_WIDTH_DEG: f64 = 360.0 / BEARING_BIN_COUNT as f64;

/// Bin masses below roughly `Phi(-10)` are treated as zero; the error this
/// introduces is around 1e-22 per bin, far below every test tolerance.
const BEARING_BIN_CUTOFF_SIGMAS: f64 = 10.0;

/// Index of the bin containing a bearing; bin `k` covers `[10k, 10(k+1))`.
pub fn bearing_bin_index(bearing_deg: f64) -> usize {
    ((wrap_to_360(bearing_deg) / BEARING_BIN_WIDTH_DEG) as usize).min(BEARING_BIN_COUNT - 1)
}

/// Which angular region of the two-cone sensor geometry a source occupies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConeRegion {
    /// Within `cone_width / 2` of the heading axis, ahead of the UAV.
    FrontCone,
    /// Within `cone_width / 2` of the anti-heading axis, behind the UAV.
    RearCone,
    /// Between the cones, where either observation is equally likely.
    Uncertainty,
}

/// Classify a relative bearing against cones of the given width.
///
/// Membership at exactly `|delta| = cone_width / 2` counts as inside the
/// cone (the regions are closed intervals).
pub fn classify_relative_bearing(delta_deg: f64, cone_width_deg: f64) -> ConeRegion {
    let half = cone_width_deg / 2.0;
    let d = wrap_angle(delta_deg);
    if d.abs() <= half {
        ConeRegion::FrontCone
    } else if wrap_angle(d - 180.0).abs() <= half {
        ConeRegion::RearCone
    } else {
        ConeRegion::Uncertainty
    }
}

/// Precomputed cone classifier for one UAV pose.
///
/// Classification avoids the arctangent entirely through the identity
/// `|wrap(beta - h)| <= alpha/2  <=>  cos(beta - h) >= cos(alpha/2)`, with
/// the cosine expanded as a dot product against the heading axis. This is
/// the region test behind every FOV likelihood, so the planner's scoring
/// loop and the replay classifier always branch identically.
#[derive(Debug, Clone, Copy)]
pub struct ConeGeometry {
    north_m: f64,
    east_m: f64,
    heading_deg: f64,
    heading_cos: f64,
    heading_sin: f64,
    cone_width_deg: f64,
    cos_half_width: f64,
}

/// Dot-product margins within this relative distance of the cone edge are
/// re-resolved through the exact angle path (trig rounding is ~1e-16
/// relative, statistical effects start many orders above 1e-12).
const CONE_EDGE_COLLAR: f64 = 1e-12;

impl ConeGeometry {
    pub fn new(x: &UavState, cone_width_deg: f64) -> Self {
        let heading = x.heading_deg().to_radians();
        Self {
            north_m: x.north_m(),
            east_m: x.east_m(),
            heading_deg: x.heading_deg(),
            heading_cos: heading.cos(),
            heading_sin: heading.sin(),
            cone_width_deg,
            cos_half_width: (cone_width_deg.to_radians() / 2.0).cos(),
        }
    }

    /// Region the source occupies; coincident positions classify as the
    /// front cone (relative bearing 0 by convention).
    pub fn classify(&self, s: &SourcePosition) -> ConeRegion {
        let dn = s.north_m() - self.north_m;
        let de = s.east_m() - self.east_m;
        let range = (dn * dn + de * de).sqrt();
        if range < crate::geometry::COINCIDENT_EPS_M {
            return ConeRegion::FrontCone;
        }
        let along_heading = dn * self.heading_cos + de * self.heading_sin;
        let cone_edge = self.cos_half_width * range;
        if (along_heading.abs() - cone_edge).abs() <= CONE_EDGE_COLLAR * range {
            // On the cone edge the dot test is one trig rounding away from
            // the closed-interval semantics; let the angle path decide.
            let delta = wrap_angle(de.atan2(dn).to_degrees() - self.heading_deg);
            return classify_relative_bearing(delta, self.cone_width_deg);
        }
        if along_heading >= cone_edge {
            ConeRegion::FrontCone
        } else if -along_heading >= cone_edge {
            ConeRegion::RearCone
        } else {
            ConeRegion::Uncertainty
        }
    }
}

/// Binary field-of-view observation. `Front` (bit 1) means the front antenna
/// measured the higher signal strength.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FovObservation {
    Rear,
    Front,
}

impl FovObservation {
    /// Both observations, in bit order `[0, 1]`.
    pub const ALL: [FovObservation; 2] = [FovObservation::Rear, FovObservation::Front];

    pub fn as_bit(self) -> u8 {
        match self {
            FovObservation::Rear => 0,
            FovObservation::Front => 1,
        }
    }
}

impl TryFrom<u8> for FovObservation {
    type Error = Error;

    fn try_from(z: u8) -> Result<Self> {
        match z {
            0 => Ok(FovObservation::Rear),
            1 => Ok(FovObservation::Front),
            other => Err(Error::InvalidParameter(format!(
                "FOV observation must be 0 or 1, got {other}"
            ))),
        }
    }
}

/// Field-of-view sensor parameters: cone width and mistake rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FovModel {
    cone_width_deg: f64,
    mistake_rate: f64,
}

impl FovModel {
    /// Requires `0 < cone_width_deg <= 180` and `0 <= mistake_rate < 0.5`.
    pub fn new(cone_width_deg: f64, mistake_rate: f64) -> Result<Self> {
        if !cone_width_deg.is_finite() || cone_width_deg <= 0.0 || cone_width_deg > 180.0 {
            return Err(Error::InvalidParameter(format!(
                "cone width must be in (0, 180] degrees, got {cone_width_deg}"
            )));
        }
        if !mistake_rate.is_finite() || !(0.0..0.5).contains(&mistake_rate) {
            return Err(Error::InvalidParameter(format!(
                "mistake rate must be in [0, 0.5), got {mistake_rate}"
            )));
        }
        Ok(Self {
            cone_width_deg,
            mistake_rate,
        })
    }

    pub fn cone_width_deg(&self) -> f64 {
        self.cone_width_deg
    }

    pub fn mistake_rate(&self) -> f64 {
        self.mistake_rate
    }

    /// Region the source occupies as seen from `x`. Coincident positions
    /// count as a relative bearing of 0, i.e. the front cone.
    pub fn region(&self, x: &UavState, s: &SourcePosition) -> ConeRegion {
        ConeGeometry::new(x, self.cone_width_deg).classify(s)
    }

    /// `P(z = 1 | x, s)`: `1 - mu` in the front cone, `mu` in the rear cone,
    /// `0.5` in between.
    pub fn prob_front(&self, x: &UavState, s: &SourcePosition) -> f64 {
        match self.region(x, s) {
            ConeRegion::FrontCone => 1.0 - self.mistake_rate,
            ConeRegion::RearCone => self.mistake_rate,
            ConeRegion::Uncertainty => 0.5,
        }
    }

    /// `P(z | x, s)` for either observation. The two observations sum to 1
    /// exactly because the rear probability is computed as the complement.
    pub fn likelihood(&self, x: &UavState, s: &SourcePosition, z: FovObservation) -> f64 {
        let p_front = self.prob_front(x, s);
        match z {
            FovObservation::Front => p_front,
            FovObservation::Rear => 1.0 - p_front,
        }
    }

    /// Draw one observation from the model.
    pub fn sample<R: Rng + ?Sized>(
        &self,
        x: &UavState,
        s: &SourcePosition,
        rng: &mut R,
    ) -> FovObservation {
        if rng.random::<f64>() < self.prob_front(x, s) {
            FovObservation::Front
        } else {
            FovObservation::Rear
        }
    }
}

/// A bearing measurement, east of north, wrapped to `[0, 360)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BearingObservation {
    bearing_deg: f64,
}

impl BearingObservation {
    pub fn new(bearing_deg: f64) -> Self {
        Self {
            bearing_deg: wrap_to_360(bearing_deg),
        }
    }

    pub fn bearing_deg(&self) -> f64 {
        self.bearing_deg
    }
}

/// Gaussian bearing sensor shared by the IB and RFB baselines.
///
/// `rotation_time_s` is 0 for IB (measurements arrive instantly) and
/// positive for RFB (the UAV must rotate in place before each measurement).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BearingModel {
    sigma_deg: f64,
    rotation_time_s: f64,
}

impl BearingModel {
    /// Requires `sigma_deg > 0` and `rotation_time_s >= 0`.
    pub fn new(sigma_deg: f64, rotation_time_s: f64) -> Result<Self> {
        if !sigma_deg.is_finite() || sigma_deg <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "bearing noise std must be positive, got {sigma_deg}"
            )));
        }
        if !rotation_time_s.is_finite() || rotation_time_s < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "rotation time must be non-negative, got {rotation_time_s}"
            )));
        }
        Ok(Self {
            sigma_deg,
            rotation_time_s,
        })
    }

    pub fn sigma_deg(&self) -> f64 {
        self.sigma_deg
    }

    pub fn rotation_time_s(&self) -> f64 {
        self.rotation_time_s
    }

    /// Sample a noisy bearing around a known true bearing.
    pub fn sample_at<R: Rng + ?Sized>(&self, true_bearing_deg: f64, rng: &mut R) -> BearingObservation {
        let noise = Normal::new(0.0, self.sigma_deg)
            .expect("validated sigma")
            .sample(rng);
        BearingObservation::new(true_bearing_deg + noise)
    }

    /// Sample a noisy bearing to the source; errors on coincident positions.
    pub fn sample<R: Rng + ?Sized>(
        &self,
        x: &UavState,
        s: &SourcePosition,
        rng: &mut R,
    ) -> Result<BearingObservation> {
        Ok(self.sample_at(bearing(x, s)?, rng))
    }

    /// Gaussian density (per degree) of `obs` around a known true bearing,
    /// evaluated on the smallest signed angular difference and clamped below
    /// by [`BEARING_DENSITY_FLOOR`].
    ///
    /// A single wrapped-Gaussian term suffices: at sigma well below 360
    /// degrees the neglected terms are smaller than the floor anyway.
    pub fn likelihood_at(&self, obs: BearingObservation, true_bearing_deg: f64) -> f64 {
        let err = wrap_angle(obs.bearing_deg - wrap_to_360(true_bearing_deg));
        let norm = 1.0 / (self.sigma_deg * (2.0 * std::f64::consts::PI).sqrt());
        let density = norm * (-0.5 * (err / self.sigma_deg).powi(2)).exp();
        density.max(BEARING_DENSITY_FLOOR)
    }

    /// Density of `obs` given UAV state and source; errors on coincident
    /// positions. The filter path uses [`BearingModel::bin_probability`]
    /// with a zero-bearing fallback instead.
    pub fn likelihood(
        &self,
        obs: BearingObservation,
        x: &UavState,
        s: &SourcePosition,
    ) -> Result<f64> {
        Ok(self.likelihood_at(obs, bearing(x, s)?))
    }

    /// Probability that a noisy bearing around `true_bearing_deg` lands in
    /// bin `bin_idx` of the [`BEARING_BIN_COUNT`]-bin discretization:
    /// Gaussian CDF differences on the wrapped bin edges.
    ///
    /// Over all bins this sums to 1 up to the single-term wrapping error and
    /// the far-tail cutoff, both negligible for sigma well below 360.
    pub fn bin_probability(&self, bin_idx: usize, true_bearing_deg: f64) -> f64 {
        debug_assert!(bin_idx < BEARING_BIN_COUNT);
        let half = BEARING_BIN_WIDTH_DEG / 2.0;
        let center_offset = wrap_angle(
            bin_idx as f64 * BEARING_BIN_WIDTH_DEG + half - true_bearing_deg,
        );
        if center_offset.abs() > half + BEARING_BIN_CUTOFF_SIGMAS * self.sigma_deg {
            return 0.0;
        }
        normal_cdf((center_offset + half) / self.sigma_deg)
            - normal_cdf((center_offset - half) / self.sigma_deg)
    }
}

fn normal_cdf(x: f64) -> f64 {
    0.5 * (1.0 + libm::erf(x / std::f64::consts::SQRT_2))
}
