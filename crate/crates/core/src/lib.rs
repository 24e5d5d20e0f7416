//! RF source localization with a two-antenna field-of-view sensor.
//!
//! A UAV carrying one forward-facing and one rear-facing directional antenna
//! compares simultaneous signal-strength readings: the binary outcome says
//! which antenna read higher, i.e. whether the transmitter is more likely in
//! front of or behind the vehicle. This crate provides everything needed to
//! study that sensing modality at desk scale:
//!
//! - [`geometry`]: planar north/east state, headings, and bearing math.
//! - [`sensors`]: the field-of-view (FOV) observation model plus the
//!   instantaneous-bearing (IB) and rotate-for-bearing (RFB) baselines.
//! - [`belief`]: a histogram filter over a square search grid with entropy,
//!   max-norm, and predictive-observation queries.
//! - [`planner`]: forward-Euler dynamics, the discrete action set, and
//!   greedy mutual-information / random / RFB waypoint policies.
//! - [`simulator`]: seeded single trials, Monte-Carlo batches, and the
//!   cone-width and sample-rate sweeps, all reproducible and
//!   parallelism-independent.
//! - [`replay`]: flight-log ingestion and empirical sensor statistics
//!   (mistake rate, uncertainty-region balance).
//!
//! Batches fan trials across threads with rayon when the `parallel` feature
//! (default) is enabled; disabling it leaves a purely sequential harness with
//! identical results.

pub mod belief;
pub mod error;
pub mod geometry;
pub mod planner;
pub mod replay;
pub mod sensors;
pub mod simulator;

pub use belief::GridBelief;
pub use error::{Error, Result};
pub use geometry::{SourcePosition, UavState};
pub use sensors::{BearingModel, BearingObservation, ConeRegion, FovModel, FovObservation};
pub use simulator::{BatchSummary, Policy, SensorModel, TrialConfig, TrialResult};
