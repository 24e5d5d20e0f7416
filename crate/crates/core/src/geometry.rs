//! Planar states, angle conventions, and bearing computation.
//!
//! Everything lives in a local north/east frame whose origin is the
//! south-west corner of the search area. Angles are degrees measured east of
//! north (clockwise when viewed from above), matching compass headings.

use crate::error::{Error, Result};

/// Positions closer than this are treated as coincident: no bearing exists.
pub const COINCIDENT_EPS_M: f64 = 1e-6;

/// Wrap an angle in degrees to the half-open interval `(-180, 180]`.
///
/// `-180` maps to the closed end `+180`.
pub fn wrap_angle(angle_deg: f64) -> f64 {
    assert!(angle_deg.is_finite(), "angle must be finite, got {angle_deg}");
    let a = angle_deg.rem_euclid(360.0);
    if a > 180.0 {
        a - 360.0
    } else {
        a
    }
}

/// Wrap an angle in degrees to `[0, 360)`.
pub fn wrap_to_360(angle_deg: f64) -> f64 {
    assert!(angle_deg.is_finite(), "angle must be finite, got {angle_deg}");
    angle_deg.rem_euclid(360.0)
}

/// UAV state: planar position plus heading, the direction the front antenna
/// points. The heading is always stored wrapped to `[0, 360)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UavState {
    north_m: f64,
    east_m: f64,
    heading_deg: f64,
}

impl UavState {
    /// Build a state, wrapping the heading to `[0, 360)`.
    ///
    /// Panics on non-finite components.
    pub fn new(north_m: f64, east_m: f64, heading_deg: f64) -> Self {
        assert!(
            north_m.is_finite() && east_m.is_finite(),
            "UAV position must be finite, got ({north_m}, {east_m})"
        );
        Self {
            north_m,
            east_m,
            heading_deg: wrap_to_360(heading_deg),
        }
    }

    pub fn north_m(&self) -> f64 {
        self.north_m
    }

    pub fn east_m(&self) -> f64 {
        self.east_m
    }

    /// Heading east of north, in `[0, 360)`.
    pub fn heading_deg(&self) -> f64 {
        self.heading_deg
    }
}

/// Stationary transmitter position in the search-area frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SourcePosition {
    north_m: f64,
    east_m: f64,
}

impl SourcePosition {
    /// Panics on non-finite components.
    pub fn new(north_m: f64, east_m: f64) -> Self {
        assert!(
            north_m.is_finite() && east_m.is_finite(),
            "source position must be finite, got ({north_m}, {east_m})"
        );
        Self { north_m, east_m }
    }

    pub fn north_m(&self) -> f64 {
        self.north_m
    }

    pub fn east_m(&self) -> f64 {
        self.east_m
    }
}

/// Euclidean distance between the UAV position and the source.
pub fn distance_m(x: &UavState, s: &SourcePosition) -> f64 {
    let dn = s.north_m - x.north_m;
    let de = s.east_m - x.east_m;
    (dn * dn + de * de).sqrt()
}

/// Bearing from an arbitrary planar point to the source, east of north in
/// `[0, 360)`, or `None` when the two points coincide.
pub fn bearing_from_point(
    from_north_m: f64,
    from_east_m: f64,
    s: &SourcePosition,
) -> Option<f64> {
    let dn = s.north_m - from_north_m;
    let de = s.east_m - from_east_m;
    if (dn * dn + de * de).sqrt() < COINCIDENT_EPS_M {
        return None;
    }
    Some(wrap_to_360(de.atan2(dn).to_degrees()))
}

/// Four-quadrant bearing from the UAV to the source, east of north in
/// `[0, 360)`.
///
/// Errors when the positions coincide within [`COINCIDENT_EPS_M`].
pub fn bearing(x: &UavState, s: &SourcePosition) -> Result<f64> {
    bearing_from_point(x.north_m, x.east_m, s).ok_or(Error::DegenerateGeometry)
}

/// Bearing minus heading, wrapped to `(-180, 180]`. A value of 0 means the
/// front antenna points directly at the source.
pub fn relative_bearing(x: &UavState, s: &SourcePosition) -> Result<f64> {
    Ok(wrap_angle(bearing(x, s)? - x.heading_deg))
}

/// Filter-path variant of [`relative_bearing`]: likelihoods evaluate the
/// model at grid-cell centers, and the UAV can legitimately fly over the
/// center of a cell. Treat that coincidence as a relative bearing of 0
/// instead of failing mid-update.
pub fn relative_bearing_or_zero(x: &UavState, s: &SourcePosition) -> f64 {
    match bearing_from_point(x.north_m, x.east_m, s) {
        Some(b) => wrap_angle(b - x.heading_deg),
        None => 0.0,
    }
}

/// Filter-path variant of [`bearing`]; 0 when the positions coincide.
pub fn bearing_or_zero(x: &UavState, s: &SourcePosition) -> f64 {
    bearing_from_point(x.north_m, x.east_m, s).unwrap_or(0.0)
}
