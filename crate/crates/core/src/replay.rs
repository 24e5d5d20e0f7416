//! Flight-log replay: parse timestamped UAV/source records and compute the
//! empirical sensor statistics (mistake rate, uncertainty-region balance).
//!
//! The log format is the same CSV the simulator writes for FOV trials, so
//! simulated and real logs share one pipeline. An optional trailing `tag`
//! column carries a per-transmitter label.

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::{SourcePosition, UavState};
use crate::sensors::{ConeGeometry, ConeRegion, FovObservation};

/// Required log header (an optional `,tag` suffix is accepted).
pub const LOG_HEADER: &str = "t_s,uav_north_m,uav_east_m,heading_deg,src_north_m,src_east_m,z";

/// One timestamped observation: where the UAV was, where the transmitter
/// was, and the binary measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct LogRecord {
    pub t_s: f64,
    pub uav_north_m: f64,
    pub uav_east_m: f64,
    pub heading_deg: f64,
    pub src_north_m: f64,
    pub src_east_m: f64,
    pub z: FovObservation,
    pub tag: Option<String>,
}

impl LogRecord {
    pub fn uav_state(&self) -> UavState {
        UavState::new(self.uav_north_m, self.uav_east_m, self.heading_deg)
    }

    pub fn source(&self) -> SourcePosition {
        SourcePosition::new(self.src_north_m, self.src_east_m)
    }
}

/// Load and validate a log file. See [`parse_log`].
pub fn load_log(path: &Path) -> Result<Vec<LogRecord>> {
    parse_log(BufReader::new(File::open(path)?))
}

/// Parse a log from any reader. The header must match [`LOG_HEADER`]
/// (optionally with a trailing `tag` column); malformed rows, non-finite
/// values, z outside {0, 1}, and decreasing timestamps all produce an error
/// naming the 1-based line.
pub fn parse_log<R: BufRead>(reader: R) -> Result<Vec<LogRecord>> {
    let mut lines = reader.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| Error::Parse {
        line: 1,
        message: "empty file: expected header".into(),
    })?;
    let header = header?;
    let tagged = match header.trim_end() {
        h if h == LOG_HEADER => false,
        h if h == format!("{LOG_HEADER},tag") => true,
        h => {
            return Err(Error::Parse {
                line: 1,
                message: format!("unexpected header {h:?}, expected {LOG_HEADER:?}"),
            })
        }
    };

    let expected_fields = if tagged { 8 } else { 7 };
    let mut records = Vec::new();
    let mut prev_t = f64::NEG_INFINITY;
    for (idx, line) in lines {
        let line_no = idx + 1;
        let line = line?;
        let trimmed = line.trim_end();
        if trimmed.is_empty() {
            continue;
        }
        let fields: Vec<&str> = trimmed.split(',').collect();
        if fields.len() != expected_fields {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected {expected_fields} fields, got {}", fields.len()),
            });
        }
        let num = |i: usize, name: &str| -> Result<f64> {
            let v: f64 = fields[i].parse().map_err(|_| Error::Parse {
                line: line_no,
                message: format!("{name}: cannot parse {:?} as a number", fields[i]),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("{name}: non-finite value {v}"),
                });
            }
            Ok(v)
        };
        let t_s = num(0, "t_s")?;
        if t_s < prev_t {
            return Err(Error::Parse {
                line: line_no,
                message: format!("timestamps must be non-decreasing, {t_s} after {prev_t}"),
            });
        }
        prev_t = t_s;
        let z_raw: u8 = fields[6].parse().map_err(|_| Error::Parse {
            line: line_no,
            message: format!("z: expected 0 or 1, got {:?}", fields[6]),
        })?;
        let z = FovObservation::try_from(z_raw).map_err(|_| Error::Parse {
            line: line_no,
            message: format!("z: expected 0 or 1, got {z_raw}"),
        })?;
        records.push(LogRecord {
            t_s,
            uav_north_m: num(1, "uav_north_m")?,
            uav_east_m: num(2, "uav_east_m")?,
            heading_deg: num(3, "heading_deg")?,
            src_north_m: num(4, "src_north_m")?,
            src_east_m: num(5, "src_east_m")?,
            z,
            tag: if tagged {
                Some(fields[7].to_string())
            } else {
                None
            },
        });
    }
    Ok(records)
}

/// Classify which sensor region the transmitter occupied for one record,
/// using the same branching as the FOV likelihood. `cone_width_deg` must lie
/// in `(0, 180]`.
pub fn classify(record: &LogRecord, cone_width_deg: f64) -> ConeRegion {
    ConeGeometry::new(&record.uav_state(), cone_width_deg).classify(&record.source())
}

/// Counts and rates extracted from a replayed log.
///
/// An in-cone observation is correct when it names the cone the transmitter
/// was actually in: `z = 1` in the front cone or `z = 0` in the rear cone.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EmpiricalStats {
    pub in_cone_total: u64,
    pub in_cone_correct: u64,
    pub uncertainty_total: u64,
    pub uncertainty_z1: u64,
}

impl EmpiricalStats {
    /// Fraction of in-cone observations naming the wrong cone, or `None`
    /// when no in-cone observation exists. Computed as an exact integer
    /// ratio (wrong / total).
    pub fn mistake_rate_hat(&self) -> Option<f64> {
        if self.in_cone_total == 0 {
            return None;
        }
        Some((self.in_cone_total - self.in_cone_correct) as f64 / self.in_cone_total as f64)
    }

    /// Fraction of uncertainty-region observations reading 1, or `None`
    /// when no uncertainty-region observation exists.
    pub fn uncertainty_z1_frac(&self) -> Option<f64> {
        if self.uncertainty_total == 0 {
            return None;
        }
        Some(self.uncertainty_z1 as f64 / self.uncertainty_total as f64)
    }
}

/// Tally empirical sensor statistics over a non-empty record set.
pub fn empirical_stats(records: &[LogRecord], cone_width_deg: f64) -> Result<EmpiricalStats> {
    if records.is_empty() {
        return Err(Error::InvalidParameter(
            "empirical statistics need at least one record".into(),
        ));
    }
    let mut stats = EmpiricalStats {
        in_cone_total: 0,
        in_cone_correct: 0,
        uncertainty_total: 0,
        uncertainty_z1: 0,
    };
    for record in records {
        match classify(record, cone_width_deg) {
            ConeRegion::FrontCone => {
                stats.in_cone_total += 1;
                if record.z == FovObservation::Front {
                    stats.in_cone_correct += 1;
                }
            }
            ConeRegion::RearCone => {
                stats.in_cone_total += 1;
                if record.z == FovObservation::Rear {
                    stats.in_cone_correct += 1;
                }
            }
            ConeRegion::Uncertainty => {
                stats.uncertainty_total += 1;
                if record.z == FovObservation::Front {
                    stats.uncertainty_z1 += 1;
                }
            }
        }
    }
    Ok(stats)
}

/// Group records by their optional tag (insertion order), for per-transmitter
/// breakdowns. Untagged records group under `None`.
pub fn group_by_tag(records: &[LogRecord]) -> Vec<(Option<String>, Vec<LogRecord>)> {
    let mut groups: Vec<(Option<String>, Vec<LogRecord>)> = Vec::new();
    for record in records {
        match groups.iter_mut().find(|(tag, _)| *tag == record.tag) {
            Some((_, group)) => group.push(record.clone()),
            None => groups.push((record.tag.clone(), vec![record.clone()])),
        }
    }
    groups
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sensors::FovModel;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn record(delta_deg: f64, z: u8) -> LogRecord {
        // Source due north of the origin; heading -delta realizes the
        // requested relative bearing.
        LogRecord {
            t_s: 0.0,
            uav_north_m: 0.0,
            uav_east_m: 0.0,
            heading_deg: -delta_deg,
            src_north_m: 100.0,
            src_east_m: 0.0,
            z: FovObservation::try_from(z).unwrap(),
            tag: None,
        }
    }

    #[test]
    fn parse_well_formed_log() {
        let text = "t_s,uav_north_m,uav_east_m,heading_deg,src_north_m,src_east_m,z\n\
                    0,100,100,0,22.5,77.5,1\n\
                    1,105,100,10,22.5,77.5,0\n\
                    2,110,100,20,22.5,77.5,1\n";
        let records = parse_log(text.as_bytes()).unwrap();
        assert_eq!(records.len(), 3);
        assert_eq!(records[1].z, FovObservation::Rear);
        assert_eq!(records[2].t_s, 2.0);
        assert_eq!(records[0].tag, None);
    }

    #[test]
    fn parse_rejects_bad_z_with_line_number() {
        let text = format!("{LOG_HEADER}\n0,0,0,0,1,1,1\n1,0,0,0,1,1,2\n");
        let err = parse_log(text.as_bytes()).unwrap_err();
        match err {
            Error::Parse { line, message } => {
                assert_eq!(line, 3);
                assert!(message.contains('2'), "{message}");
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn parse_empty_log_with_header_is_valid() {
        let text = format!("{LOG_HEADER}\n");
        assert!(parse_log(text.as_bytes()).unwrap().is_empty());
    }

    #[test]
    fn parse_rejects_wrong_header_and_missing_columns() {
        let err = parse_log("a,b,c\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));

        let text = format!("{LOG_HEADER}\n0,0,0,0,1,1\n");
        let err = parse_log(text.as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
    }

    #[test]
    fn parse_rejects_unsorted_timestamps_and_non_finite() {
        let text = format!("{LOG_HEADER}\n1,0,0,0,1,1,1\n0.5,0,0,0,1,1,1\n");
        let err = parse_log(text.as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }));

        let text = format!("{LOG_HEADER}\n0,NaN,0,0,1,1,1\n");
        let err = parse_log(text.as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
    }

    #[test]
    fn parse_accepts_optional_tag_column() {
        let text = format!("{LOG_HEADER},tag\n0,0,0,0,1,1,1,collar\n1,0,0,0,1,1,0,phone\n");
        let records = parse_log(text.as_bytes()).unwrap();
        assert_eq!(records[0].tag.as_deref(), Some("collar"));
        let groups = group_by_tag(&records);
        assert_eq!(groups.len(), 2);
    }

    #[test]
    fn classify_regions() {
        assert_eq!(classify(&record(10.0, 1), 120.0), ConeRegion::FrontCone);
        assert_eq!(classify(&record(175.0, 1), 120.0), ConeRegion::RearCone);
        assert_eq!(classify(&record(90.0, 1), 120.0), ConeRegion::Uncertainty);
        // Boundary counts as in-cone.
        assert_eq!(classify(&record(60.0, 1), 120.0), ConeRegion::FrontCone);
    }

    #[test]
    fn classify_agrees_with_fov_likelihood_branch() {
        let m = FovModel::new(120.0, 0.1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..2000 {
            let rec = LogRecord {
                t_s: 0.0,
                uav_north_m: rng.random::<f64>() * 200.0,
                uav_east_m: rng.random::<f64>() * 200.0,
                heading_deg: rng.random::<f64>() * 360.0,
                src_north_m: rng.random::<f64>() * 200.0,
                src_east_m: rng.random::<f64>() * 200.0,
                z: FovObservation::Front,
                tag: None,
            };
            assert_eq!(
                classify(&rec, 120.0),
                m.region(&rec.uav_state(), &rec.source())
            );
        }
    }

    #[test]
    fn empirical_stats_fixture_matches_hand_counts() {
        // 179 in-cone records with 166 correct, 203 uncertainty records with
        // 111 reading 1.
        let mut records = Vec::new();
        for i in 0..179u32 {
            let correct = i < 166;
            let front = i % 2 == 0;
            let delta = if front { 10.0 } else { 170.0 };
            let z = match (front, correct) {
                (true, true) | (false, false) => 1,
                _ => 0,
            };
            records.push(record(delta, z));
        }
        for i in 0..203u32 {
            records.push(record(90.0, u8::from(i < 111)));
        }
        let stats = empirical_stats(&records, 120.0).unwrap();
        assert_eq!(stats.in_cone_total, 179);
        assert_eq!(stats.in_cone_correct, 166);
        assert_eq!(stats.uncertainty_total, 203);
        assert_eq!(stats.uncertainty_z1, 111);
        assert_eq!(stats.mistake_rate_hat(), Some(13.0 / 179.0));
        assert!((stats.mistake_rate_hat().unwrap() - 0.0726).abs() < 1e-4);
        assert_eq!(stats.uncertainty_z1_frac(), Some(111.0 / 203.0));
        assert!((stats.uncertainty_z1_frac().unwrap() - 0.5468).abs() < 1e-4);
    }

    #[test]
    fn empirical_stats_undefined_fractions() {
        let only_uncertainty = vec![record(90.0, 1)];
        let stats = empirical_stats(&only_uncertainty, 120.0).unwrap();
        assert_eq!(stats.mistake_rate_hat(), None);
        assert_eq!(stats.uncertainty_z1_frac(), Some(1.0));

        let only_cone = vec![record(0.0, 1)];
        let stats = empirical_stats(&only_cone, 120.0).unwrap();
        assert_eq!(stats.uncertainty_z1_frac(), None);
        assert_eq!(stats.mistake_rate_hat(), Some(0.0));

        assert!(empirical_stats(&[], 120.0).is_err());
    }

    #[test]
    fn empirical_stats_is_permutation_invariant() {
        let mut records: Vec<LogRecord> = (0..50)
            .map(|i| record(f64::from(i) * 7.3 - 180.0, u8::from(i % 3 == 0)))
            .collect();
        let forward = empirical_stats(&records, 120.0).unwrap();
        records.reverse();
        let reversed = empirical_stats(&records, 120.0).unwrap();
        assert_eq!(forward, reversed);
    }
}
