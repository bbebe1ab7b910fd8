use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::operator::{max_abs_diff, Trajectory};

/// Detected period of an orbit tail.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Period {
    Periodic(usize),
    Aperiodic,
}

impl fmt::Display for Period {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Period::Periodic(p) => write!(f, "{p}"),
            Period::Aperiodic => f.write_str("aperiodic"),
        }
    }
}

impl Serialize for Period {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Period::Periodic(p) => s.serialize_u64(*p as u64),
            Period::Aperiodic => s.serialize_str("aperiodic"),
        }
    }
}

impl<'de> Deserialize<'de> for Period {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(usize),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(p) => Ok(Period::Periodic(p)),
            Raw::Text(t) if t == "aperiodic" => Ok(Period::Aperiodic),
            Raw::Text(t) => Err(serde::de::Error::custom(format!("unknown period {t:?}"))),
        }
    }
}

/// Smallest `p <= max_period` with `|x_{n+p} - x_n| < tol` for every pair
/// inside the final `2 * max_period` samples.
fn detect(len: usize, max_period: usize, tol: f64, dist: impl Fn(usize, usize) -> f64) -> Result<Period> {
    if max_period == 0 {
        return Err(Error::InvalidInput("max_period must be at least 1".into()));
    }
    let needed = 4 * max_period;
    if len < needed {
        return Err(Error::TrajectoryTooShort { needed, available: len });
    }
    let start = len - 2 * max_period;
    for p in 1..=max_period {
        if (start..len - p).all(|n| dist(n, n + p) < tol) {
            return Ok(Period::Periodic(p));
        }
    }
    Ok(Period::Aperiodic)
}

/// Period of the tail of a trajectory in the sup norm. The caller discards
/// any transient; at least `4 * max_period` points are required.
pub fn detect_period(traj: &Trajectory, max_period: usize, tol: f64) -> Result<Period> {
    let pts = &traj.points;
    detect(pts.len(), max_period, tol, |a, b| max_abs_diff(pts[a].coords(), pts[b].coords()))
}

/// [`detect_period`] for a scalar series.
pub fn detect_period_in_series(series: &[f64], max_period: usize, tol: f64) -> Result<Period> {
    detect(series.len(), max_period, tol, |a, b| (series[a] - series[b]).abs())
}
