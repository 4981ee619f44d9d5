use chrono::{Duration, NaiveDate, NaiveDateTime};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MINUTES_PER_DAY: usize = 1440;

/// Hours represented by one 1-minute sample.
pub const STEP_HOURS: f64 = 1.0 / 60.0;

/// Start timestamp used by the synthetic generators.
pub fn default_start() -> NaiveDateTime {
    NaiveDate::from_ymd_opt(2021, 6, 1)
        .and_then(|d| d.and_hms_opt(0, 0, 0))
        .expect("valid date")
}

/// Uniformly sampled trajectory (kW, kvar or p.u.).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    pub start: NaiveDateTime,
    pub step_minutes: u32,
    pub values: Vec<f64>,
}

impl TimeSeries {
    /// One-minute series starting at `start`.
    pub fn new(start: NaiveDateTime, values: Vec<f64>) -> Self {
        TimeSeries {
            start,
            step_minutes: 1,
            values,
        }
    }

    pub fn zeros(start: NaiveDateTime, len: usize) -> Self {
        Self::new(start, vec![0.0; len])
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn timestamp(&self, i: usize) -> NaiveDateTime {
        self.start + Duration::minutes(i as i64 * self.step_minutes as i64)
    }

    pub fn step_hours(&self) -> f64 {
        self.step_minutes as f64 / 60.0
    }

    /// Energy (kWh) of a kW series.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.step_hours()
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Errors unless both series share start, step and length.
    pub fn check_aligned(&self, other: &TimeSeries) -> Result<()> {
        if self.start != other.start
            || self.step_minutes != other.step_minutes
            || self.len() != other.len()
        {
            return Err(Error::SeriesLengthMismatch(format!(
                "({}, {} min, {} samples) vs ({}, {} min, {} samples)",
                self.start,
                self.step_minutes,
                self.len(),
                other.start,
                other.step_minutes,
                other.len()
            )));
        }
        Ok(())
    }

    /// Sub-series of whole days `[day, day + days)`.
    pub fn days(&self, day: usize, days: usize) -> TimeSeries {
        let per_day = MINUTES_PER_DAY / self.step_minutes as usize;
        let lo = (day * per_day).min(self.len());
        let hi = ((day + days) * per_day).min(self.len());
        TimeSeries {
            start: self.timestamp(lo),
            step_minutes: self.step_minutes,
            values: self.values[lo..hi].to_vec(),
        }
    }

    /// Repeats or truncates the series to `len` samples.
    pub fn tiled(&self, len: usize) -> TimeSeries {
        let values = if self.values.is_empty() {
            vec![0.0; len]
        } else {
            self.values.iter().copied().cycle().take(len).collect()
        };
        TimeSeries {
            start: self.start,
            step_minutes: self.step_minutes,
            values,
        }
    }
}

/// `YYYY-MM-DDTHH:MM` formatting used by every CSV export.
pub fn format_timestamp(t: NaiveDateTime) -> String {
    t.format("%Y-%m-%dT%H:%M").to_string()
}

pub fn parse_timestamp(s: &str) -> Result<NaiveDateTime> {
    let s = s.trim();
    NaiveDateTime::parse_from_str(s, "%Y-%m-%dT%H:%M")
        .or_else(|_| NaiveDateTime::parse_from_str(s, "%Y-%m-%dT%H:%M:%S"))
        .or_else(|_| NaiveDateTime::parse_from_str(s, "%Y-%m-%d %H:%M:%S"))
        .map_err(|e| Error::Csv(format!("bad timestamp `{s}`: {e}")))
}
