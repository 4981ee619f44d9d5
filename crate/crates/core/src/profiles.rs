//! Synthetic system-load and PV generation profiles at 1-minute resolution.
//!
//! System loads are a base daily shape times a lognormal per-bus peak factor,
//! a per-bus time shift and AR(1) minute-scale noise; the aggregate is then
//! rescaled so its coincident peak equals the feeder's calibrated peak.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use chrono::{Duration, NaiveDateTime};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::Feeder;
use crate::timeseries::{
    default_start, format_timestamp, parse_timestamp, TimeSeries, MINUTES_PER_DAY,
};

/// Power factor applied to generated system loads (lagging).
pub const LOAD_POWER_FACTOR: f64 = 0.95;

/// Clearness of the seven representative weather days, sunny to overcast.
pub const PV_CLEARNESS: [f64; 7] = [1.0, 0.85, 0.7, 0.5, 0.35, 0.2, 0.1];

const SUNRISE_H: f64 = 6.0;
const SUNSET_H: f64 = 20.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LoadPattern {
    Residential,
    Commercial,
}

impl LoadPattern {
    pub fn as_str(self) -> &'static str {
        match self {
            LoadPattern::Residential => "residential",
            LoadPattern::Commercial => "commercial",
        }
    }

    /// Normalized base shape (peak 1) at hour-of-day `h`.
    pub fn shape(self, h: f64) -> f64 {
        match self {
            LoadPattern::Residential => residential_raw(h) / residential_peak(),
            LoadPattern::Commercial => commercial_raw(h) / commercial_peak(),
        }
    }
}

fn bump(h: f64, center: f64, width: f64) -> f64 {
    let mut d = (h - center).rem_euclid(24.0);
    if d > 12.0 {
        d -= 24.0;
    }
    (-0.5 * (d / width).powi(2)).exp()
}

fn residential_raw(h: f64) -> f64 {
    0.30 + 0.22 * bump(h, 7.5, 1.2) + 0.70 * bump(h, 19.0, 2.2)
}

fn commercial_raw(h: f64) -> f64 {
    let rise = 1.0 / (1.0 + (-(h - 8.5) / 0.5).exp());
    let fall = 1.0 / (1.0 + ((h - 17.5) / 0.5).exp());
    0.25 + 0.75 * rise * fall
}

fn daily_peak(f: fn(f64) -> f64) -> f64 {
    (0..MINUTES_PER_DAY)
        .map(|m| f(m as f64 / 60.0))
        .fold(0.0, f64::max)
}

fn residential_peak() -> f64 {
    use std::sync::OnceLock;
    static PEAK: OnceLock<f64> = OnceLock::new();
    *PEAK.get_or_init(|| daily_peak(residential_raw))
}

fn commercial_peak() -> f64 {
    use std::sync::OnceLock;
    static PEAK: OnceLock<f64> = OnceLock::new();
    *PEAK.get_or_init(|| daily_peak(commercial_raw))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BusProfile {
    pub bus: String,
    /// kW
    pub p: TimeSeries,
    /// kvar
    pub q: TimeSeries,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileSet {
    pub pattern: Option<LoadPattern>,
    pub seed: u64,
    /// Sum of individual bus peaks over the coincident aggregate peak.
    pub diversity_factor: f64,
    pub buses: Vec<BusProfile>,
}

impl ProfileSet {
    pub fn empty() -> Self {
        ProfileSet {
            pattern: None,
            seed: 0,
            diversity_factor: 1.0,
            buses: Vec::new(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.buses.is_empty()
    }

    /// Common series length, if any bus is present.
    pub fn len(&self) -> Option<usize> {
        self.buses.first().map(|b| b.p.len())
    }

    pub fn aggregate_p(&self) -> Option<TimeSeries> {
        let first = self.buses.first()?;
        let mut total = vec![0.0; first.p.len()];
        for b in &self.buses {
            for (t, v) in total.iter_mut().zip(&b.p.values) {
                *t += v;
            }
        }
        Some(TimeSeries::new(first.p.start, total))
    }

    /// Multiplies every sample by `k`.
    pub fn scaled(&self, k: f64) -> ProfileSet {
        let mut out = self.clone();
        for b in &mut out.buses {
            b.p.values.iter_mut().for_each(|v| *v *= k);
            b.q.values.iter_mut().for_each(|v| *v *= k);
        }
        out
    }

    /// Samples `[lo, hi)` of every bus.
    pub fn window(&self, lo: usize, hi: usize) -> ProfileSet {
        let mut out = self.clone();
        for b in &mut out.buses {
            for s in [&mut b.p, &mut b.q] {
                s.start = s.timestamp(lo);
                s.values = s.values[lo..hi].to_vec();
            }
        }
        out
    }

    /// Writes `timestamp,bus_id,p_kw,q_kvar`, time-major.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["timestamp", "bus_id", "p_kw", "q_kvar"])?;
        let len = self.len().unwrap_or(0);
        for t in 0..len {
            for b in &self.buses {
                w.write_record([
                    format_timestamp(b.p.timestamp(t)),
                    b.bus.clone(),
                    format!("{:.6}", b.p.values[t]),
                    format!("{:.6}", b.q.values[t]),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }

    /// Reads `timestamp,bus_id,p_kw,q_kvar`. Every bus must cover the same
    /// uniform 1-minute timestamps.
    pub fn read_csv<R: Read>(input: R) -> Result<ProfileSet> {
        #[derive(Deserialize)]
        struct Row {
            timestamp: String,
            bus_id: String,
            p_kw: f64,
            q_kvar: f64,
        }
        let mut rdr = csv::Reader::from_reader(input);
        let mut order: Vec<String> = Vec::new();
        let mut data: BTreeMap<String, Vec<(NaiveDateTime, f64, f64)>> = BTreeMap::new();
        for row in rdr.deserialize() {
            let row: Row = row?;
            if !(row.p_kw.is_finite() && row.q_kvar.is_finite()) {
                return Err(Error::Csv(format!(
                    "non-finite value for bus `{}`",
                    row.bus_id
                )));
            }
            let ts = parse_timestamp(&row.timestamp)?;
            let entry = data.entry(row.bus_id.clone()).or_insert_with(|| {
                order.push(row.bus_id.clone());
                Vec::new()
            });
            entry.push((ts, row.p_kw, row.q_kvar));
        }
        let mut buses = Vec::with_capacity(order.len());
        let mut reference: Option<Vec<NaiveDateTime>> = None;
        for id in order {
            let mut rows = data.remove(&id).expect("bus recorded");
            rows.sort_by_key(|r| r.0);
            let stamps: Vec<NaiveDateTime> = rows.iter().map(|r| r.0).collect();
            if stamps
                .windows(2)
                .any(|w| w[1] - w[0] != Duration::minutes(1))
            {
                return Err(Error::SeriesLengthMismatch(format!(
                    "bus `{id}` is not on a uniform 1-minute grid"
                )));
            }
            match &reference {
                Some(r) if *r != stamps => {
                    return Err(Error::SeriesLengthMismatch(format!(
                        "bus `{id}` timestamps differ"
                    )));
                }
                None => reference = Some(stamps.clone()),
                _ => {}
            }
            let start = stamps[0];
            buses.push(BusProfile {
                bus: id,
                p: TimeSeries::new(start, rows.iter().map(|r| r.1).collect()),
                q: TimeSeries::new(start, rows.iter().map(|r| r.2).collect()),
            });
        }
        let mut set = ProfileSet {
            pattern: None,
            seed: 0,
            diversity_factor: 1.0,
            buses,
        };
        set.diversity_factor = diversity_factor(&set);
        Ok(set)
    }
}

fn diversity_factor(set: &ProfileSet) -> f64 {
    let Some(agg) = set.aggregate_p() else {
        return 1.0;
    };
    let sum_peaks: f64 = set.buses.iter().map(|b| b.p.max()).sum();
    let peak = agg.max();
    if peak > 0.0 {
        sum_peaks / peak
    } else {
        1.0
    }
}

/// Diversified per-bus load profiles for every load bus of `feeder`.
///
/// Feeders without system load (the dedicated feeder) yield an empty set.
pub fn generate_system_loads(
    feeder: &Feeder,
    pattern: LoadPattern,
    days: usize,
    seed: u64,
) -> Result<ProfileSet> {
    if feeder.eligible_buses().is_empty() {
        return Err(Error::NoLoadBuses);
    }
    if days == 0 {
        return Err(Error::SeriesLengthMismatch(
            "days must be at least 1".into(),
        ));
    }
    let load_buses: Vec<usize> = feeder.load_buses().collect();
    if load_buses.is_empty() {
        return Ok(ProfileSet {
            pattern: Some(pattern),
            seed,
            ..ProfileSet::empty()
        });
    }

    let len = days * MINUTES_PER_DAY;
    let start = default_start();
    let peak_scale = LogNormal::new(0.0, 0.25).expect("valid lognormal");
    let noise = Normal::new(0.0, 0.025).expect("valid normal");
    let day_noise = Normal::new(1.0, 0.05).expect("valid normal");
    const AR_COEF: f64 = 0.98;

    let mut raw: Vec<Vec<f64>> = Vec::with_capacity(load_buses.len());
    for (k, &bi) in load_buses.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(k as u64 + 1);
        let scale = feeder.buses[bi].peak_kw * peak_scale.sample(&mut rng);
        let shift_h: f64 = rng.random_range(-1.0..1.0);
        let mut ar = 0.0;
        let mut series = Vec::with_capacity(len);
        let mut day_factor = 1.0;
        for t in 0..len {
            if t % MINUTES_PER_DAY == 0 {
                day_factor = day_noise.sample(&mut rng);
            }
            ar = AR_COEF * ar + noise.sample(&mut rng);
            let h = (t % MINUTES_PER_DAY) as f64 / 60.0 - shift_h;
            let v = scale * pattern.shape(h) * day_factor * (1.0 + ar);
            series.push(v.max(0.0));
        }
        raw.push(series);
    }

    let target = feeder.total_peak_kw();
    let mut aggregate = vec![0.0; len];
    for s in &raw {
        for (a, v) in aggregate.iter_mut().zip(s) {
            *a += v;
        }
    }
    let agg_peak = aggregate.iter().copied().fold(0.0, f64::max);
    let k = if agg_peak > 0.0 {
        target / agg_peak
    } else {
        0.0
    };
    let tan_phi = LOAD_POWER_FACTOR.acos().tan();

    let buses = load_buses
        .iter()
        .zip(raw)
        .map(|(&bi, s)| {
            let p: Vec<f64> = s.into_iter().map(|v| v * k).collect();
            let q: Vec<f64> = p.iter().map(|v| v * tan_phi).collect();
            BusProfile {
                bus: feeder.buses[bi].id.clone(),
                p: TimeSeries::new(start, p),
                q: TimeSeries::new(start, q),
            }
        })
        .collect();
    let mut set = ProfileSet {
        pattern: Some(pattern),
        seed,
        diversity_factor: 1.0,
        buses,
    };
    set.diversity_factor = diversity_factor(&set);
    Ok(set)
}

/// Clear-sky shape: half sine over the daylight window, peak 1 at 13:00.
pub fn clear_sky(h: f64) -> f64 {
    if (SUNRISE_H..=SUNSET_H).contains(&h) {
        (std::f64::consts::PI * (h - SUNRISE_H) / (SUNSET_H - SUNRISE_H))
            .sin()
            .max(0.0)
    } else {
        0.0
    }
}

/// One-day PV output (kW) for each representative weather day, cycling
/// through [`PV_CLEARNESS`]. Intermediate days carry cloud transients that
/// only attenuate output.
pub fn generate_pv_profiles(days: usize, capacity_kva: f64, seed: u64) -> Vec<TimeSeries> {
    let opacity_noise = Normal::new(0.0, 0.08).expect("valid normal");
    (0..days)
        .map(|d| {
            let clearness = PV_CLEARNESS[d % PV_CLEARNESS.len()];
            let cloudy = clearness < 1.0 && clearness > PV_CLEARNESS[PV_CLEARNESS.len() - 1];
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(1000 + d as u64);
            let mut x: f64 = 0.0;
            let values = (0..MINUTES_PER_DAY)
                .map(|m| {
                    let h = m as f64 / 60.0;
                    let mut v = capacity_kva * clearness * clear_sky(h);
                    if cloudy {
                        x = 0.97 * x + opacity_noise.sample(&mut rng);
                        v *= 1.0 - 0.35 * x.clamp(0.0, 1.0);
                    }
                    v
                })
                .collect();
            TimeSeries::new(default_start() + Duration::days(d as i64), values)
        })
        .collect()
}

/// Concatenates daily series into one continuous series.
pub fn concat_days(days: &[TimeSeries]) -> TimeSeries {
    let start = days.first().map(|d| d.start).unwrap_or_else(default_start);
    TimeSeries::new(
        start,
        days.iter().flat_map(|d| d.values.iter().copied()).collect(),
    )
}

pub fn write_pv_csv<W: Write>(series: &TimeSeries, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["timestamp", "p_kw"])?;
    for (i, v) in series.values.iter().enumerate() {
        w.write_record([format_timestamp(series.timestamp(i)), format!("{v:.6}")])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_pv_csv<R: Read>(input: R) -> Result<TimeSeries> {
    #[derive(Deserialize)]
    struct Row {
        timestamp: String,
        p_kw: f64,
    }
    let mut rdr = csv::Reader::from_reader(input);
    let mut stamps = Vec::new();
    let mut values = Vec::new();
    for row in rdr.deserialize() {
        let row: Row = row?;
        stamps.push(parse_timestamp(&row.timestamp)?);
        values.push(row.p_kw);
    }
    if stamps.is_empty() {
        return Err(Error::EmptySeries);
    }
    if stamps
        .windows(2)
        .any(|w| w[1] - w[0] != Duration::minutes(1))
    {
        return Err(Error::SeriesLengthMismatch(
            "PV series is not on a uniform 1-minute grid".into(),
        ));
    }
    Ok(TimeSeries::new(stamps[0], values))
}
