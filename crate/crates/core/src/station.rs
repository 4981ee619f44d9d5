//! Agent-based simulation of a heavy-duty charging station.
//!
//! Vehicles arrive, wait in a FIFO queue for a free port, charge along an
//! SOC-dependent acceptance curve and leave at their target SOC or when
//! their dwell deadline passes. Time advances in fixed steps (1 minute by
//! default).

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use chrono::NaiveDateTime;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par_map;
use crate::timeseries::{default_start, TimeSeries, MINUTES_PER_DAY};

pub const DEFAULT_PORT_POWER_KW: f64 = 1200.0;
pub const DEFAULT_VEHICLES_PER_DAY: usize = 72;
pub const DEFAULT_DWELL_CAP_MIN: u32 = 120;
pub const DEFAULT_DAYS: usize = 30;
pub const BATTERY_RANGE_KWH: (f64, f64) = (660.0, 1200.0);
pub const INITIAL_SOC_RANGE: (f64, f64) = (0.1, 0.4);
pub const TARGET_SOC: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrafficPattern {
    /// Arrivals concentrated between 08:00 and 18:00.
    Daytime,
    /// Arrivals spread over the whole day.
    Multishift,
}

impl TrafficPattern {
    pub const ALL: [TrafficPattern; 2] = [TrafficPattern::Daytime, TrafficPattern::Multishift];

    pub fn as_str(self) -> &'static str {
        match self {
            TrafficPattern::Daytime => "daytime",
            TrafficPattern::Multishift => "multishift",
        }
    }
}

impl fmt::Display for TrafficPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TrafficPattern {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "daytime" => Ok(TrafficPattern::Daytime),
            "multishift" | "multi-shift" => Ok(TrafficPattern::Multishift),
            _ => Err(Error::InvalidStation(format!(
                "unknown charging pattern `{s}`"
            ))),
        }
    }
}

/// Maximum power (kW) a battery accepts as a function of SOC: flat up to
/// `knee_soc`, then linear down to `floor_fraction * max_kw` at SOC 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AcceptanceCurve {
    pub max_kw: f64,
    pub knee_soc: f64,
    pub floor_fraction: f64,
}

impl AcceptanceCurve {
    pub fn flat(kw: f64) -> Self {
        AcceptanceCurve {
            max_kw: kw,
            knee_soc: 1.0,
            floor_fraction: 1.0,
        }
    }

    pub fn power(&self, soc: f64) -> f64 {
        if soc <= self.knee_soc {
            return self.max_kw;
        }
        let span = (1.0 - self.knee_soc).max(f64::EPSILON);
        let frac = ((soc - self.knee_soc) / span).min(1.0);
        self.max_kw * (1.0 - frac * (1.0 - self.floor_fraction))
    }
}

impl Default for AcceptanceCurve {
    fn default() -> Self {
        AcceptanceCurve {
            max_kw: DEFAULT_PORT_POWER_KW,
            knee_soc: 0.8,
            floor_fraction: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VehicleAgent {
    pub id: usize,
    pub battery_kwh: f64,
    /// Minutes from the start of the run.
    pub arrival_min: u32,
    pub initial_soc: f64,
    pub target_soc: f64,
    /// Minutes from the start of the run; the vehicle leaves by then.
    pub deadline_min: u32,
    pub acceptance: AcceptanceCurve,
}

impl VehicleAgent {
    pub fn energy_needed(&self) -> f64 {
        (self.target_soc - self.initial_soc).max(0.0) * self.battery_kwh
    }
}

/// Distributions behind [`sample_traffic_with`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrafficParams {
    pub pattern: TrafficPattern,
    pub vehicles_per_day: usize,
    pub days: usize,
    pub dwell_cap_min: u32,
    pub battery_kwh: (f64, f64),
    pub initial_soc: (f64, f64),
    pub target_soc: f64,
    pub acceptance: AcceptanceCurve,
}

impl Default for TrafficParams {
    fn default() -> Self {
        TrafficParams {
            pattern: TrafficPattern::Multishift,
            vehicles_per_day: DEFAULT_VEHICLES_PER_DAY,
            days: DEFAULT_DAYS,
            dwell_cap_min: DEFAULT_DWELL_CAP_MIN,
            battery_kwh: BATTERY_RANGE_KWH,
            initial_soc: INITIAL_SOC_RANGE,
            target_soc: TARGET_SOC,
            acceptance: AcceptanceCurve::default(),
        }
    }
}

/// Default traffic with the given pattern, volume and horizon.
pub fn sample_traffic(
    pattern: TrafficPattern,
    vehicles_per_day: usize,
    days: usize,
    seed: u64,
) -> Vec<VehicleAgent> {
    sample_traffic_with(
        &TrafficParams {
            pattern,
            vehicles_per_day,
            days,
            ..TrafficParams::default()
        },
        seed,
    )
}

/// Exactly `vehicles_per_day` arrivals per day, sorted by arrival time.
pub fn sample_traffic_with(params: &TrafficParams, seed: u64) -> Vec<VehicleAgent> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let day_min = MINUTES_PER_DAY as f64;
    let uniform_day = Uniform::new(0.0, day_min).expect("valid range");
    let morning = Normal::new(10.0 * 60.0, 90.0).expect("valid normal");
    let afternoon = Normal::new(15.0 * 60.0, 90.0).expect("valid normal");
    let shift = Normal::new(0.0, 60.0).expect("valid normal");
    let battery =
        Uniform::new_inclusive(params.battery_kwh.0, params.battery_kwh.1).expect("valid range");
    let soc =
        Uniform::new_inclusive(params.initial_soc.0, params.initial_soc.1).expect("valid range");

    let mut agents = Vec::with_capacity(params.vehicles_per_day * params.days);
    for day in 0..params.days {
        let offset = (day * MINUTES_PER_DAY) as f64;
        for _ in 0..params.vehicles_per_day {
            let minute = match params.pattern {
                TrafficPattern::Daytime => loop {
                    let d = if rng.random_bool(0.5) {
                        &morning
                    } else {
                        &afternoon
                    };
                    let m = d.sample(&mut rng);
                    if (0.0..day_min).contains(&m) {
                        break m;
                    }
                },
                TrafficPattern::Multishift => {
                    if rng.random_bool(0.7) {
                        uniform_day.sample(&mut rng)
                    } else {
                        let centre: f64 = [6.0, 14.0, 22.0][rng.random_range(0..3)] * 60.0;
                        (centre + shift.sample(&mut rng)).rem_euclid(day_min)
                    }
                }
            };
            let arrival_min = (offset + minute).floor() as u32;
            agents.push(VehicleAgent {
                id: 0,
                battery_kwh: battery.sample(&mut rng),
                arrival_min,
                initial_soc: soc.sample(&mut rng),
                target_soc: params.target_soc,
                deadline_min: arrival_min + params.dwell_cap_min,
                acceptance: params.acceptance,
            });
        }
    }
    agents.sort_by_key(|a| a.arrival_min);
    for (i, a) in agents.iter_mut().enumerate() {
        a.id = i;
    }
    agents
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StationConfig {
    pub ports: usize,
    pub port_power_kw: f64,
    /// Ceiling on simultaneous draw; `None` means `ports * port_power_kw`.
    pub station_cap_kva: Option<f64>,
    pub pattern: TrafficPattern,
}

impl StationConfig {
    pub fn new(ports: usize, pattern: TrafficPattern) -> Self {
        StationConfig {
            ports,
            pattern,
            ..StationConfig::default()
        }
    }

    pub fn station_cap(&self) -> f64 {
        self.station_cap_kva
            .unwrap_or(self.ports as f64 * self.port_power_kw)
    }

    /// Highest draw the station can ever produce.
    pub fn peak_bound(&self) -> f64 {
        (self.ports as f64 * self.port_power_kw).min(self.station_cap())
    }

    pub fn validate(&self) -> Result<()> {
        if self.ports == 0 {
            return Err(Error::InvalidStation("ports must be at least 1".into()));
        }
        if !(self.port_power_kw > 0.0) {
            return Err(Error::InvalidStation(format!(
                "port power {} kW",
                self.port_power_kw
            )));
        }
        if self.station_cap() < self.port_power_kw {
            return Err(Error::InvalidStation(format!(
                "station cap {} kVA below port power {} kW",
                self.station_cap(),
                self.port_power_kw
            )));
        }
        Ok(())
    }
}

impl Default for StationConfig {
    fn default() -> Self {
        StationConfig {
            ports: 3,
            port_power_kw: DEFAULT_PORT_POWER_KW,
            station_cap_kva: None,
            pattern: TrafficPattern::Multishift,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StationRun {
    pub load_profile: TimeSeries,
    /// kWh delivered, indexed like the input agents.
    pub vehicle_energy: Vec<f64>,
    pub final_soc: Vec<f64>,
    pub max_wait_min: u32,
    pub mean_wait_min: f64,
    /// Vehicles that gave up before reaching a port.
    pub abandoned: usize,
    /// Most vehicles charging in any step.
    pub max_active: usize,
    pub seed: u64,
}

impl StationRun {
    pub fn peak(&self) -> f64 {
        self.load_profile.max()
    }
}

struct Plugged {
    agent: usize,
    soc: f64,
}

/// Equal-share water filling: every demand gets `min(d, level)` with the
/// level chosen so the total stays within `cap`.
fn share_cap(demand: &[f64], cap: f64) -> Vec<f64> {
    let total: f64 = demand.iter().sum();
    if total <= cap {
        return demand.to_vec();
    }
    let mut sorted = demand.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut remaining = cap;
    let mut level = 0.0;
    for (k, d) in sorted.iter().enumerate() {
        let left = (sorted.len() - k) as f64;
        if d * left >= remaining {
            level = remaining / left;
            break;
        }
        remaining -= d;
        level = *d;
    }
    demand.iter().map(|d| d.min(level)).collect()
}

/// Runs the queue for `duration_min` minutes in steps of `step_min`.
pub fn simulate_station(
    config: &StationConfig,
    agents: &[VehicleAgent],
    start: NaiveDateTime,
    duration_min: u32,
    step_min: u32,
) -> Result<StationRun> {
    config.validate()?;
    if step_min == 0 || !duration_min.is_multiple_of(step_min) {
        return Err(Error::StepMismatch(format!(
            "duration {duration_min} min is not a whole number of {step_min}-minute steps"
        )));
    }
    let mut order: Vec<usize> = (0..agents.len()).collect();
    order.sort_by_key(|&i| (agents[i].arrival_min, i));

    let steps = (duration_min / step_min) as usize;
    let per_hour = 60.0 / step_min as f64;
    let cap = config.station_cap();
    let mut profile = vec![0.0; steps];
    let mut energy = vec![0.0; agents.len()];
    let mut final_soc: Vec<f64> = agents.iter().map(|a| a.initial_soc).collect();
    let mut queue: VecDeque<usize> = VecDeque::new();
    let mut plugged: Vec<Plugged> = Vec::with_capacity(config.ports);
    let mut next = 0;
    let (mut waits_total, mut waits_n, mut max_wait, mut abandoned, mut max_active) =
        (0u64, 0u64, 0u32, 0, 0);
    let mut demand = Vec::with_capacity(config.ports);

    for (t, sample) in profile.iter_mut().enumerate() {
        let now = t as u32 * step_min;
        plugged.retain(|p| {
            let a = &agents[p.agent];
            p.soc < a.target_soc - 1e-12 && now < a.deadline_min
        });
        while next < order.len() && agents[order[next]].arrival_min < now + step_min {
            queue.push_back(order[next]);
            next += 1;
        }
        let before = queue.len();
        queue.retain(|&i| agents[i].deadline_min > now);
        abandoned += before - queue.len();
        while plugged.len() < config.ports {
            let Some(i) = queue.pop_front() else { break };
            let wait = now.saturating_sub(agents[i].arrival_min);
            waits_total += wait as u64;
            waits_n += 1;
            max_wait = max_wait.max(wait);
            plugged.push(Plugged {
                agent: i,
                soc: agents[i].initial_soc,
            });
        }
        max_active = max_active.max(plugged.len());

        demand.clear();
        demand.extend(plugged.iter().map(|p| {
            let a = &agents[p.agent];
            let to_target = ((a.target_soc - a.initial_soc) * a.battery_kwh - energy[p.agent])
                .max(0.0)
                * per_hour;
            config
                .port_power_kw
                .min(a.acceptance.power(p.soc))
                .min(to_target)
        }));
        let granted = share_cap(&demand, cap);
        let mut total = 0.0;
        for (p, &kw) in plugged.iter_mut().zip(&granted) {
            if kw < 0.0 {
                return Err(Error::NegativePower(kw));
            }
            let a = &agents[p.agent];
            // SOC follows from delivered energy so rounding cannot build up
            energy[p.agent] += kw / per_hour;
            p.soc = (a.initial_soc + energy[p.agent] / a.battery_kwh).min(1.0);
            final_soc[p.agent] = p.soc;
            total += kw;
        }
        *sample = total;
    }
    Ok(StationRun {
        load_profile: TimeSeries {
            start,
            step_minutes: step_min,
            values: profile,
        },
        vehicle_energy: energy,
        final_soc,
        max_wait_min: max_wait,
        mean_wait_min: if waits_n == 0 {
            0.0
        } else {
            waits_total as f64 / waits_n as f64
        },
        abandoned,
        max_active,
        seed: 0,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonteCarloSummary {
    pub mean: TimeSeries,
    /// Per-minute maximum over all iterations.
    pub max_envelope: TimeSeries,
    /// Peak of each iteration.
    pub peaks: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonteCarlo {
    pub runs: Vec<StationRun>,
    pub summary: MonteCarloSummary,
}

/// Independent traffic draws; iteration `k` uses seed `seed + k`.
pub fn monte_carlo(
    config: &StationConfig,
    traffic: &TrafficParams,
    iterations: usize,
    seed: u64,
) -> Result<MonteCarlo> {
    if iterations == 0 {
        return Err(Error::InvalidStation(
            "at least one iteration is required".into(),
        ));
    }
    let params = TrafficParams {
        pattern: config.pattern,
        ..traffic.clone()
    };
    let duration = (params.days * MINUTES_PER_DAY) as u32;
    let runs: Vec<Result<StationRun>> = par_map(iterations, |k| {
        let s = seed.wrapping_add(k as u64);
        let agents = sample_traffic_with(&params, s);
        let mut run = simulate_station(config, &agents, default_start(), duration, 1)?;
        run.seed = s;
        Ok(run)
    });
    let runs: Vec<StationRun> = runs.into_iter().collect::<Result<_>>()?;

    let len = runs[0].load_profile.len();
    let mut mean = vec![0.0; len];
    let mut envelope = vec![0.0_f64; len];
    for r in &runs {
        for (t, &v) in r.load_profile.values.iter().enumerate() {
            mean[t] += v;
            envelope[t] = envelope[t].max(v);
        }
    }
    mean.iter_mut().for_each(|m| *m /= iterations as f64);
    let start = runs[0].load_profile.start;
    let summary = MonteCarloSummary {
        mean: TimeSeries::new(start, mean),
        max_envelope: TimeSeries::new(start, envelope),
        peaks: runs.iter().map(StationRun::peak).collect(),
    };
    Ok(MonteCarlo { runs, summary })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vehicle(arrival: u32, soc: f64, battery: f64) -> VehicleAgent {
        VehicleAgent {
            id: 0,
            battery_kwh: battery,
            arrival_min: arrival,
            initial_soc: soc,
            target_soc: 0.9,
            deadline_min: arrival + 120,
            acceptance: AcceptanceCurve::flat(1200.0),
        }
    }

    #[test]
    fn acceptance_curve_shape() {
        let c = AcceptanceCurve::default();
        assert_eq!(c.power(0.5), 1200.0);
        assert_eq!(c.power(0.8), 1200.0);
        assert!((c.power(0.9) - 660.0).abs() < 1e-9);
        assert!((c.power(1.0) - 120.0).abs() < 1e-9);
    }

    #[test]
    fn empty_traffic() {
        assert!(sample_traffic(TrafficPattern::Daytime, 0, 30, 1).is_empty());
        assert_eq!(
            sample_traffic(TrafficPattern::Multishift, 72, 30, 1).len(),
            2160
        );
    }

    #[test]
    fn agents_respect_ranges() {
        for a in sample_traffic(TrafficPattern::Multishift, 72, 5, 9) {
            assert!((660.0..=1200.0).contains(&a.battery_kwh));
            assert!((0.1..=0.4).contains(&a.initial_soc));
            assert!(a.initial_soc < a.target_soc);
            assert_eq!(a.deadline_min, a.arrival_min + 120);
            assert!(a.arrival_min < 5 * 1440);
        }
    }

    #[test]
    fn single_vehicle_closed_form() {
        let cfg = StationConfig::new(1, TrafficPattern::Daytime);
        let run =
            simulate_station(&cfg, &[vehicle(0, 0.5, 1000.0)], default_start(), 60, 1).unwrap();
        let charging = run.load_profile.values.iter().filter(|&&v| v > 0.0).count();
        assert_eq!(charging, 20);
        assert!((run.vehicle_energy[0] - 400.0).abs() < 1e-9);
        assert!((run.final_soc[0] - 0.9).abs() < 1e-12);
    }

    #[test]
    fn zero_agents_zero_profile() {
        let run =
            simulate_station(&StationConfig::default(), &[], default_start(), 1440, 1).unwrap();
        assert!(run.load_profile.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn bad_step_rejected() {
        let cfg = StationConfig::default();
        assert!(matches!(
            simulate_station(&cfg, &[], default_start(), 100, 7),
            Err(Error::StepMismatch(_))
        ));
    }

    #[test]
    fn saturated_single_port_peaks_at_port_power() {
        let agents: Vec<_> = (0..10).map(|k| vehicle(k, 0.1, 1200.0)).collect();
        let run = simulate_station(
            &StationConfig::new(1, TrafficPattern::Daytime),
            &agents,
            default_start(),
            600,
            1,
        )
        .unwrap();
        assert_eq!(run.peak(), 1200.0);
        assert_eq!(run.max_active, 1);
        assert!(run.max_wait_min > 0);
    }

    #[test]
    fn queued_vehicle_abandons_after_deadline() {
        let agents = vec![vehicle(0, 0.1, 1200.0), vehicle(0, 0.1, 1200.0)];
        let mut agents = agents;
        agents[0].deadline_min = 300;
        agents[1].deadline_min = 10;
        let run = simulate_station(
            &StationConfig::new(1, TrafficPattern::Daytime),
            &agents,
            default_start(),
            300,
            1,
        )
        .unwrap();
        assert_eq!(run.abandoned, 1);
        assert_eq!(run.vehicle_energy[1], 0.0);
    }

    #[test]
    fn station_cap_shares_equally() {
        assert_eq!(
            share_cap(&[1200.0, 1200.0, 1200.0], 3000.0),
            vec![1000.0; 3]
        );
        assert_eq!(
            share_cap(&[200.0, 1200.0, 1200.0], 2000.0),
            vec![200.0, 900.0, 900.0]
        );
        assert_eq!(share_cap(&[100.0, 100.0], 3000.0), vec![100.0, 100.0]);
        let cfg = StationConfig {
            station_cap_kva: Some(2000.0),
            ..StationConfig::new(3, TrafficPattern::Daytime)
        };
        let agents: Vec<_> = (0..3).map(|_| vehicle(0, 0.1, 1200.0)).collect();
        let run = simulate_station(&cfg, &agents, default_start(), 60, 1).unwrap();
        assert!((run.peak() - 2000.0).abs() < 1e-9);
    }

    #[test]
    fn single_iteration_summary_is_the_run() {
        let params = TrafficParams {
            days: 2,
            ..TrafficParams::default()
        };
        let mc = monte_carlo(&StationConfig::default(), &params, 1, 5).unwrap();
        assert_eq!(mc.runs.len(), 1);
        assert_eq!(mc.summary.mean, mc.runs[0].load_profile);
        assert_eq!(mc.summary.max_envelope, mc.runs[0].load_profile);
        assert_eq!(mc.runs[0].seed, 5);
    }
}
