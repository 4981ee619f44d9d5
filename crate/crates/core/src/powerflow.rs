//! Backward/forward sweep power flow and quasi-static time-series runs.
//!
//! Loads are constant power with positive values meaning consumption. All
//! solves use a flat start at the slack voltage.

use chrono::NaiveDateTime;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::Feeder;
use crate::profiles::ProfileSet;
use crate::timeseries::{format_timestamp, TimeSeries};

pub const DEFAULT_TOLERANCE: f64 = 1e-8;
pub const DEFAULT_MAX_ITERATIONS: usize = 100;
pub const DEFAULT_LOWER_PU: f64 = 0.95;
pub const DEFAULT_UPPER_PU: f64 = 1.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadPoint {
    pub bus: String,
    /// kW, positive = consumption.
    pub p: f64,
    /// kvar, positive = consumption, negative = injection.
    pub q: f64,
}

impl LoadPoint {
    pub fn new(bus: impl Into<String>, p: f64, q: f64) -> Self {
        LoadPoint {
            bus: bus.into(),
            p,
            q,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerFlowSolution {
    /// Voltage magnitude per bus (feeder order), p.u.
    pub voltages: Vec<f64>,
    /// Voltage angle per bus, radians.
    pub angles: Vec<f64>,
    pub slack_p_kw: f64,
    pub slack_q_kvar: f64,
    pub losses_kw: f64,
    pub losses_kvar: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tolerance: DEFAULT_TOLERANCE,
            max_iterations: DEFAULT_MAX_ITERATIONS,
        }
    }
}

/// A feeder compiled for repeated sweeps.
#[derive(Debug, Clone)]
pub struct SweepSolver {
    ids: Vec<String>,
    eligible: Vec<bool>,
    /// leaves -> root, slack excluded
    order: Vec<usize>,
    parent: Vec<usize>,
    /// series impedance towards the parent, p.u.
    z: Vec<Complex64>,
    slack: usize,
    base_kva: f64,
    pub options: SolverOptions,
}

/// Scratch buffers for one sweep.
#[derive(Debug, Clone)]
pub struct Workspace {
    pub v: Vec<Complex64>,
    current: Vec<Complex64>,
}

impl SweepSolver {
    pub fn new(feeder: &Feeder) -> Result<Self> {
        let topo = feeder.validate_radial()?;
        let pu = feeder.to_per_unit()?;
        let n = feeder.buses.len();
        let slack = topo.slack();
        let mut z = vec![Complex64::new(0.0, 0.0); n];
        let mut parent = vec![slack; n];
        for i in 0..n {
            if let (Some(p), Some(k)) = (topo.parent[i], topo.parent_branch[i]) {
                parent[i] = p;
                z[i] = Complex64::new(pu.branches[k].r, pu.branches[k].x);
            }
        }
        Ok(SweepSolver {
            ids: feeder.buses.iter().map(|b| b.id.clone()).collect(),
            eligible: feeder.buses.iter().map(|b| b.load_connection).collect(),
            order: topo.order.iter().copied().filter(|&i| i != slack).collect(),
            parent,
            z,
            slack,
            base_kva: feeder.base_power_mva * 1000.0,
            options: SolverOptions::default(),
        })
    }

    pub fn bus_count(&self) -> usize {
        self.ids.len()
    }

    pub fn bus_ids(&self) -> &[String] {
        &self.ids
    }

    pub fn slack(&self) -> usize {
        self.slack
    }

    pub fn base_kva(&self) -> f64 {
        self.base_kva
    }

    pub fn bus_index(&self, id: &str) -> Option<usize> {
        self.ids.iter().position(|b| b == id)
    }

    /// Index of a load-eligible bus.
    pub fn eligible_index(&self, id: &str) -> Result<usize> {
        match self.bus_index(id) {
            Some(i) if self.eligible[i] && i != self.slack => Ok(i),
            _ => Err(Error::InvalidBus(id.to_string())),
        }
    }

    pub fn workspace(&self) -> Workspace {
        Workspace {
            v: vec![Complex64::new(1.0, 0.0); self.ids.len()],
            current: vec![Complex64::new(0.0, 0.0); self.ids.len()],
        }
    }

    /// Per-bus complex power demand in p.u. from kW/kvar load points.
    pub fn injections(&self, loads: &[LoadPoint]) -> Result<Vec<Complex64>> {
        let mut s = vec![Complex64::new(0.0, 0.0); self.ids.len()];
        for lp in loads {
            let i = self.eligible_index(&lp.bus)?;
            s[i] += Complex64::new(lp.p, lp.q) / self.base_kva;
        }
        Ok(s)
    }

    /// Sweeps until the largest voltage update is below tolerance. `demand`
    /// holds per-bus complex power in p.u.; the result is left in `ws.v`.
    pub fn sweep(
        &self,
        demand: &[Complex64],
        slack_voltage: f64,
        ws: &mut Workspace,
    ) -> Result<usize> {
        if !(0.9..=1.1).contains(&slack_voltage) {
            return Err(Error::InvalidSlackVoltage(slack_voltage));
        }
        let v0 = Complex64::new(slack_voltage, 0.0);
        ws.v.iter_mut().for_each(|v| *v = v0);
        for it in 1..=self.options.max_iterations {
            self.branch_currents(demand, ws);
            let mut delta: f64 = 0.0;
            for &i in self.order.iter().rev() {
                let v_new = ws.v[self.parent[i]] - self.z[i] * ws.current[i];
                delta = delta.max((v_new - ws.v[i]).norm());
                ws.v[i] = v_new;
            }
            if !delta.is_finite() {
                break;
            }
            if delta < self.options.tolerance {
                return Ok(it);
            }
        }
        Err(Error::NoConvergence(self.options.max_iterations))
    }

    fn branch_currents(&self, demand: &[Complex64], ws: &mut Workspace) {
        for ((c, d), v) in ws.current.iter_mut().zip(demand).zip(&ws.v) {
            *c = (d / v).conj();
        }
        for &i in &self.order {
            let c = ws.current[i];
            ws.current[self.parent[i]] += c;
        }
    }

    pub fn solve_demand(
        &self,
        demand: &[Complex64],
        slack_voltage: f64,
    ) -> Result<PowerFlowSolution> {
        let mut ws = self.workspace();
        let iterations = self.sweep(demand, slack_voltage, &mut ws)?;
        self.branch_currents(demand, &mut ws);
        let mut loss = Complex64::new(0.0, 0.0);
        for &i in &self.order {
            loss += self.z[i] * ws.current[i].norm_sqr();
        }
        let slack_s = ws.v[self.slack] * ws.current[self.slack].conj();
        Ok(PowerFlowSolution {
            voltages: ws.v.iter().map(|v| v.norm()).collect(),
            angles: ws.v.iter().map(|v| v.arg()).collect(),
            slack_p_kw: slack_s.re * self.base_kva,
            slack_q_kvar: slack_s.im * self.base_kva,
            losses_kw: loss.re * self.base_kva,
            losses_kvar: loss.im * self.base_kva,
            iterations,
            converged: true,
        })
    }

    pub fn solve(&self, loads: &[LoadPoint], slack_voltage: f64) -> Result<PowerFlowSolution> {
        let demand = self.injections(loads)?;
        self.solve_demand(&demand, slack_voltage)
    }
}

#[derive(Deserialize)]
struct LoadRow {
    bus_id: String,
    p_kw: f64,
    q_kvar: f64,
}

/// Reads `bus_id,p_kw,q_kvar` rows. Duplicate buses are kept and add up.
pub fn read_load_points<R: std::io::Read>(input: R) -> Result<Vec<LoadPoint>> {
    let mut rdr = csv::Reader::from_reader(input);
    let mut out = Vec::new();
    for row in rdr.deserialize() {
        let r: LoadRow = row?;
        if !(r.p_kw.is_finite() && r.q_kvar.is_finite()) {
            return Err(Error::Csv(format!("non-finite load at bus `{}`", r.bus_id)));
        }
        out.push(LoadPoint::new(r.bus_id, r.p_kw, r.q_kvar));
    }
    Ok(out)
}

/// Steady-state solve of a radial feeder with constant-power loads.
pub fn solve(
    feeder: &Feeder,
    loads: &[LoadPoint],
    slack_voltage: f64,
) -> Result<PowerFlowSolution> {
    SweepSolver::new(feeder)?.solve(loads, slack_voltage)
}

/// Modifies the station's grid draw before each QSTS solve.
pub trait StationControl {
    /// Returns the net `(kW, kvar)` drawn at the station bus for `step`
    /// given the raw charging demand.
    fn apply(&mut self, step: usize, demand_kw: f64) -> (f64, f64);
}

/// Charging station attached at one bus for a QSTS run.
#[derive(Debug, Clone, Copy)]
pub struct StationLoad<'a> {
    pub bus: &'a str,
    pub profile: &'a TimeSeries,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QstsOptions {
    pub slack_voltage: f64,
    /// Keep every bus trajectory (memory grows with buses x steps).
    pub record_trajectories: bool,
}

impl Default for QstsOptions {
    fn default() -> Self {
        QstsOptions {
            slack_voltage: 1.0,
            record_trajectories: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QstsResult {
    pub bus_ids: Vec<String>,
    pub per_bus_min: Vec<f64>,
    pub per_bus_max: Vec<f64>,
    /// Lowest bus voltage at every step.
    pub system_min: TimeSeries,
    /// Highest non-slack bus voltage at every step.
    pub system_max: TimeSeries,
    /// Station bus voltage when a station is attached.
    pub station_voltage: Option<TimeSeries>,
    /// `trajectories[bus][step]` when recorded.
    pub trajectories: Option<Vec<Vec<f64>>>,
}

impl QstsResult {
    pub fn len(&self) -> usize {
        self.system_min.len()
    }

    pub fn is_empty(&self) -> bool {
        self.system_min.is_empty()
    }

    pub fn min_voltage(&self) -> f64 {
        self.system_min.min()
    }

    pub fn max_voltage(&self) -> f64 {
        self.system_max.max()
    }

    /// Bus with the lowest voltage over the run.
    pub fn worst_bus(&self) -> &str {
        let (i, _) =
            self.per_bus_min
                .iter()
                .enumerate()
                .fold(
                    (0, f64::INFINITY),
                    |acc, (i, &v)| if v < acc.1 { (i, v) } else { acc },
                );
        &self.bus_ids[i]
    }

    /// Steps where any bus leaves `[lower, upper]`.
    pub fn violations(&self, lower: f64, upper: f64) -> ViolationReport {
        let low = scan(&self.system_min, lower, f64::INFINITY);
        let high = scan(&self.system_max, f64::NEG_INFINITY, upper);
        let mut steps: Vec<usize> = low.steps.iter().chain(high.steps.iter()).copied().collect();
        steps.sort_unstable();
        steps.dedup();
        let worst = match (low.worst, high.worst) {
            (Some(l), Some(h)) => Some(if lower - l >= h - upper { l } else { h }),
            (l, h) => l.or(h),
        };
        ViolationReport {
            count: steps.len(),
            low_count: low.low_count,
            high_count: high.high_count,
            worst,
            timestamps: steps
                .iter()
                .map(|&i| self.system_min.timestamp(i))
                .collect(),
            steps,
        }
    }

    /// `timestamp,bus_id,v_pu` rows; requires recorded trajectories.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let traj = self
            .trajectories
            .as_ref()
            .ok_or_else(|| Error::Csv("trajectories were not recorded".into()))?;
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["timestamp", "bus_id", "v_pu"])?;
        #[allow(clippy::needless_range_loop)] // traj is bus-major, rows are written time-major
        for t in 0..self.len() {
            let ts = format_timestamp(self.system_min.timestamp(t));
            for (b, id) in self.bus_ids.iter().enumerate() {
                w.write_record([ts.as_str(), id.as_str(), &format!("{:.8}", traj[b][t])])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Runs one power flow per 1-minute step. The horizon comes from the load
/// profiles, or from the station profile when there are no system loads.
pub fn qsts(
    solver: &SweepSolver,
    loads: &ProfileSet,
    station: Option<StationLoad<'_>>,
    mut control: Option<&mut dyn StationControl>,
    options: QstsOptions,
) -> Result<QstsResult> {
    let reference = loads
        .buses
        .first()
        .map(|b| &b.p)
        .or(station.map(|s| s.profile))
        .ok_or_else(|| Error::SeriesLengthMismatch("no load or station series".into()))?;
    for b in &loads.buses {
        reference.check_aligned(&b.p)?;
        reference.check_aligned(&b.q)?;
    }
    if let Some(st) = station {
        reference.check_aligned(st.profile)?;
    }
    if reference.step_minutes != 1 {
        return Err(Error::SeriesLengthMismatch(format!(
            "step must be 1 minute, got {}",
            reference.step_minutes
        )));
    }
    let steps = reference.len();
    let n = solver.bus_count();

    let load_idx: Vec<usize> = loads
        .buses
        .iter()
        .map(|b| solver.eligible_index(&b.bus))
        .collect::<Result<_>>()?;
    let station_idx = station.map(|s| solver.eligible_index(s.bus)).transpose()?;

    let mut per_bus_min = vec![f64::INFINITY; n];
    let mut per_bus_max = vec![f64::NEG_INFINITY; n];
    let mut sys_min = Vec::with_capacity(steps);
    let mut sys_max = Vec::with_capacity(steps);
    let mut station_v = station_idx.map(|_| Vec::with_capacity(steps));
    let mut traj = options
        .record_trajectories
        .then(|| vec![Vec::with_capacity(steps); n]);

    let mut demand = vec![Complex64::new(0.0, 0.0); n];
    let mut ws = solver.workspace();
    let base = solver.base_kva();
    for t in 0..steps {
        demand
            .iter_mut()
            .for_each(|d| *d = Complex64::new(0.0, 0.0));
        for (b, &i) in loads.buses.iter().zip(&load_idx) {
            demand[i] += Complex64::new(b.p.values[t], b.q.values[t]) / base;
        }
        if let (Some(st), Some(i)) = (station, station_idx) {
            let raw = st.profile.values[t];
            let (p, q) = match control.as_deref_mut() {
                Some(c) => c.apply(t, raw),
                None => (raw, 0.0),
            };
            demand[i] += Complex64::new(p, q) / base;
        }
        solver
            .sweep(&demand, options.slack_voltage, &mut ws)
            .map_err(|e| match e {
                Error::NoConvergence(max_iters) => Error::NoConvergenceAt {
                    step: t,
                    timestamp: format_timestamp(reference.timestamp(t)),
                    max_iters,
                },
                other => other,
            })?;
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let v = ws.v[i].norm();
            per_bus_min[i] = per_bus_min[i].min(v);
            per_bus_max[i] = per_bus_max[i].max(v);
            lo = lo.min(v);
            if i != solver.slack() {
                hi = hi.max(v);
            }
            if let Some(tr) = traj.as_mut() {
                tr[i].push(v);
            }
        }
        sys_min.push(lo);
        sys_max.push(if n > 1 { hi } else { lo });
        if let (Some(sv), Some(i)) = (station_v.as_mut(), station_idx) {
            sv.push(ws.v[i].norm());
        }
    }

    let start = reference.start;
    Ok(QstsResult {
        bus_ids: solver.bus_ids().to_vec(),
        per_bus_min,
        per_bus_max,
        system_min: TimeSeries::new(start, sys_min),
        system_max: TimeSeries::new(start, sys_max),
        station_voltage: station_v.map(|v| TimeSeries::new(start, v)),
        trajectories: traj,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ViolationReport {
    /// Number of violating samples.
    pub count: usize,
    pub low_count: usize,
    pub high_count: usize,
    /// Most extreme out-of-band value.
    pub worst: Option<f64>,
    pub steps: Vec<usize>,
    pub timestamps: Vec<NaiveDateTime>,
}

impl ViolationReport {
    pub fn is_clean(&self) -> bool {
        self.count == 0
    }
}

/// Reports every sample strictly outside `[lower, upper]`.
pub fn violation_scan(series: &TimeSeries, lower: f64, upper: f64) -> Result<ViolationReport> {
    if series.is_empty() {
        return Err(Error::EmptySeries);
    }
    Ok(scan(series, lower, upper))
}

fn scan(series: &TimeSeries, lower: f64, upper: f64) -> ViolationReport {
    let mut steps = Vec::new();
    let (mut low_count, mut high_count) = (0, 0);
    let mut worst: Option<(f64, f64)> = None;
    for (i, &v) in series.values.iter().enumerate() {
        let excess = if v < lower {
            low_count += 1;
            lower - v
        } else if v > upper {
            high_count += 1;
            v - upper
        } else {
            continue;
        };
        steps.push(i);
        if worst.is_none_or(|(e, _)| excess > e) {
            worst = Some((excess, v));
        }
    }
    ViolationReport {
        count: steps.len(),
        low_count,
        high_count,
        worst: worst.map(|(_, v)| v),
        timestamps: steps.iter().map(|&i| series.timestamp(i)).collect(),
        steps,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn load_points_from_csv() {
        let text = "bus_id,p_kw,q_kvar\na,5000,2000\nb,0,-10.5\n";
        let loads = read_load_points(text.as_bytes()).unwrap();
        assert_eq!(
            loads,
            vec![
                LoadPoint::new("a", 5000.0, 2000.0),
                LoadPoint::new("b", 0.0, -10.5)
            ]
        );
        assert!(read_load_points("bus_id,p_kw,q_kvar\na,x,1\n".as_bytes()).is_err());
        assert!(read_load_points("bus_id,p_kw\n".as_bytes())
            .unwrap()
            .is_empty());
    }
    use crate::network::{bundled_feeder, Branch, Bus, BusKind, FeederName, ImpedanceUnit};
    use crate::timeseries::default_start;

    fn two_bus_pu(r: f64, x: f64) -> Feeder {
        let zb = 12.47 * 12.47 / 10.0;
        Feeder {
            name: "two-bus".into(),
            base_power_mva: 10.0,
            buses: vec![
                Bus {
                    id: "src".into(),
                    kind: BusKind::Slack,
                    base_kv: 12.47,
                    load_connection: false,
                    peak_kw: 0.0,
                },
                Bus {
                    id: "load".into(),
                    kind: BusKind::Load,
                    base_kv: 12.47,
                    load_connection: true,
                    peak_kw: 0.0,
                },
            ],
            branches: vec![Branch {
                from: "src".into(),
                to: "load".into(),
                r: r * zb,
                x: x * zb,
            }],
            impedance_unit: ImpedanceUnit::Ohm,
            notes: None,
        }
    }

    #[test]
    fn zero_load_is_flat() {
        let f = bundled_feeder(FeederName::Ieee34Like);
        let sol = solve(&f, &[], 1.0).unwrap();
        assert!(sol.voltages.iter().all(|&v| v == 1.0));
    }

    /// Closed-form receiving-end magnitude of a two-bus feeder.
    #[test]
    fn two_bus_matches_quadratic() {
        let (r, x, p, q) = (0.01, 0.02, 0.5, 0.2);
        let f = two_bus_pu(r, x);
        let sol = solve(&f, &[LoadPoint::new("load", p * 1e4, q * 1e4)], 1.0).unwrap();
        let b = 1.0 - 2.0 * (r * p + x * q);
        let c = (r * r + x * x) * (p * p + q * q);
        let v = ((b + (b * b - 4.0 * c).sqrt()) / 2.0).sqrt();
        assert!(
            (sol.voltages[1] - v).abs() < 1e-6,
            "{} vs {v}",
            sol.voltages[1]
        );
    }

    #[test]
    fn slack_bounds_and_bad_bus() {
        let f = two_bus_pu(0.01, 0.02);
        assert!(matches!(
            solve(&f, &[], 1.2),
            Err(Error::InvalidSlackVoltage(_))
        ));
        assert!(matches!(
            solve(&f, &[LoadPoint::new("nope", 1.0, 0.0)], 1.0),
            Err(Error::InvalidBus(_))
        ));
        assert!(matches!(
            solve(&f, &[LoadPoint::new("src", 1.0, 0.0)], 1.0),
            Err(Error::InvalidBus(_))
        ));
    }

    #[test]
    fn collapse_reports_no_convergence() {
        let f = two_bus_pu(0.1, 0.2);
        let r = solve(&f, &[LoadPoint::new("load", 5e4, 2e4)], 1.0);
        assert!(matches!(r, Err(Error::NoConvergence(100))));
    }

    #[test]
    fn violation_scan_boundaries() {
        let s = TimeSeries::new(default_start(), vec![1.0, 0.949, 0.95, 1.05, 1.051]);
        let rep = violation_scan(&s, 0.95, 1.05).unwrap();
        assert_eq!(rep.count, 2);
        assert_eq!(rep.low_count, 1);
        assert_eq!(rep.high_count, 1);
        assert_eq!(rep.steps, vec![1, 4]);
        let clean =
            violation_scan(&TimeSeries::new(default_start(), vec![1.0; 4]), 0.95, 1.05).unwrap();
        assert!(clean.is_clean());
        assert_eq!(
            violation_scan(&TimeSeries::zeros(default_start(), 0), 0.95, 1.05),
            Err(Error::EmptySeries)
        );
    }
}
