//! Minute-by-minute operation of on-site mitigation: charger power-factor
//! control, PV with curtailment, and storage.
//!
//! Dispatch is causal and uses the sensitivity matrices to predict the
//! voltage effect of every decision instead of solving a power flow per
//! step. Quantities are kW/kvar at the station bus; reactive values in the
//! trace are injections (positive raises voltage).

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::powerflow::{StationControl, DEFAULT_LOWER_PU, DEFAULT_UPPER_PU};
use crate::sensitivity::Vlsm;
use crate::timeseries::{format_timestamp, TimeSeries};

pub const DEFAULT_PF: f64 = 0.9;
pub const DEFAULT_ES_EFFICIENCY: f64 = 0.88;
pub const DEFAULT_ES_INITIAL_SOC: f64 = 0.5;
/// Extra p.u. headroom kept above the lower limit when deciding support.
pub const DEFAULT_SUPPORT_MARGIN: f64 = 0.005;

/// Reactive injection per kW at power factor `pf`.
pub fn pf_factor(pf: f64) -> Result<f64> {
    if !(pf > 0.0 && pf <= 1.0) {
        return Err(Error::InvalidPf(pf));
    }
    Ok(pf.acos().tan())
}

/// kvar injected by a charger held at `pf` while drawing `station_p`.
pub fn pf_control_series(station_p: &TimeSeries, pf: f64) -> Result<TimeSeries> {
    let k = pf_factor(pf)?;
    Ok(TimeSeries {
        start: station_p.start,
        step_minutes: station_p.step_minutes,
        values: station_p.values.iter().map(|p| p * k).collect(),
    })
}

/// QSTS hook for plain power-factor control.
#[derive(Debug, Clone, Copy)]
pub struct PfControl {
    factor: f64,
}

impl PfControl {
    pub fn new(pf: f64) -> Result<Self> {
        Ok(PfControl {
            factor: pf_factor(pf)?,
        })
    }
}

impl StationControl for PfControl {
    fn apply(&mut self, _step: usize, demand_kw: f64) -> (f64, f64) {
        (demand_kw, -demand_kw * self.factor)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MitigationPlan {
    /// Hold the charger at this power factor whenever it draws power.
    pub pf_control: Option<f64>,
    /// Charger converter rating, kVA. Zero disables charger vars.
    pub charger_kva: f64,
    pub pv_kva: f64,
    /// Reactive share of the PV inverter rating.
    pub pv_eta: f64,
    pub es_kwh: f64,
    pub es_kw: f64,
    /// Applied on charge.
    pub es_efficiency: f64,
    pub es_initial_soc: f64,
    pub v_lower: f64,
    pub v_upper: f64,
    pub support_margin: f64,
}

impl Default for MitigationPlan {
    fn default() -> Self {
        MitigationPlan {
            pf_control: None,
            charger_kva: 0.0,
            pv_kva: 0.0,
            pv_eta: 1.0,
            es_kwh: 0.0,
            es_kw: 0.0,
            es_efficiency: DEFAULT_ES_EFFICIENCY,
            es_initial_soc: DEFAULT_ES_INITIAL_SOC,
            v_lower: DEFAULT_LOWER_PU,
            v_upper: DEFAULT_UPPER_PU,
            support_margin: DEFAULT_SUPPORT_MARGIN,
        }
    }
}

impl MitigationPlan {
    pub fn validate(&self) -> Result<()> {
        if let Some(pf) = self.pf_control {
            pf_factor(pf)?;
        }
        let non_negative = [self.charger_kva, self.pv_kva, self.es_kwh, self.es_kw];
        if non_negative.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::InvalidSizing(format!(
                "negative asset size in {self:?}"
            )));
        }
        if !(self.pv_eta > 0.0 && self.pv_eta <= 1.0) {
            return Err(Error::InvalidSizing(format!("pv_eta = {}", self.pv_eta)));
        }
        if !(self.es_efficiency > 0.0 && self.es_efficiency <= 1.0) {
            return Err(Error::InvalidSizing(format!(
                "es_efficiency = {}",
                self.es_efficiency
            )));
        }
        if !(0.0..=1.0).contains(&self.es_initial_soc) {
            return Err(Error::InvalidSizing(format!(
                "es_initial_soc = {}",
                self.es_initial_soc
            )));
        }
        if !(self.v_lower < self.v_upper) {
            return Err(Error::InvalidSizing("v_lower must be below v_upper".into()));
        }
        Ok(())
    }
}

/// Voltages before the station is added.
#[derive(Debug, Clone, Copy)]
pub enum Baseline<'a> {
    /// Same vector every step.
    Fixed(&'a [f64]),
    /// `[bus][step]`, e.g. recorded QSTS trajectories.
    PerStep(&'a [Vec<f64>]),
}

impl Baseline<'_> {
    fn at(&self, bus: usize, step: usize) -> f64 {
        match self {
            Baseline::Fixed(v) => v[bus],
            Baseline::PerStep(v) => v[bus][step],
        }
    }

    fn check(&self, n: usize, steps: usize) -> Result<()> {
        let ok = match self {
            Baseline::Fixed(v) => v.len() == n,
            Baseline::PerStep(v) => v.len() == n && v.iter().all(|b| b.len() >= steps),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::SeriesLengthMismatch(format!(
                "baseline does not cover {n} buses x {steps} steps"
            )))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DispatchTrace {
    pub start: chrono::NaiveDateTime,
    pub es_kwh: f64,
    pub es_efficiency: f64,
    /// Charging demand, kW.
    pub station_p: Vec<f64>,
    /// Net draw at the grid connection, kW.
    pub grid_p: Vec<f64>,
    /// Net reactive draw at the grid connection (negative = injection).
    pub grid_q: Vec<f64>,
    pub pv_available: Vec<f64>,
    /// PV real output actually produced (to grid or storage).
    pub pv_real: Vec<f64>,
    pub pv_to_es: Vec<f64>,
    pub pv_curtailed: Vec<f64>,
    pub pv_q: Vec<f64>,
    pub charger_q: Vec<f64>,
    /// kW, positive = discharge.
    pub es_power: Vec<f64>,
    /// Fraction of `es_kwh` at the end of each step.
    pub es_soc: Vec<f64>,
    /// kWh of discharge attributed to stored PV energy.
    pub es_pv_discharge: Vec<f64>,
    pub support_need: Vec<bool>,
    /// Predicted lowest voltage without mitigation.
    pub predicted_min: Vec<f64>,
    /// Predicted highest voltage with the dispatched injections.
    pub predicted_max: Vec<f64>,
}

impl DispatchTrace {
    pub fn len(&self) -> usize {
        self.station_p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.station_p.is_empty()
    }

    pub fn controller(&self) -> TraceReplay<'_> {
        TraceReplay { trace: self }
    }

    /// One row per step.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "timestamp",
            "station_p_kw",
            "grid_p_kw",
            "grid_q_kvar",
            "pv_available_kw",
            "pv_real_kw",
            "pv_curtailed_kw",
            "pv_q_kvar",
            "charger_q_kvar",
            "es_p_kw",
            "es_soc",
            "support_need",
        ])?;
        for t in 0..self.len() {
            let ts = self.start + chrono::Duration::minutes(t as i64);
            w.write_record([
                format_timestamp(ts),
                format!("{:.3}", self.station_p[t]),
                format!("{:.3}", self.grid_p[t]),
                format!("{:.3}", self.grid_q[t]),
                format!("{:.3}", self.pv_available[t]),
                format!("{:.3}", self.pv_real[t]),
                format!("{:.3}", self.pv_curtailed[t]),
                format!("{:.3}", self.pv_q[t]),
                format!("{:.3}", self.charger_q[t]),
                format!("{:.3}", self.es_power[t]),
                format!("{:.6}", self.es_soc[t]),
                (self.support_need[t] as u8).to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Feeds a precomputed trace into QSTS.
pub struct TraceReplay<'a> {
    trace: &'a DispatchTrace,
}

impl StationControl for TraceReplay<'_> {
    fn apply(&mut self, step: usize, _demand_kw: f64) -> (f64, f64) {
        (self.trace.grid_p[step], self.trace.grid_q[step])
    }
}

/// Smallest amount of a resource with sensitivity `col` that clears every
/// deficit; infinite when some deficit bus cannot be reached.
fn amount_needed(deficit: &[f64], col: &[f64]) -> f64 {
    deficit
        .iter()
        .zip(col)
        .filter(|(d, _)| **d > 0.0)
        .map(|(d, s)| if *s > 0.0 { d / s } else { f64::INFINITY })
        .fold(0.0, f64::max)
}

fn reduce(deficit: &mut [f64], col: &[f64], amount: f64) {
    for (d, s) in deficit.iter_mut().zip(col) {
        *d = (*d - amount * s).max(0.0);
    }
}

/// Real power the station bus must offset at each step to bring every bus
/// up to `target`, using the VLSM prediction of the unmitigated voltage.
pub fn real_support_need(
    vlsm: &Vlsm,
    station_bus: &str,
    station_p: &TimeSeries,
    baseline: Baseline<'_>,
    target: f64,
) -> Result<TimeSeries> {
    let n = vlsm.n();
    baseline.check(n, station_p.len())?;
    let a = vlsm
        .bus_index(station_bus)
        .filter(|&a| vlsm.eligible[a])
        .ok_or_else(|| Error::InvalidBus(station_bus.to_string()))?;
    let p_col = vlsm.p_column(a);
    let mut deficit = vec![0.0; n];
    let values = station_p
        .values
        .iter()
        .enumerate()
        .map(|(t, &pc)| {
            for (i, d) in deficit.iter_mut().enumerate() {
                *d = (target - (baseline.at(i, t) - pc * p_col[i])).max(0.0);
            }
            amount_needed(&deficit, &p_col)
        })
        .collect();
    Ok(TimeSeries {
        start: station_p.start,
        step_minutes: station_p.step_minutes,
        values,
    })
}

/// Steps the plan through `station_p` with PV output `pv_per_kva` (kW per
/// kVA installed). Each step: predict the unmitigated voltage; when it is
/// below `v_lower + margin`, support with PV real power, then storage,
/// then charger vars, then PV vars; otherwise store PV surplus. PV export
/// is curtailed whenever it would push a bus above `v_upper`.
pub fn dispatch(
    plan: &MitigationPlan,
    station_bus: &str,
    station_p: &TimeSeries,
    pv_per_kva: &TimeSeries,
    vlsm: &Vlsm,
    baseline: Baseline<'_>,
) -> Result<DispatchTrace> {
    plan.validate()?;
    station_p.check_aligned(pv_per_kva)?;
    let steps = station_p.len();
    let n = vlsm.n();
    baseline.check(n, steps)?;
    let a = vlsm
        .bus_index(station_bus)
        .filter(|&a| vlsm.eligible[a])
        .ok_or_else(|| Error::InvalidBus(station_bus.to_string()))?;
    let p_col = vlsm.p_column(a);
    let q_col = vlsm.q_column(a);
    let pf_k = plan.pf_control.map(pf_factor).transpose()?;
    let dt = station_p.step_hours();
    let target = plan.v_lower + plan.support_margin;
    let eff = plan.es_efficiency;

    let mut tr = DispatchTrace {
        start: station_p.start,
        es_kwh: plan.es_kwh,
        es_efficiency: eff,
        station_p: station_p.values.clone(),
        grid_p: Vec::with_capacity(steps),
        grid_q: Vec::with_capacity(steps),
        pv_available: Vec::with_capacity(steps),
        pv_real: Vec::with_capacity(steps),
        pv_to_es: Vec::with_capacity(steps),
        pv_curtailed: Vec::with_capacity(steps),
        pv_q: Vec::with_capacity(steps),
        charger_q: Vec::with_capacity(steps),
        es_power: Vec::with_capacity(steps),
        es_soc: Vec::with_capacity(steps),
        es_pv_discharge: Vec::with_capacity(steps),
        support_need: Vec::with_capacity(steps),
        predicted_min: Vec::with_capacity(steps),
        predicted_max: Vec::with_capacity(steps),
    };

    // stored energy split into PV-sourced and other
    let mut stored_pv = 0.0_f64;
    let mut stored_other = plan.es_kwh * plan.es_initial_soc;
    let mut deficit = vec![0.0; n];
    let mut v0 = vec![0.0; n];

    for t in 0..steps {
        let pc = station_p.values[t];
        if pc < 0.0 {
            return Err(Error::NegativePower(pc));
        }
        for (i, v) in v0.iter_mut().enumerate() {
            *v = baseline.at(i, t);
        }
        let mut v_min = f64::INFINITY;
        for i in 0..n {
            let vu = v0[i] - pc * p_col[i];
            v_min = v_min.min(vu);
            deficit[i] = (target - vu).max(0.0);
        }
        let need = deficit.iter().any(|&d| d > 0.0);
        let pv_avail = plan.pv_kva * pv_per_kva.values[t].max(0.0);
        let stored = stored_pv + stored_other;
        let charger_cap = if plan.charger_kva > pc {
            (plan.charger_kva * plan.charger_kva - pc * pc).sqrt()
        } else {
            0.0
        };

        let (mut pv_support, mut es_dis, mut es_chg, mut charger_q, mut pv_q) =
            (0.0, 0.0, 0.0, 0.0, 0.0);
        if need {
            pv_support = pv_avail.min(amount_needed(&deficit, &p_col));
            reduce(&mut deficit, &p_col, pv_support);
            es_dis = plan
                .es_kw
                .min(stored / dt)
                .min(amount_needed(&deficit, &p_col));
            reduce(&mut deficit, &p_col, es_dis);
            charger_q = charger_cap.min(amount_needed(&deficit, &q_col));
            reduce(&mut deficit, &q_col, charger_q);
        }
        // PV beyond what support used goes to storage first
        let spare_pv = pv_avail - pv_support;
        let room = (plan.es_kwh - stored).max(0.0);
        if spare_pv > 0.0 && es_dis == 0.0 {
            es_chg = spare_pv.min(plan.es_kw).min(room / (eff * dt));
        }
        if let Some(k) = pf_k {
            // an unset rating means the charger is built for its PF setting
            let pf_q = pc * k;
            let cap = if plan.charger_kva > 0.0 {
                charger_cap
            } else {
                pf_q
            };
            charger_q = charger_q.max(pf_q).min(cap);
        }
        let mut pv_export = pv_avail - es_chg;

        // curtail export that would lift any bus above the upper limit
        let mut v_max = f64::NEG_INFINITY;
        let mut net_p = pc - pv_export - es_dis;
        let over = |net_p: f64, q_inj: f64, worst: &mut f64| -> f64 {
            let mut excess: f64 = 0.0;
            *worst = f64::NEG_INFINITY;
            for i in 0..n {
                let v = v0[i] - net_p * p_col[i] + q_inj * q_col[i];
                *worst = worst.max(v);
                if v > plan.v_upper && p_col[i] > 0.0 {
                    excess = excess.max((v - plan.v_upper) / p_col[i]);
                }
            }
            excess
        };
        let mut curtailed = 0.0;
        let excess = over(net_p, charger_q, &mut v_max);
        if excess > 0.0 && pv_export > 0.0 {
            curtailed = excess.min(pv_export);
            pv_export -= curtailed;
            net_p += curtailed;
        }
        let pv_out = pv_export + es_chg;

        if need {
            let headroom = (plan.pv_eta * plan.pv_kva).min(
                (plan.pv_kva * plan.pv_kva - pv_out * pv_out)
                    .max(0.0)
                    .sqrt(),
            );
            pv_q = headroom.min(amount_needed(&deficit, &q_col));
            reduce(&mut deficit, &q_col, pv_q);
        }
        over(net_p, charger_q + pv_q, &mut v_max);

        let e_out = es_dis * dt;
        let pv_part = if stored > 0.0 {
            e_out * stored_pv / stored
        } else {
            0.0
        };
        stored_pv -= pv_part;
        stored_other -= e_out - pv_part;
        stored_pv += es_chg * eff * dt;
        stored_pv = stored_pv.max(0.0);
        stored_other = stored_other.max(0.0);

        tr.grid_p.push(net_p);
        tr.grid_q.push(-(charger_q + pv_q));
        tr.pv_available.push(pv_avail);
        tr.pv_real.push(pv_out);
        tr.pv_to_es.push(es_chg);
        tr.pv_curtailed.push(curtailed);
        tr.pv_q.push(pv_q);
        tr.charger_q.push(charger_q);
        tr.es_power.push(es_dis - es_chg);
        tr.es_soc.push(if plan.es_kwh > 0.0 {
            (stored_pv + stored_other) / plan.es_kwh
        } else {
            0.0
        });
        tr.es_pv_discharge.push(pv_part);
        tr.support_need.push(need);
        tr.predicted_min.push(v_min);
        tr.predicted_max.push(v_max);
    }
    Ok(tr)
}

/// Share of available PV energy delivered while support is needed, either
/// directly or later through storage. Stored PV energy is counted at the
/// amount that entered the battery before charging losses, so a full
/// round trip through storage is not penalised.
pub fn effective_pv_fraction(trace: &DispatchTrace, support_need: &[bool]) -> f64 {
    let available: f64 = trace.pv_available.iter().sum::<f64>() * crate::timeseries::STEP_HOURS;
    if available <= 0.0 {
        return 0.0;
    }
    let dt = crate::timeseries::STEP_HOURS;
    let mut used = 0.0;
    for t in 0..trace.len() {
        if support_need.get(t).copied().unwrap_or(false) {
            let direct = (trace.pv_real[t] - trace.pv_to_es[t]) * dt;
            used += direct + trace.es_pv_discharge[t] / trace.es_efficiency;
        }
    }
    (used / available).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{Branch, Bus, BusKind, Feeder, ImpedanceUnit};
    use crate::sensitivity::compute_vlsm;
    use crate::timeseries::default_start;

    #[test]
    fn pf_values() {
        let ts = TimeSeries::new(default_start(), vec![0.0, 3600.0, 1200.0]);
        let q = pf_control_series(&ts, 0.9).unwrap();
        assert_eq!(q.values[0], 0.0);
        assert!((q.values[1] - 1743.6).abs() < 0.05);
        assert!((q.values[2] - 581.2).abs() < 0.05);
        assert_eq!(pf_control_series(&ts, 0.0), Err(Error::InvalidPf(0.0)));
        assert_eq!(pf_control_series(&ts, 1.2), Err(Error::InvalidPf(1.2)));
    }

    fn line() -> Feeder {
        let bus = |id: &str, kind| Bus {
            id: id.into(),
            kind,
            base_kv: 12.47,
            load_connection: kind == BusKind::Load,
            peak_kw: 0.0,
        };
        Feeder {
            name: "line".into(),
            base_power_mva: 10.0,
            buses: vec![
                bus("s", BusKind::Slack),
                bus("a", BusKind::Load),
                bus("b", BusKind::Load),
            ],
            branches: vec![
                Branch {
                    from: "s".into(),
                    to: "a".into(),
                    r: 1.5,
                    x: 2.0,
                },
                Branch {
                    from: "a".into(),
                    to: "b".into(),
                    r: 1.5,
                    x: 2.0,
                },
            ],
            impedance_unit: ImpedanceUnit::Ohm,
            notes: None,
        }
    }

    #[test]
    fn idle_plan_gives_zero_trace() {
        let f = line();
        let vlsm = compute_vlsm(&f, &[], 10.0, 10.0, 1.0).unwrap();
        let plan = MitigationPlan {
            es_kwh: 100.0,
            es_kw: 50.0,
            ..MitigationPlan::default()
        };
        let zero = TimeSeries::zeros(default_start(), 60);
        let tr = dispatch(
            &plan,
            "b",
            &zero,
            &zero,
            &vlsm,
            Baseline::Fixed(&vlsm.base_voltages),
        )
        .unwrap();
        assert!(tr.grid_p.iter().chain(&tr.grid_q).all(|&v| v == 0.0));
        assert!(tr.es_soc.iter().all(|&s| s == 0.5));
    }

    #[test]
    fn storage_shifts_pv_into_need() {
        let f = line();
        let vlsm = compute_vlsm(&f, &[], 10.0, 10.0, 1.0).unwrap();
        // PV only in the first hour, heavy charging only in the second
        let mut load = vec![0.0; 120];
        load[60..].iter_mut().for_each(|v| *v = 6000.0);
        let mut pv = vec![0.0; 120];
        pv[..60].iter_mut().for_each(|v| *v = 1.0);
        let load = TimeSeries::new(default_start(), load);
        let pv = TimeSeries::new(default_start(), pv);
        let plan = MitigationPlan {
            pv_kva: 200.0,
            es_kwh: 400.0,
            es_kw: 400.0,
            es_initial_soc: 0.0,
            ..MitigationPlan::default()
        };
        let tr = dispatch(
            &plan,
            "b",
            &load,
            &pv,
            &vlsm,
            Baseline::Fixed(&vlsm.base_voltages),
        )
        .unwrap();
        assert!(tr.support_need[60..].iter().all(|&n| n));
        assert!(tr.support_need[..60].iter().all(|&n| !n));
        assert!(tr.es_power[..60].iter().all(|&p| p < 0.0));
        assert!(*tr.es_soc.last().unwrap() < tr.es_soc[59]);

        // energy bookkeeping
        let dt = 1.0 / 60.0;
        let charged: f64 = tr.pv_to_es.iter().sum::<f64>() * dt * plan.es_efficiency;
        let discharged: f64 = tr.es_power.iter().filter(|&&p| p > 0.0).sum::<f64>() * dt;
        let delta = (tr.es_soc.last().unwrap() - plan.es_initial_soc) * plan.es_kwh;
        assert!((charged - discharged - delta).abs() < 1e-9);

        let need = tr.support_need.clone();
        let with_es = effective_pv_fraction(&tr, &need);
        let no_es = MitigationPlan {
            es_kwh: 0.0,
            es_kw: 0.0,
            ..plan
        };
        let tr0 = dispatch(
            &no_es,
            "b",
            &load,
            &pv,
            &vlsm,
            Baseline::Fixed(&vlsm.base_voltages),
        )
        .unwrap();
        assert_eq!(effective_pv_fraction(&tr0, &need), 0.0);
        assert!((with_es - 1.0).abs() < 1e-9);
    }

    #[test]
    fn coincident_pv_fully_effective() {
        let f = line();
        let vlsm = compute_vlsm(&f, &[], 10.0, 10.0, 1.0).unwrap();
        let load = TimeSeries::new(default_start(), vec![6000.0; 30]);
        let pv = TimeSeries::new(default_start(), vec![1.0; 30]);
        let plan = MitigationPlan {
            pv_kva: 100.0,
            ..MitigationPlan::default()
        };
        let tr = dispatch(
            &plan,
            "b",
            &load,
            &pv,
            &vlsm,
            Baseline::Fixed(&vlsm.base_voltages),
        )
        .unwrap();
        assert!((effective_pv_fraction(&tr, &tr.support_need) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn curtailment_caps_predicted_voltage() {
        let f = line();
        let vlsm = compute_vlsm(&f, &[], 10.0, 10.0, 1.0).unwrap();
        let load = TimeSeries::zeros(default_start(), 10);
        let pv = TimeSeries::new(default_start(), vec![1.0; 10]);
        let plan = MitigationPlan {
            pv_kva: 50_000.0,
            ..MitigationPlan::default()
        };
        let tr = dispatch(
            &plan,
            "b",
            &load,
            &pv,
            &vlsm,
            Baseline::Fixed(&vlsm.base_voltages),
        )
        .unwrap();
        assert!(tr.pv_curtailed.iter().all(|&c| c > 0.0));
        assert!(tr.predicted_max.iter().all(|&v| v <= plan.v_upper + 1e-12));
        for t in 0..tr.len() {
            assert!((tr.pv_real[t] + tr.pv_curtailed[t] - tr.pv_available[t]).abs() < 1e-9);
        }
    }

    #[test]
    fn misaligned_series_rejected() {
        let f = line();
        let vlsm = compute_vlsm(&f, &[], 10.0, 10.0, 1.0).unwrap();
        let a = TimeSeries::zeros(default_start(), 10);
        let b = TimeSeries::zeros(default_start(), 11);
        let r = dispatch(
            &MitigationPlan::default(),
            "b",
            &a,
            &b,
            &vlsm,
            Baseline::Fixed(&vlsm.base_voltages),
        );
        assert!(matches!(r, Err(Error::SeriesLengthMismatch(_))));
    }
}
