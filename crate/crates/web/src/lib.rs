//! Browser bindings for three small studies. Every export takes plain
//! numbers or strings and returns a JSON document, so the page needs no
//! bundler or glue beyond the generated module.

use std::collections::HashMap;
use std::str::FromStr;

use hdcharge_core::network::{bundled_feeder, FeederName};
use hdcharge_core::powerflow::{LoadPoint, SweepSolver};
use hdcharge_core::profiles::LOAD_POWER_FACTOR;
use hdcharge_core::sensitivity::{compute_vlsm_with, rank_locations, LocationClass};
use hdcharge_core::sizing::{classify_scenario, cost_curve, size_system, PriceSet, SizingInputs};
use hdcharge_core::station::{
    monte_carlo, StationConfig, TrafficParams, TrafficPattern, DEFAULT_PORT_POWER_KW,
};
use serde::Serialize;
use wasm_bindgen::prelude::*;

#[derive(Debug, Serialize)]
pub struct CostCurve {
    pub scenario: u8,
    pub s_max: f64,
    pub s_charger: f64,
    pub s_pv: f64,
    pub cost: f64,
    pub curve: Vec<(f64, f64)>,
}

pub fn cost_curve_study(
    lambda_charger: f64,
    lambda_pv_es: f64,
    p_c_max: f64,
    q_ref: f64,
) -> Result<CostCurve, String> {
    let prices = PriceSet::composite(lambda_charger, lambda_pv_es);
    let inputs = SizingInputs {
        p_c_max,
        q_ref,
        p_ref: 0.0,
        eta: 1.0,
        delta: 0.0,
        alpha: 0.0,
        beta: 0.0,
    };
    let r = size_system(&inputs, &prices).map_err(|e| e.to_string())?;
    Ok(CostCurve {
        scenario: classify_scenario(&prices),
        s_max: r.s_max,
        s_charger: r.s_charger,
        s_pv: r.s_pv,
        cost: r.cost,
        curve: cost_curve(&prices, p_c_max, q_ref, 200),
    })
}

#[derive(Debug, Serialize)]
pub struct StationDay {
    pub peak_kw: f64,
    pub bound_kw: f64,
    pub energy_kwh: f64,
    pub mean_kw: Vec<f64>,
    pub max_kw: Vec<f64>,
}

pub fn station_day_study(
    ports: usize,
    pattern: &str,
    iterations: usize,
    seed: u64,
) -> Result<StationDay, String> {
    let pattern = TrafficPattern::from_str(pattern).map_err(|e| e.to_string())?;
    let config = StationConfig::new(ports, pattern);
    let traffic = TrafficParams {
        pattern,
        days: 1,
        ..TrafficParams::default()
    };
    let mc = monte_carlo(&config, &traffic, iterations.max(1), seed).map_err(|e| e.to_string())?;
    let s = mc.summary;
    Ok(StationDay {
        peak_kw: s.max_envelope.max(),
        bound_kw: config.peak_bound(),
        energy_kwh: s.mean.integral(),
        mean_kw: s.mean.values,
        max_kw: s.max_envelope.values,
    })
}

#[derive(Debug, Serialize)]
pub struct BusVoltage {
    pub bus: String,
    /// Series impedance from the slack, p.u.
    pub distance: f64,
    pub base: f64,
    pub with_station: f64,
}

#[derive(Debug, Serialize)]
pub struct VoltageProfile {
    pub station_bus: String,
    pub min_base: f64,
    pub min_with_station: f64,
    pub buses: Vec<BusVoltage>,
}

/// Snapshot at `load_scale` times nameplate load with a `ports`-port
/// station drawing full power at the `location` class bus.
pub fn voltage_profile_study(
    feeder: &str,
    location: &str,
    ports: usize,
    load_scale: f64,
    pf_control: bool,
) -> Result<VoltageProfile, String> {
    let name = FeederName::from_str(feeder).map_err(|e| e.to_string())?;
    let class = match location {
        "best" => LocationClass::Best,
        "good" => LocationClass::Good,
        "worst" => LocationClass::Worst,
        other => return Err(format!("unknown location class `{other}`")),
    };
    let f = bundled_feeder(name);
    let solver = SweepSolver::new(&f).map_err(|e| e.to_string())?;
    let tan = LOAD_POWER_FACTOR.acos().tan();
    let peak: Vec<LoadPoint> = f
        .buses
        .iter()
        .filter(|b| b.load_connection && b.peak_kw > 0.0)
        .map(|b| LoadPoint::new(b.id.clone(), b.peak_kw, b.peak_kw * tan))
        .collect();
    let vlsm = compute_vlsm_with(&solver, &peak, 10.0, 10.0, 1.0).map_err(|e| e.to_string())?;
    let bus = rank_locations(&vlsm, 3.0 * DEFAULT_PORT_POWER_KW)
        .map_err(|e| e.to_string())?
        .representative(class)
        .to_string();

    let mut loads: Vec<LoadPoint> = peak
        .iter()
        .map(|l| LoadPoint::new(l.bus.clone(), l.p * load_scale, l.q * load_scale))
        .collect();
    let base = solver.solve(&loads, 1.0).map_err(|e| e.to_string())?;
    let p = ports as f64 * DEFAULT_PORT_POWER_KW;
    let q = if pf_control {
        -p * 0.9_f64.acos().tan()
    } else {
        0.0
    };
    loads.push(LoadPoint::new(bus.clone(), p, q));
    let with = solver.solve(&loads, 1.0).map_err(|e| e.to_string())?;

    let pu = f.to_per_unit().map_err(|e| e.to_string())?;
    let upstream: HashMap<&str, (&str, f64)> = pu
        .branches
        .iter()
        .map(|b| (b.to.as_str(), (b.from.as_str(), b.r.hypot(b.x))))
        .collect();
    let distance = |id: &str| {
        let (mut d, mut at) = (0.0, id);
        while let Some(&(from, z)) = upstream.get(at) {
            d += z;
            at = from;
        }
        d
    };
    let mut buses: Vec<BusVoltage> = solver
        .bus_ids()
        .iter()
        .enumerate()
        .map(|(i, id)| BusVoltage {
            bus: id.clone(),
            distance: distance(id),
            base: base.voltages[i],
            with_station: with.voltages[i],
        })
        .collect();
    buses.sort_by(|a, b| {
        a.distance
            .total_cmp(&b.distance)
            .then_with(|| a.bus.cmp(&b.bus))
    });
    Ok(VoltageProfile {
        station_bus: bus,
        min_base: base.voltages.iter().copied().fold(f64::INFINITY, f64::min),
        min_with_station: with.voltages.iter().copied().fold(f64::INFINITY, f64::min),
        buses,
    })
}

fn to_js<T: Serialize>(r: Result<T, String>) -> Result<String, JsError> {
    let v = r.map_err(|e| JsError::new(&e))?;
    serde_json::to_string(&v).map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen]
pub fn cost_curve_json(
    lambda_charger: f64,
    lambda_pv_es: f64,
    p_c_max: f64,
    q_ref: f64,
) -> Result<String, JsError> {
    to_js(cost_curve_study(
        lambda_charger,
        lambda_pv_es,
        p_c_max,
        q_ref,
    ))
}

#[wasm_bindgen]
pub fn station_day_json(
    ports: usize,
    pattern: &str,
    iterations: usize,
    seed: u64,
) -> Result<String, JsError> {
    to_js(station_day_study(ports, pattern, iterations, seed))
}

#[wasm_bindgen]
pub fn voltage_profile_json(
    feeder: &str,
    location: &str,
    ports: usize,
    load_scale: f64,
    pf_control: bool,
) -> Result<String, JsError> {
    to_js(voltage_profile_study(
        feeder, location, ports, load_scale, pf_control,
    ))
}
