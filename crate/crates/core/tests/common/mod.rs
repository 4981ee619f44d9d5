#![allow(dead_code)]

use std::path::PathBuf;

use hdcharge_core::network::Feeder;
use hdcharge_core::powerflow::LoadPoint;
use hdcharge_core::profiles::LOAD_POWER_FACTOR;
use nalgebra::{Complex, DMatrix, DVector};

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

pub fn fixture_feeder(name: &str) -> Feeder {
    let text = std::fs::read_to_string(fixture_path(name)).unwrap();
    Feeder::from_json(&text).unwrap()
}

/// Every load at its nameplate peak, at the system load power factor.
pub fn peak_loads(feeder: &Feeder) -> Vec<LoadPoint> {
    let tan = LOAD_POWER_FACTOR.acos().tan();
    feeder
        .buses
        .iter()
        .filter(|b| b.load_connection && b.peak_kw > 0.0)
        .map(|b| LoadPoint::new(b.id.clone(), b.peak_kw, b.peak_kw * tan))
        .collect()
}

/// Voltage magnitudes from a nodal-admittance fixed point
/// `V_L = Y_LL^-1 (I_L(V) - Y_LS V_S)`, sharing nothing with the sweep.
pub fn fixed_point_voltages(feeder: &Feeder, loads: &[LoadPoint], slack_v: f64) -> Vec<f64> {
    let pu = feeder.to_per_unit().unwrap();
    let n = pu.buses.len();
    let idx = |id: &str| pu.buses.iter().position(|b| b.id == id).unwrap();
    let mut y = DMatrix::<Complex<f64>>::zeros(n, n);
    for br in &pu.branches {
        let (a, b) = (idx(&br.from), idx(&br.to));
        let g = Complex::new(1.0, 0.0) / Complex::new(br.r, br.x);
        y[(a, a)] += g;
        y[(b, b)] += g;
        y[(a, b)] -= g;
        y[(b, a)] -= g;
    }
    let slack = pu
        .buses
        .iter()
        .position(|b| b.kind == hdcharge_core::network::BusKind::Slack)
        .unwrap();
    let others: Vec<usize> = (0..n).filter(|&i| i != slack).collect();
    let m = others.len();
    let base_kva = pu.base_power_mva * 1000.0;
    let mut s = vec![Complex::new(0.0, 0.0); n];
    for l in loads {
        s[idx(&l.bus)] += Complex::new(l.p, l.q) / base_kva;
    }
    let yll = DMatrix::from_fn(m, m, |r, c| y[(others[r], others[c])]);
    let yls = DVector::from_fn(m, |r, _| y[(others[r], slack)]);
    let lu = yll.lu();
    let vs = Complex::new(slack_v, 0.0);
    let mut v = DVector::from_element(m, vs);
    for _ in 0..1000 {
        let rhs = DVector::from_fn(m, |r, _| -(s[others[r]] / v[r]).conj() - yls[r] * vs);
        let next = lu.solve(&rhs).unwrap();
        let delta = (&next - &v).iter().map(|d| d.norm()).fold(0.0, f64::max);
        v = next;
        if delta < 1e-14 {
            break;
        }
    }
    let mut out = vec![slack_v; n];
    for (r, &i) in others.iter().enumerate() {
        out[i] = v[r].norm();
    }
    out
}
