//! Voltage-load sensitivity matrices, station voltage prediction, support
//! references and location ranking.
//!
//! Sign convention: entries are positive for a radial feeder with positive
//! impedances and give the voltage *drop* per unit of added load, so a load
//! increase `dP` at bus `j` changes the voltage at bus `i` by
//! `-p[i][j] * dP`. [`Vlsm::predict_deviation`] returns that drop.

use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::Feeder;
use crate::par_map;
use crate::powerflow::{LoadPoint, SweepSolver};

/// Default perturbation used to build the matrices.
pub const DEFAULT_PERTURBATION_KW: f64 = 10.0;
pub const DEFAULT_PERTURBATION_KVAR: f64 = 10.0;

/// Default uniform reference voltage for support calculations.
pub const DEFAULT_V_REF: f64 = 0.95;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vlsm {
    pub bus_ids: Vec<String>,
    pub eligible: Vec<bool>,
    /// Row-major `n x n`; `p[i * n + j]` is p.u. volt drop at `i` per kW at `j`.
    pub p: Vec<f64>,
    /// Same for kvar.
    pub q: Vec<f64>,
    pub operating_point: Vec<LoadPoint>,
    /// Voltages at the operating point.
    pub base_voltages: Vec<f64>,
    pub slack_voltage: f64,
}

impl Vlsm {
    pub fn n(&self) -> usize {
        self.bus_ids.len()
    }

    pub fn p_at(&self, i: usize, j: usize) -> f64 {
        self.p[i * self.n() + j]
    }

    pub fn q_at(&self, i: usize, j: usize) -> f64 {
        self.q[i * self.n() + j]
    }

    pub fn bus_index(&self, id: &str) -> Option<usize> {
        self.bus_ids.iter().position(|b| b == id)
    }

    fn station_index(&self, id: &str) -> Result<usize> {
        match self.bus_index(id) {
            Some(i) if self.eligible[i] => Ok(i),
            _ => Err(Error::InvalidBus(id.to_string())),
        }
    }

    /// Voltage drop at every bus for load changes `dp` (kW) and `dq` (kvar).
    pub fn predict_deviation(&self, dp: &[f64], dq: &[f64]) -> Result<Vec<f64>> {
        let n = self.n();
        if dp.len() != n || dq.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "expected {n} entries, got {} and {}",
                dp.len(),
                dq.len()
            )));
        }
        Ok((0..n)
            .map(|i| {
                let row_p = &self.p[i * n..(i + 1) * n];
                let row_q = &self.q[i * n..(i + 1) * n];
                row_p.iter().zip(dp).map(|(s, d)| s * d).sum::<f64>()
                    + row_q.iter().zip(dq).map(|(s, d)| s * d).sum::<f64>()
            })
            .collect())
    }

    /// Column `j` of the real-power matrix.
    pub fn p_column(&self, j: usize) -> Vec<f64> {
        (0..self.n()).map(|i| self.p_at(i, j)).collect()
    }

    pub fn q_column(&self, j: usize) -> Vec<f64> {
        (0..self.n()).map(|i| self.q_at(i, j)).collect()
    }

    /// `bus_id,<bus ids...>` header followed by one row per bus.
    pub fn write_csv<W: Write>(&self, which: Matrix, out: W) -> Result<()> {
        let data = match which {
            Matrix::P => &self.p,
            Matrix::Q => &self.q,
        };
        let n = self.n();
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["bus_id".to_string()];
        header.extend(self.bus_ids.iter().cloned());
        w.write_record(&header)?;
        for i in 0..n {
            let mut row = vec![self.bus_ids[i].clone()];
            row.extend(data[i * n..(i + 1) * n].iter().map(|v| format!("{v:.6e}")));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Matrix {
    P,
    Q,
}

/// Builds both matrices by perturbing each bus in turn around `base_loads`.
pub fn compute_vlsm(
    feeder: &Feeder,
    base_loads: &[LoadPoint],
    perturbation_kw: f64,
    perturbation_kvar: f64,
    slack_voltage: f64,
) -> Result<Vlsm> {
    if perturbation_kw == 0.0 || perturbation_kvar == 0.0 {
        return Err(Error::ZeroPerturbation);
    }
    let solver = SweepSolver::new(feeder)?;
    compute_vlsm_with(
        &solver,
        base_loads,
        perturbation_kw,
        perturbation_kvar,
        slack_voltage,
    )
}

pub fn compute_vlsm_with(
    solver: &SweepSolver,
    base_loads: &[LoadPoint],
    perturbation_kw: f64,
    perturbation_kvar: f64,
    slack_voltage: f64,
) -> Result<Vlsm> {
    if perturbation_kw == 0.0 || perturbation_kvar == 0.0 {
        return Err(Error::ZeroPerturbation);
    }
    let n = solver.bus_count();
    let base_demand = solver.injections(base_loads)?;
    let base = solver.solve_demand(&base_demand, slack_voltage)?;
    let base_kva = solver.base_kva();
    let slack = solver.slack();

    let columns: Vec<Result<(Vec<f64>, Vec<f64>)>> = par_map(n, |j| {
        if j == slack {
            return Ok((vec![0.0; n], vec![0.0; n]));
        }
        let column = |dp: f64, dq: f64| -> Result<Vec<f64>> {
            let mut demand = base_demand.clone();
            demand[j] += Complex64::new(dp, dq) / base_kva;
            let sol = solver.solve_demand(&demand, slack_voltage)?;
            let scale = if dp != 0.0 { dp } else { dq };
            Ok(base
                .voltages
                .iter()
                .zip(&sol.voltages)
                .map(|(b, v)| (b - v) / scale)
                .collect())
        };
        Ok((
            column(perturbation_kw, 0.0)?,
            column(0.0, perturbation_kvar)?,
        ))
    });

    let mut p = vec![0.0; n * n];
    let mut q = vec![0.0; n * n];
    for (j, col) in columns.into_iter().enumerate() {
        let (cp, cq) = col?;
        for i in 0..n {
            p[i * n + j] = cp[i];
            q[i * n + j] = cq[i];
        }
    }
    let mut eligible: Vec<bool> = (0..n)
        .map(|i| solver.eligible_index(&solver.bus_ids()[i]).is_ok())
        .collect();
    eligible[slack] = false;
    Ok(Vlsm {
        bus_ids: solver.bus_ids().to_vec(),
        eligible,
        p,
        q,
        operating_point: base_loads.to_vec(),
        base_voltages: base.voltages,
        slack_voltage,
    })
}

/// Voltages after adding `p_c_max` kW at `station_bus`: `V - p_c_max * p[:, a]`.
pub fn predict_station_voltage(
    vlsm: &Vlsm,
    base_voltages: &[f64],
    station_bus: &str,
    p_c_max: f64,
) -> Result<Vec<f64>> {
    let a = vlsm.station_index(station_bus)?;
    if base_voltages.len() != vlsm.n() {
        return Err(Error::DimensionMismatch(format!(
            "{} base voltages for {} buses",
            base_voltages.len(),
            vlsm.n()
        )));
    }
    Ok(base_voltages
        .iter()
        .enumerate()
        .map(|(i, v)| v - p_c_max * vlsm.p_at(i, a))
        .collect())
}

/// How per-bus support requirements are combined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RefEstimator {
    /// Sum over buses.
    #[default]
    Sum,
    /// Largest single-bus requirement.
    Max,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportRefs {
    /// kW
    pub p_ref: f64,
    /// kvar
    pub q_ref: f64,
    /// Clamped deviation `min(V' - V_ref, 0)` per bus.
    pub delta_v: Vec<f64>,
    pub v_ref: Vec<f64>,
}

/// Real and reactive support needed at `station_bus` to lift every bus
/// below its reference back to it. Buses above reference do not offset.
pub fn compute_refs(
    vlsm: &Vlsm,
    v_predicted: &[f64],
    v_ref: &[f64],
    station_bus: &str,
    estimator: RefEstimator,
) -> Result<SupportRefs> {
    let n = vlsm.n();
    if v_predicted.len() != n || v_ref.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "{} predicted and {} reference voltages for {n} buses",
            v_predicted.len(),
            v_ref.len()
        )));
    }
    let a = vlsm.station_index(station_bus)?;
    let delta_v: Vec<f64> = v_predicted
        .iter()
        .zip(v_ref)
        .map(|(v, r)| (v - r).min(0.0))
        .collect();
    let (mut p_ref, mut q_ref) = (0.0_f64, 0.0_f64);
    for (i, &dv) in delta_v.iter().enumerate() {
        if dv >= 0.0 {
            continue;
        }
        let (sp, sq) = (vlsm.p_at(i, a), vlsm.q_at(i, a));
        if sp == 0.0 || sq == 0.0 {
            return Err(Error::ZeroSensitivity(vlsm.bus_ids[i].clone()));
        }
        let (need_p, need_q) = (-dv / sp, -dv / sq);
        match estimator {
            RefEstimator::Sum => {
                p_ref += need_p;
                q_ref += need_q;
            }
            RefEstimator::Max => {
                p_ref = p_ref.max(need_p);
                q_ref = q_ref.max(need_q);
            }
        }
    }
    Ok(SupportRefs {
        p_ref,
        q_ref,
        delta_v,
        v_ref: v_ref.to_vec(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LocationClass {
    Best,
    Good,
    Worst,
}

impl LocationClass {
    pub const ALL: [LocationClass; 3] = [
        LocationClass::Best,
        LocationClass::Good,
        LocationClass::Worst,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            LocationClass::Best => "best",
            LocationClass::Good => "good",
            LocationClass::Worst => "worst",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankEntry {
    pub bus: String,
    pub score: f64,
    pub group: LocationClass,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImpactRanking {
    /// Best first.
    pub entries: Vec<RankEntry>,
    /// Median-score member of the best, good and worst groups.
    pub representatives: [String; 3],
}

impl ImpactRanking {
    pub fn representative(&self, class: LocationClass) -> &str {
        &self.representatives[class as usize]
    }

    /// `bus_id,score,group`
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["bus_id", "score", "group"])?;
        for e in &self.entries {
            w.write_record([e.bus.as_str(), &format!("{:.8}", e.score), e.group.as_str()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Scores every eligible bus by the total predicted voltage depression a
/// `p_c_max` station there would cause, then splits into terciles.
pub fn rank_locations(vlsm: &Vlsm, p_c_max: f64) -> Result<ImpactRanking> {
    let n = vlsm.n();
    let mut entries: Vec<(String, f64)> = (0..n)
        .filter(|&a| vlsm.eligible[a])
        .map(|a| {
            let total: f64 = (0..n).map(|i| vlsm.p_at(i, a)).sum();
            (vlsm.bus_ids[a].clone(), p_c_max * total)
        })
        .collect();
    if entries.is_empty() {
        return Err(Error::InvalidBus("no eligible station buses".into()));
    }
    entries.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.cmp(&b.0)));
    let m = entries.len();
    let entries: Vec<RankEntry> = entries
        .into_iter()
        .enumerate()
        .map(|(k, (bus, score))| RankEntry {
            bus,
            score,
            group: LocationClass::ALL[(k * 3 / m).min(2)],
        })
        .collect();
    let representatives = LocationClass::ALL.map(|class| {
        let members: Vec<&RankEntry> = entries.iter().filter(|e| e.group == class).collect();
        // small feeders can leave a group empty; fall back to the nearest rank
        if members.is_empty() {
            let k = ((class as usize) * (m - 1)) / 2;
            entries[k].bus.clone()
        } else {
            members[(members.len() - 1) / 2].bus.clone()
        }
    });
    Ok(ImpactRanking {
        entries,
        representatives,
    })
}
