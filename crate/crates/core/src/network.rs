//! Radial feeder data model, per-unit normalization and topology checks.
//!
//! Branch impedances are carried in ohms unless [`Feeder::to_per_unit`] has
//! been applied; the unit travels with the feeder so a conversion is never
//! applied twice.

mod bundled;

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use bundled::bundled_feeder;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BusKind {
    Slack,
    Load,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bus {
    pub id: String,
    pub kind: BusKind,
    /// Line-to-line base voltage in kV.
    pub base_kv: f64,
    /// Eligible for system load or charging-station attachment.
    pub load_connection: bool,
    /// Peak system load attached to this bus, kW. Zero means no system load.
    #[serde(default, skip_serializing_if = "is_zero")]
    pub peak_kw: f64,
}

fn is_zero(v: &f64) -> bool {
    *v == 0.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub from: String,
    pub to: String,
    /// Series resistance (ohms, or p.u. after normalization).
    #[serde(rename = "r_ohm")]
    pub r: f64,
    /// Series reactance (ohms, or p.u. after normalization).
    #[serde(rename = "x_ohm")]
    pub x: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ImpedanceUnit {
    #[default]
    Ohm,
    PerUnit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Feeder {
    #[serde(default)]
    pub name: String,
    pub base_power_mva: f64,
    pub buses: Vec<Bus>,
    pub branches: Vec<Branch>,
    #[serde(default, skip_serializing_if = "is_ohm")]
    pub impedance_unit: ImpedanceUnit,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub notes: Option<String>,
}

fn is_ohm(u: &ImpedanceUnit) -> bool {
    *u == ImpedanceUnit::Ohm
}

/// Topological view of a radial feeder.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepOrder {
    /// Bus indices from the leaves towards the slack; the slack is last.
    pub order: Vec<usize>,
    /// Parent bus index for each bus (`None` for the slack).
    pub parent: Vec<Option<usize>>,
    /// Index of the branch connecting each bus to its parent.
    pub parent_branch: Vec<Option<usize>>,
}

impl SweepOrder {
    pub fn slack(&self) -> usize {
        *self.order.last().expect("non-empty feeder")
    }

    /// Buses from the slack outwards (parents before children).
    pub fn forward(&self) -> impl Iterator<Item = usize> + '_ {
        self.order.iter().rev().copied()
    }

    /// Path from `bus` up to (and excluding) the slack, as bus indices.
    pub fn path_to_root(&self, bus: usize) -> Vec<usize> {
        let mut path = Vec::new();
        let mut cur = bus;
        while let Some(p) = self.parent[cur] {
            path.push(cur);
            cur = p;
        }
        path
    }
}

impl Feeder {
    pub fn bus_index(&self, id: &str) -> Option<usize> {
        self.buses.iter().position(|b| b.id == id)
    }

    pub fn slack_index(&self) -> Option<usize> {
        self.buses.iter().position(|b| b.kind == BusKind::Slack)
    }

    /// Buses carrying system load.
    pub fn load_buses(&self) -> impl Iterator<Item = usize> + '_ {
        self.buses
            .iter()
            .enumerate()
            .filter(|(_, b)| b.kind == BusKind::Load && b.load_connection && b.peak_kw > 0.0)
            .map(|(i, _)| i)
    }

    /// Non-slack buses where a station may be attached.
    pub fn eligible_buses(&self) -> Vec<usize> {
        self.buses
            .iter()
            .enumerate()
            .filter(|(_, b)| b.kind == BusKind::Load && b.load_connection)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn total_peak_kw(&self) -> f64 {
        self.load_buses().map(|i| self.buses[i].peak_kw).sum()
    }

    /// Checks radiality and returns a leaves-to-root sweep ordering.
    pub fn validate_radial(&self) -> Result<SweepOrder> {
        validate_radial(self)
    }

    /// Converts branch impedances to per-unit on the feeder base.
    ///
    /// `Z_pu = Z_ohm * base_power_mva / base_kv^2`, using the base voltage of
    /// the branch's `to` bus. A feeder already in per-unit is returned as is.
    pub fn to_per_unit(&self) -> Result<Feeder> {
        if self.impedance_unit == ImpedanceUnit::PerUnit {
            return Ok(self.clone());
        }
        self.rescale_impedances(ImpedanceUnit::PerUnit, |z, zb| z / zb)
    }

    /// Inverse of [`Feeder::to_per_unit`].
    pub fn to_ohms(&self) -> Result<Feeder> {
        if self.impedance_unit == ImpedanceUnit::Ohm {
            return Ok(self.clone());
        }
        self.rescale_impedances(ImpedanceUnit::Ohm, |z, zb| z * zb)
    }

    fn rescale_impedances(
        &self,
        unit: ImpedanceUnit,
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<Feeder> {
        if !(self.base_power_mva.is_finite() && self.base_power_mva > 0.0) {
            return Err(Error::MissingBase("base_power_mva".into()));
        }
        let mut out = self.clone();
        for br in &mut out.branches {
            let bus = self
                .buses
                .iter()
                .find(|b| b.id == br.to)
                .ok_or_else(|| Error::InvalidBus(br.to.clone()))?;
            if !(bus.base_kv.is_finite() && bus.base_kv > 0.0) {
                return Err(Error::MissingBase(format!("base_kv of bus `{}`", bus.id)));
            }
            let z_base = bus.base_kv * bus.base_kv / self.base_power_mva;
            br.r = f(br.r, z_base);
            br.x = f(br.x, z_base);
        }
        out.impedance_unit = unit;
        Ok(out)
    }

    pub fn from_json(text: &str) -> Result<Feeder> {
        let feeder: Feeder = serde_json::from_str(text)?;
        feeder.validate_radial()?;
        Ok(feeder)
    }

    /// Serializes in ohms, the canonical on-disk unit.
    pub fn to_json(&self) -> Result<String> {
        let ohmic = self.to_ohms()?;
        Ok(serde_json::to_string_pretty(&ohmic)?)
    }
}

/// Breadth-first radiality check from the single slack bus.
pub fn validate_radial(feeder: &Feeder) -> Result<SweepOrder> {
    let n = feeder.buses.len();
    let slacks: Vec<usize> = feeder
        .buses
        .iter()
        .enumerate()
        .filter(|(_, b)| b.kind == BusKind::Slack)
        .map(|(i, _)| i)
        .collect();
    if slacks.len() != 1 {
        return Err(Error::MultipleSlack(slacks.len()));
    }
    let slack = slacks[0];

    for (i, b) in feeder.buses.iter().enumerate() {
        if !(b.base_kv.is_finite() && b.base_kv > 0.0) {
            return Err(Error::InvalidFeeder(format!(
                "bus `{}` has non-positive base_kv",
                b.id
            )));
        }
        if feeder.buses[..i].iter().any(|o| o.id == b.id) {
            return Err(Error::InvalidFeeder(format!("duplicate bus id `{}`", b.id)));
        }
        if !(b.peak_kw.is_finite() && b.peak_kw >= 0.0) {
            return Err(Error::InvalidFeeder(format!(
                "bus `{}` has invalid peak_kw",
                b.id
            )));
        }
    }

    let mut adjacency: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    for (k, br) in feeder.branches.iter().enumerate() {
        let f = feeder
            .bus_index(&br.from)
            .ok_or_else(|| Error::InvalidBus(br.from.clone()))?;
        let t = feeder
            .bus_index(&br.to)
            .ok_or_else(|| Error::InvalidBus(br.to.clone()))?;
        if f == t {
            return Err(Error::CycleDetected(br.from.clone()));
        }
        if !(br.r.is_finite() && br.x.is_finite()) || br.r < 0.0 || br.r.hypot(br.x) == 0.0 {
            return Err(Error::InvalidFeeder(format!(
                "branch {}-{} needs r >= 0 and |Z| > 0",
                br.from, br.to
            )));
        }
        adjacency[f].push((t, k));
        adjacency[t].push((f, k));
    }

    let mut parent = vec![None; n];
    let mut parent_branch = vec![None; n];
    let mut visited = vec![false; n];
    let mut bfs = Vec::with_capacity(n);
    let mut queue = VecDeque::from([slack]);
    visited[slack] = true;
    while let Some(u) = queue.pop_front() {
        bfs.push(u);
        for &(v, k) in &adjacency[u] {
            if parent_branch[u] == Some(k) {
                continue;
            }
            if visited[v] {
                return Err(Error::CycleDetected(feeder.buses[v].id.clone()));
            }
            visited[v] = true;
            parent[v] = Some(u);
            parent_branch[v] = Some(k);
            queue.push_back(v);
        }
    }
    if let Some(i) = visited.iter().position(|v| !v) {
        return Err(Error::DisconnectedBus(feeder.buses[i].id.clone()));
    }

    bfs.reverse();
    Ok(SweepOrder {
        order: bfs,
        parent,
        parent_branch,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeederName {
    Ieee34Like,
    SingleFeeder,
    TwoFeeder,
    Dedicated,
}

impl FeederName {
    pub const ALL: [FeederName; 4] = [
        FeederName::Ieee34Like,
        FeederName::SingleFeeder,
        FeederName::TwoFeeder,
        FeederName::Dedicated,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FeederName::Ieee34Like => "ieee34_like",
            FeederName::SingleFeeder => "single_feeder",
            FeederName::TwoFeeder => "two_feeder",
            FeederName::Dedicated => "dedicated",
        }
    }
}

impl fmt::Display for FeederName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FeederName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FeederName::ALL
            .into_iter()
            .find(|n| n.as_str() == s)
            .ok_or_else(|| Error::UnknownFeeder(s.to_string()))
    }
}
