//! Scenario matrix, hosting capacity and the PV-ES-charger design chain.
//!
//! Every random input is derived from one master seed by hashing a tag
//! that names the input (`loads/ieee34_like/residential`, `station/3/multishift`),
//! so a scenario's result does not depend on which other scenarios ran.

use std::collections::hash_map::Entry;
use std::collections::HashMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::mitigation::{
    dispatch, effective_pv_fraction, real_support_need, Baseline, DispatchTrace, MitigationPlan,
    PfControl, DEFAULT_ES_EFFICIENCY, DEFAULT_ES_INITIAL_SOC, DEFAULT_PF, DEFAULT_SUPPORT_MARGIN,
};
use crate::network::{bundled_feeder, Feeder, FeederName};
use crate::powerflow::{
    qsts, LoadPoint, QstsOptions, QstsResult, StationControl, StationLoad, SweepSolver,
    ViolationReport, DEFAULT_LOWER_PU, DEFAULT_UPPER_PU,
};
use crate::profiles::{
    concat_days, generate_pv_profiles, generate_system_loads, LoadPattern, ProfileSet,
    LOAD_POWER_FACTOR,
};
use crate::sensitivity::{
    compute_refs, compute_vlsm_with, predict_station_voltage, rank_locations, ImpactRanking,
    LocationClass, RefEstimator, SupportRefs, Vlsm, DEFAULT_PERTURBATION_KVAR,
    DEFAULT_PERTURBATION_KW,
};
use crate::sizing::{
    default_fit_grid, fit_alpha_beta_with, size_system, AlphaBeta, FitAggregation, PriceSet,
    SizingInputs, SizingResult,
};
use crate::station::{
    monte_carlo, StationConfig, TrafficParams, TrafficPattern, DEFAULT_PORT_POWER_KW,
};
use crate::timeseries::{TimeSeries, MINUTES_PER_DAY};
use crate::{Error, Result};

/// Station sizes evaluated for hosting, ascending.
pub const PORT_COUNTS: [usize; 3] = [1, 3, 6];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mitigation {
    #[default]
    None,
    PfControl,
    PvEsCharger,
}

impl Mitigation {
    pub const ALL: [Mitigation; 3] = [
        Mitigation::None,
        Mitigation::PfControl,
        Mitigation::PvEsCharger,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Mitigation::None => "none",
            Mitigation::PfControl => "pf_control",
            Mitigation::PvEsCharger => "pv_es_charger",
        }
    }
}

impl fmt::Display for Mitigation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mitigation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Mitigation::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::InvalidScenario(format!("unknown mitigation `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Scenario {
    pub id: String,
    pub feeder: FeederName,
    pub location: LocationClass,
    pub ports: usize,
    pub charging: TrafficPattern,
    pub system: LoadPattern,
    pub mitigation: Mitigation,
    pub seed: u64,
}

impl Scenario {
    pub fn new(
        feeder: FeederName,
        location: LocationClass,
        ports: usize,
        charging: TrafficPattern,
        system: LoadPattern,
        mitigation: Mitigation,
        seed: u64,
    ) -> Result<Self> {
        let s = Scenario {
            id: format!(
                "{}-{}-{}p-{}-{}-{}",
                feeder.as_str(),
                location.as_str(),
                ports,
                charging.as_str(),
                system.as_str(),
                mitigation.as_str()
            ),
            feeder,
            location,
            ports,
            charging,
            system,
            mitigation,
            seed,
        };
        s.validate()?;
        Ok(s)
    }

    /// Commercial loads only on the IEEE-style system; the dedicated feeder
    /// has one location and only 3- and 6-port stations.
    pub fn validate(&self) -> Result<()> {
        let ok = locations(self.feeder).contains(&self.location)
            && port_counts(self.feeder).contains(&self.ports)
            && system_patterns(self.feeder).contains(&self.system);
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidScenario(format!(
                "{} does not take {} / {} ports / {} loads",
                self.feeder,
                self.location.as_str(),
                self.ports,
                self.system.as_str()
            )))
        }
    }
}

fn locations(feeder: FeederName) -> &'static [LocationClass] {
    match feeder {
        FeederName::Dedicated => &[LocationClass::Best],
        _ => &LocationClass::ALL,
    }
}

fn port_counts(feeder: FeederName) -> &'static [usize] {
    match feeder {
        FeederName::Dedicated => &[3, 6],
        _ => &PORT_COUNTS,
    }
}

fn system_patterns(feeder: FeederName) -> &'static [LoadPattern] {
    match feeder {
        FeederName::Ieee34Like => &[LoadPattern::Residential, LoadPattern::Commercial],
        _ => &[LoadPattern::Residential],
    }
}

/// All valid combinations for one feeder, in a fixed order.
pub fn enumerate_scenarios(feeder: FeederName, mitigation: Mitigation, seed: u64) -> Vec<Scenario> {
    let mut out = Vec::new();
    for &location in locations(feeder) {
        for &ports in port_counts(feeder) {
            for charging in TrafficPattern::ALL {
                for &system in system_patterns(feeder) {
                    out.push(
                        Scenario::new(feeder, location, ports, charging, system, mitigation, seed)
                            .expect("enumerated combinations are valid"),
                    );
                }
            }
        }
    }
    out
}

/// Mixes a master seed with a tag (FNV-1a, then a splitmix64 finalizer).
pub fn derive_seed(master: u64, tag: &str) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325_u64 ^ master;
    for b in tag.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    let mut z = h.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Settings for the PV-ES-charger design chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PvEsOptions {
    pub lambda_charger: f64,
    pub lambda_pv: f64,
    pub lambda_es_e: f64,
    pub lambda_es_p: f64,
    /// Skip the fit and use these storage coefficients.
    pub alpha_beta: Option<[f64; 2]>,
    pub fit: FitAggregation,
    pub eta: f64,
    pub delta: f64,
    pub estimator: RefEstimator,
    pub es_efficiency: f64,
    pub es_initial_soc: f64,
    pub support_margin: f64,
}

impl Default for PvEsOptions {
    fn default() -> Self {
        PvEsOptions {
            lambda_charger: 17_956.0,
            lambda_pv: 1000.0,
            lambda_es_e: 661.0,
            lambda_es_p: 350.0,
            alpha_beta: None,
            fit: FitAggregation::DesignDay,
            eta: 1.0,
            delta: 0.0,
            // the per-bus sum counts every bus below the reference and
            // grows with feeder size; the binding bus is the design case
            estimator: RefEstimator::Max,
            es_efficiency: DEFAULT_ES_EFFICIENCY,
            es_initial_soc: DEFAULT_ES_INITIAL_SOC,
            support_margin: DEFAULT_SUPPORT_MARGIN,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Horizon of every QSTS run.
    pub days: usize,
    /// Station draws behind the max envelope.
    pub mc_iterations: usize,
    pub slack_voltage: f64,
    pub v_lower: f64,
    pub v_upper: f64,
    pub pf: f64,
    pub pv_es: PvEsOptions,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            days: 30,
            mc_iterations: 10,
            slack_voltage: 1.0,
            v_lower: DEFAULT_LOWER_PU,
            v_upper: DEFAULT_UPPER_PU,
            pf: DEFAULT_PF,
            pv_es: PvEsOptions::default(),
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        if self.days == 0 || self.mc_iterations == 0 {
            return Err(Error::InvalidScenario(
                "days and mc_iterations must be positive".into(),
            ));
        }
        if !(self.v_lower < self.v_upper) {
            return Err(Error::InvalidScenario(format!(
                "voltage band [{}, {}] is empty",
                self.v_lower, self.v_upper
            )));
        }
        if !(self.pf > 0.0 && self.pf <= 1.0) {
            return Err(Error::InvalidPf(self.pf));
        }
        Ok(())
    }

    fn qsts_options(&self, record: bool) -> QstsOptions {
        QstsOptions {
            slack_voltage: self.slack_voltage,
            record_trajectories: record,
        }
    }
}

/// A bundled feeder with its solver and location ranking. The ranking uses
/// a VLSM taken at every load's nameplate peak.
#[derive(Debug, Clone)]
pub struct FeederContext {
    pub name: FeederName,
    pub feeder: Feeder,
    pub solver: SweepSolver,
    pub peak_loads: Vec<LoadPoint>,
    pub ranking: ImpactRanking,
}

impl FeederContext {
    pub fn new(name: FeederName, slack_voltage: f64) -> Result<Self> {
        let feeder = bundled_feeder(name);
        let solver = SweepSolver::new(&feeder)?;
        let tan = LOAD_POWER_FACTOR.acos().tan();
        let peak_loads: Vec<LoadPoint> = feeder
            .buses
            .iter()
            .filter(|b| b.load_connection && b.peak_kw > 0.0)
            .map(|b| LoadPoint::new(b.id.clone(), b.peak_kw, b.peak_kw * tan))
            .collect();
        let vlsm = compute_vlsm_with(
            &solver,
            &peak_loads,
            DEFAULT_PERTURBATION_KW,
            DEFAULT_PERTURBATION_KVAR,
            slack_voltage,
        )?;
        let ranking = rank_locations(&vlsm, 3.0 * DEFAULT_PORT_POWER_KW)?;
        Ok(FeederContext {
            name,
            feeder,
            solver,
            peak_loads,
            ranking,
        })
    }

    pub fn location_bus(&self, class: LocationClass) -> &str {
        self.ranking.representative(class)
    }

    /// System loads for `pattern` over `days`; empty on the dedicated feeder.
    pub fn loads(&self, pattern: LoadPattern, days: usize, master_seed: u64) -> Result<ProfileSet> {
        let seed = derive_seed(
            master_seed,
            &format!("loads/{}/{}", self.name, pattern.as_str()),
        );
        generate_system_loads(&self.feeder, pattern, days, seed)
    }
}

/// Max envelope of the Monte Carlo station draws for one size and pattern.
pub fn station_envelope(
    ports: usize,
    charging: TrafficPattern,
    cfg: &ScenarioConfig,
    master_seed: u64,
) -> Result<TimeSeries> {
    let config = StationConfig::new(ports, charging);
    let traffic = TrafficParams {
        pattern: charging,
        days: cfg.days,
        ..TrafficParams::default()
    };
    let seed = derive_seed(
        master_seed,
        &format!("station/{ports}/{}", charging.as_str()),
    );
    Ok(monte_carlo(&config, &traffic, cfg.mc_iterations, seed)?
        .summary
        .max_envelope)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioReport {
    pub scenario: Scenario,
    pub bus: String,
    pub min_v: f64,
    pub max_v: f64,
    pub worst_bus: String,
    pub station_peak_kw: f64,
    pub violations: ViolationReport,
}

impl ScenarioReport {
    pub fn hosted(&self) -> bool {
        self.violations.is_clean()
    }
}

fn annotate<T>(id: &str, r: Result<T>) -> Result<T> {
    r.map_err(|e| Error::Scenario {
        id: id.to_string(),
        source: Box::new(e),
    })
}

/// Builds the feeder context and loads, then runs one scenario.
pub fn run_scenario(s: &Scenario, cfg: &ScenarioConfig) -> Result<ScenarioReport> {
    annotate(
        &s.id,
        (|| {
            s.validate()?;
            cfg.validate()?;
            let ctx = FeederContext::new(s.feeder, cfg.slack_voltage)?;
            let loads = ctx.loads(s.system, cfg.days, s.seed)?;
            let profile = station_envelope(s.ports, s.charging, cfg, s.seed)?;
            run_scenario_with(&ctx, &loads, &profile, s, cfg)
        })(),
    )
}

/// Runs one scenario against prepared loads and station profile.
pub fn run_scenario_with(
    ctx: &FeederContext,
    loads: &ProfileSet,
    station_profile: &TimeSeries,
    s: &Scenario,
    cfg: &ScenarioConfig,
) -> Result<ScenarioReport> {
    annotate(
        &s.id,
        (|| {
            let bus = ctx.location_bus(s.location).to_string();
            let p_c_max = s.ports as f64 * DEFAULT_PORT_POWER_KW;
            let result = simulate(
                ctx,
                loads,
                &bus,
                station_profile,
                s.mitigation,
                p_c_max,
                s.seed,
                cfg,
            )?;
            Ok(ScenarioReport {
                scenario: s.clone(),
                min_v: result.min_voltage(),
                max_v: result.max_voltage(),
                worst_bus: result.worst_bus().to_string(),
                station_peak_kw: station_profile.max(),
                violations: result.violations(cfg.v_lower, cfg.v_upper),
                bus,
            })
        })(),
    )
}

#[allow(clippy::too_many_arguments)]
fn simulate(
    ctx: &FeederContext,
    loads: &ProfileSet,
    bus: &str,
    station_profile: &TimeSeries,
    mitigation: Mitigation,
    p_c_max: f64,
    seed: u64,
    cfg: &ScenarioConfig,
) -> Result<QstsResult> {
    let station = Some(StationLoad {
        bus,
        profile: station_profile,
    });
    match mitigation {
        Mitigation::None => qsts(&ctx.solver, loads, station, None, cfg.qsts_options(false)),
        Mitigation::PfControl => {
            let mut pf = PfControl::new(cfg.pf)?;
            qsts(
                &ctx.solver,
                loads,
                station,
                Some(&mut pf),
                cfg.qsts_options(false),
            )
        }
        Mitigation::PvEsCharger => {
            let pv_days = pv_fixture(station_profile.len().div_ceil(MINUTES_PER_DAY), seed);
            let pv = concat_days(&pv_days).tiled(station_profile.len());
            let pv = TimeSeries {
                start: station_profile.start,
                ..pv
            };
            let design = design_pv_es(ctx, loads, bus, station_profile, &pv, p_c_max, cfg)?;
            let mut replay = design.trace.controller();
            qsts(
                &ctx.solver,
                loads,
                station,
                Some(&mut replay),
                cfg.qsts_options(false),
            )
        }
    }
}

/// Daily PV output per kVA installed for the design chain.
pub fn pv_fixture(days: usize, master_seed: u64) -> Vec<TimeSeries> {
    generate_pv_profiles(days, 1.0, derive_seed(master_seed, "pv"))
}

/// Everything the PV-ES-charger chain derives for one station.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PvEsDesign {
    pub bus: String,
    /// Step of the lowest baseline voltage; the VLSM is taken there.
    pub design_step: usize,
    pub v_ref: f64,
    pub refs: SupportRefs,
    pub fit: AlphaBeta,
    pub prices: PriceSet,
    pub sizing: SizingResult,
    pub plan: MitigationPlan,
    /// Real-power support needed at the station bus per step, kW.
    pub need_kw: TimeSeries,
    #[serde(skip)]
    pub trace: DispatchTrace,
    #[serde(skip)]
    pub baseline: Vec<Vec<f64>>,
    #[serde(skip)]
    pub vlsm: Vlsm,
}

/// Baseline QSTS, VLSM at the worst baseline step, support references,
/// storage coefficients from the need series, closed-form sizing and a
/// dispatch of the sized assets. `pv_per_kva` must cover the station
/// horizon.
pub fn design_pv_es(
    ctx: &FeederContext,
    loads: &ProfileSet,
    bus: &str,
    station_p: &TimeSeries,
    pv_per_kva: &TimeSeries,
    p_c_max: f64,
    cfg: &ScenarioConfig,
) -> Result<PvEsDesign> {
    let opts = &cfg.pv_es;
    let idle = TimeSeries::zeros(station_p.start, station_p.len());
    let base = qsts(
        &ctx.solver,
        loads,
        Some(StationLoad {
            bus,
            profile: &idle,
        }),
        None,
        cfg.qsts_options(true),
    )?;
    let traj = base.trajectories.expect("trajectories were requested");
    let (design_step, _) =
        base.system_min
            .values
            .iter()
            .enumerate()
            .fold(
                (0, f64::INFINITY),
                |acc, (t, &v)| if v < acc.1 { (t, v) } else { acc },
            );
    let op: Vec<LoadPoint> = loads
        .buses
        .iter()
        .map(|b| {
            LoadPoint::new(
                b.bus.clone(),
                b.p.values[design_step],
                b.q.values[design_step],
            )
        })
        .collect();
    let vlsm = compute_vlsm_with(
        &ctx.solver,
        &op,
        DEFAULT_PERTURBATION_KW,
        DEFAULT_PERTURBATION_KVAR,
        cfg.slack_voltage,
    )?;
    let base_v: Vec<f64> = traj.iter().map(|b| b[design_step]).collect();
    let v_ref = cfg.v_lower + opts.support_margin;
    let predicted = predict_station_voltage(&vlsm, &base_v, bus, p_c_max)?;
    let refs = compute_refs(
        &vlsm,
        &predicted,
        &vec![v_ref; vlsm.n()],
        bus,
        opts.estimator,
    )?;

    let need_kw = real_support_need(&vlsm, bus, station_p, Baseline::PerStep(&traj), v_ref)?;
    let fit = match opts.alpha_beta {
        Some([alpha, beta]) => AlphaBeta {
            alpha,
            beta,
            points: Vec::new(),
        },
        None => {
            let whole_days = station_p.len() / MINUTES_PER_DAY;
            let pv_days: Vec<TimeSeries> = (0..whole_days).map(|d| pv_per_kva.days(d, 1)).collect();
            let need_days: Vec<TimeSeries> = (0..whole_days).map(|d| need_kw.days(d, 1)).collect();
            fit_alpha_beta_with(
                &pv_days,
                &need_days,
                &default_fit_grid(refs.q_ref.max(1.0)),
                opts.fit,
            )?
        }
    };
    let prices = PriceSet::new(
        opts.lambda_charger,
        opts.lambda_pv,
        opts.lambda_es_e,
        opts.lambda_es_p,
        fit.alpha,
        fit.beta,
    );
    let sizing = size_system(
        &SizingInputs {
            p_c_max,
            q_ref: refs.q_ref,
            p_ref: refs.p_ref,
            eta: opts.eta,
            delta: opts.delta,
            alpha: fit.alpha,
            beta: fit.beta,
        },
        &prices,
    )?;
    let plan = MitigationPlan {
        pf_control: None,
        charger_kva: sizing.s_charger,
        pv_kva: sizing.s_pv,
        pv_eta: opts.eta,
        es_kwh: sizing.e_es,
        es_kw: sizing.p_es,
        es_efficiency: opts.es_efficiency,
        es_initial_soc: opts.es_initial_soc,
        v_lower: cfg.v_lower,
        v_upper: cfg.v_upper,
        support_margin: opts.support_margin,
    };
    let trace = dispatch(
        &plan,
        bus,
        station_p,
        pv_per_kva,
        &vlsm,
        Baseline::PerStep(&traj),
    )?;
    Ok(PvEsDesign {
        bus: bus.to_string(),
        design_step,
        v_ref,
        refs,
        fit,
        prices,
        sizing,
        plan,
        need_kw,
        trace,
        baseline: traj,
        vlsm,
    })
}

/// Largest of [`PORT_COUNTS`] whose QSTS run stays inside the band.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HostingOutcome {
    pub ports: usize,
    /// Violating samples per evaluated size; `None` for the zero-station baseline.
    pub evaluated: Vec<(Option<usize>, usize)>,
}

/// Hosting capacity at `bus`: sizes are tried in ascending order and the
/// search stops at the first one that violates, so the result is monotone
/// by construction. A feeder already violating without a station hosts 0.
#[allow(clippy::too_many_arguments)]
pub fn hosting_capacity(
    ctx: &FeederContext,
    loads: &ProfileSet,
    bus: &str,
    mitigation: Mitigation,
    charging: TrafficPattern,
    seed: u64,
    cfg: &ScenarioConfig,
) -> Result<HostingOutcome> {
    ctx.solver.eligible_index(bus)?;
    let mut evaluated = Vec::new();
    if !loads.is_empty() {
        let base = qsts(&ctx.solver, loads, None, None, cfg.qsts_options(false))?;
        let v = base.violations(cfg.v_lower, cfg.v_upper).count;
        evaluated.push((None, v));
        if v > 0 {
            return Ok(HostingOutcome {
                ports: 0,
                evaluated,
            });
        }
    }
    let mut hosted = 0;
    for ports in PORT_COUNTS {
        let profile = station_envelope(ports, charging, cfg, seed)?;
        let p_c_max = ports as f64 * DEFAULT_PORT_POWER_KW;
        let r = simulate(ctx, loads, bus, &profile, mitigation, p_c_max, seed, cfg)?;
        let v = r.violations(cfg.v_lower, cfg.v_upper).count;
        evaluated.push((Some(ports), v));
        if v > 0 {
            break;
        }
        hosted = ports;
    }
    Ok(HostingOutcome {
        ports: hosted,
        evaluated,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MatrixConfig {
    pub feeders: Vec<FeederName>,
    /// Mitigation applied to every scenario row.
    pub mitigation: Mitigation,
    /// Also compute the paired none / PF-control hosting bars.
    pub hosting: bool,
    pub hosting_charging: TrafficPattern,
    pub hosting_system: LoadPattern,
    pub seed: u64,
    pub scenario: ScenarioConfig,
}

impl Default for MatrixConfig {
    fn default() -> Self {
        MatrixConfig {
            feeders: FeederName::ALL.to_vec(),
            mitigation: Mitigation::None,
            hosting: true,
            hosting_charging: TrafficPattern::Multishift,
            hosting_system: LoadPattern::Residential,
            seed: 0,
            scenario: ScenarioConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixRow {
    pub scenario_id: String,
    pub feeder: FeederName,
    pub location_class: LocationClass,
    pub ports: usize,
    pub charging_pattern: TrafficPattern,
    pub system_pattern: LoadPattern,
    pub mitigation: Mitigation,
    pub min_v_pu: f64,
    pub max_v_pu: f64,
    pub violations: usize,
    pub hosted: bool,
}

impl From<&ScenarioReport> for MatrixRow {
    fn from(r: &ScenarioReport) -> Self {
        let s = &r.scenario;
        MatrixRow {
            scenario_id: s.id.clone(),
            feeder: s.feeder,
            location_class: s.location,
            ports: s.ports,
            charging_pattern: s.charging,
            system_pattern: s.system,
            mitigation: s.mitigation,
            min_v_pu: r.min_v,
            max_v_pu: r.max_v,
            violations: r.violations.count,
            hosted: r.hosted(),
        }
    }
}

/// One pair of hosting bars.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HostingBar {
    pub feeder: FeederName,
    pub location_class: LocationClass,
    pub bus: String,
    pub none: usize,
    pub pf_control: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixResult {
    pub rows: Vec<MatrixRow>,
    pub hosting: Vec<HostingBar>,
}

impl MatrixResult {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for r in &self.rows {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_hosting_json<W: Write>(&self, out: W) -> Result<()> {
        serde_json::to_writer_pretty(out, &self.hosting)?;
        Ok(())
    }
}

enum Job<'a> {
    Row(&'a Scenario),
    Bar(LocationClass, Mitigation),
}

/// Runs every valid scenario of the selected feeders plus the hosting
/// bars. Feeders run one after another; within a feeder all runs share
/// its loads and go through the parallel work queue. Rows come back
/// sorted by scenario id.
pub fn scenario_matrix(config: &MatrixConfig) -> Result<MatrixResult> {
    config.scenario.validate()?;
    let cfg = &config.scenario;
    let mut rows = Vec::new();
    let mut hosting = Vec::new();
    for &name in &config.feeders {
        let ctx = FeederContext::new(name, cfg.slack_voltage)?;
        let scenarios = enumerate_scenarios(name, config.mitigation, config.seed);
        let mut patterns: Vec<LoadPattern> = scenarios.iter().map(|s| s.system).collect();
        if config.hosting {
            patterns.push(config.hosting_system);
        }
        let mut loads: HashMap<LoadPattern, ProfileSet> = HashMap::new();
        for p in patterns {
            if let Entry::Vacant(e) = loads.entry(p) {
                e.insert(ctx.loads(p, cfg.days, config.seed)?);
            }
        }
        let mut envelopes: HashMap<(usize, TrafficPattern), TimeSeries> = HashMap::new();
        for s in &scenarios {
            if let Entry::Vacant(e) = envelopes.entry((s.ports, s.charging)) {
                e.insert(station_envelope(s.ports, s.charging, cfg, config.seed)?);
            }
        }

        let mut jobs: Vec<Job<'_>> = scenarios.iter().map(Job::Row).collect();
        if config.hosting {
            for &class in locations(name) {
                for m in [Mitigation::None, Mitigation::PfControl] {
                    jobs.push(Job::Bar(class, m));
                }
            }
        }
        enum Done {
            Row(ScenarioReport),
            Bar(LocationClass, Mitigation, usize),
        }
        let done = crate::par_map(jobs.len(), |k| -> Result<Done> {
            match &jobs[k] {
                Job::Row(s) => {
                    let profile = &envelopes[&(s.ports, s.charging)];
                    run_scenario_with(&ctx, &loads[&s.system], profile, s, cfg).map(Done::Row)
                }
                Job::Bar(class, m) => {
                    let bus = ctx.location_bus(*class);
                    let out = hosting_capacity(
                        &ctx,
                        &loads[&config.hosting_system],
                        bus,
                        *m,
                        config.hosting_charging,
                        config.seed,
                        cfg,
                    );
                    annotate(&format!("hosting-{name}-{}-{m}", class.as_str()), out)
                        .map(|h| Done::Bar(*class, *m, h.ports))
                }
            }
        });
        let mut bars: Vec<HostingBar> = locations(name)
            .iter()
            .filter(|_| config.hosting)
            .map(|&class| HostingBar {
                feeder: name,
                location_class: class,
                bus: ctx.location_bus(class).to_string(),
                none: 0,
                pf_control: 0,
            })
            .collect();
        for d in done {
            match d? {
                Done::Row(r) => rows.push(MatrixRow::from(&r)),
                Done::Bar(class, m, ports) => {
                    let bar = bars
                        .iter_mut()
                        .find(|b| b.location_class == class)
                        .expect("bar per location");
                    match m {
                        Mitigation::PfControl => bar.pf_control = ports,
                        _ => bar.none = ports,
                    }
                }
            }
        }
        hosting.extend(bars);
    }
    rows.sort_by(|a, b| a.scenario_id.cmp(&b.scenario_id));
    Ok(MatrixResult { rows, hosting })
}

/// Settings of the 7-day PV-ES-charger study. The default is a 6-port
/// station at the good location of the single-feeder analog, a size PF
/// control alone cannot host there.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CaseStudyConfig {
    pub feeder: FeederName,
    pub location: LocationClass,
    pub ports: usize,
    pub charging: TrafficPattern,
    pub system: LoadPattern,
    pub days: usize,
    pub seed: u64,
    pub scenario: ScenarioConfig,
}

impl Default for CaseStudyConfig {
    fn default() -> Self {
        CaseStudyConfig {
            feeder: FeederName::SingleFeeder,
            location: LocationClass::Good,
            ports: 6,
            charging: TrafficPattern::Daytime,
            // daytime system peaks put part of the support need under the
            // PV curve, as in a station sited among commercial loads
            system: LoadPattern::Commercial,
            days: 7,
            seed: 0,
            scenario: ScenarioConfig {
                days: 7,
                ..ScenarioConfig::default()
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CaseStudy {
    pub design: PvEsDesign,
    /// Same assets with the storage removed.
    #[serde(skip)]
    pub trace_no_es: DispatchTrace,
    pub effective_pv_with_es: f64,
    pub effective_pv_without_es: f64,
    pub unmitigated: ViolationReport,
    pub unmitigated_min_v: f64,
    pub mitigated: ViolationReport,
    pub mitigated_min_v: f64,
    pub mitigated_max_v: f64,
}

/// The sizing and dispatch study on one representative station draw (the
/// first Monte Carlo iteration) over the 7 PV weather days.
struct CaseSetup {
    sc: ScenarioConfig,
    ctx: FeederContext,
    loads: ProfileSet,
    station_p: TimeSeries,
    pv: TimeSeries,
    bus: String,
}

fn case_setup(cfg: &CaseStudyConfig) -> Result<CaseSetup> {
    let sc = ScenarioConfig {
        days: cfg.days,
        ..cfg.scenario.clone()
    };
    sc.validate()?;
    let ctx = FeederContext::new(cfg.feeder, sc.slack_voltage)?;
    let loads = ctx.loads(cfg.system, cfg.days, cfg.seed)?;
    let station = monte_carlo(
        &StationConfig::new(cfg.ports, cfg.charging),
        &TrafficParams {
            pattern: cfg.charging,
            days: cfg.days,
            ..TrafficParams::default()
        },
        1,
        derive_seed(
            cfg.seed,
            &format!("case/{}/{}", cfg.ports, cfg.charging.as_str()),
        ),
    )?;
    let station_p = station.runs[0].load_profile.clone();
    let pv = concat_days(&pv_fixture(cfg.days, cfg.seed));
    let pv = TimeSeries {
        start: station_p.start,
        ..pv
    };
    let bus = ctx.location_bus(cfg.location).to_string();
    Ok(CaseSetup {
        sc,
        ctx,
        loads,
        station_p,
        pv,
        bus,
    })
}

/// The design chain alone for the case-study station.
pub fn design_case_study(cfg: &CaseStudyConfig) -> Result<PvEsDesign> {
    let c = case_setup(cfg)?;
    let p_c_max = cfg.ports as f64 * DEFAULT_PORT_POWER_KW;
    design_pv_es(
        &c.ctx,
        &c.loads,
        &c.bus,
        &c.station_p,
        &c.pv,
        p_c_max,
        &c.sc,
    )
}

pub fn run_case_study(cfg: &CaseStudyConfig) -> Result<CaseStudy> {
    let CaseSetup {
        sc,
        ctx,
        loads,
        station_p,
        pv,
        bus,
    } = case_setup(cfg)?;
    let p_c_max = cfg.ports as f64 * DEFAULT_PORT_POWER_KW;
    let design = design_pv_es(&ctx, &loads, &bus, &station_p, &pv, p_c_max, &sc)?;

    let no_es = MitigationPlan {
        es_kwh: 0.0,
        es_kw: 0.0,
        ..design.plan.clone()
    };
    let trace_no_es = dispatch(
        &no_es,
        &bus,
        &station_p,
        &pv,
        &design.vlsm,
        Baseline::PerStep(&design.baseline),
    )?;
    let need = &design.trace.support_need;
    let effective_pv_with_es = effective_pv_fraction(&design.trace, need);
    let effective_pv_without_es = effective_pv_fraction(&trace_no_es, need);

    let station = Some(StationLoad {
        bus: &bus,
        profile: &station_p,
    });
    let raw = qsts(&ctx.solver, &loads, station, None, sc.qsts_options(false))?;
    let mut replay = design.trace.controller();
    let control: &mut dyn StationControl = &mut replay;
    let mitigated = qsts(
        &ctx.solver,
        &loads,
        station,
        Some(control),
        sc.qsts_options(false),
    )?;
    Ok(CaseStudy {
        unmitigated: raw.violations(sc.v_lower, sc.v_upper),
        unmitigated_min_v: raw.min_voltage(),
        mitigated: mitigated.violations(sc.v_lower, sc.v_upper),
        mitigated_min_v: mitigated.min_voltage(),
        mitigated_max_v: mitigated.max_voltage(),
        trace_no_es,
        effective_pv_with_es,
        effective_pv_without_es,
        design,
    })
}
