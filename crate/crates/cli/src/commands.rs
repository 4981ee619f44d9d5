use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use hdcharge_core::mitigation::DispatchTrace;
use hdcharge_core::network::{Feeder, FeederName};
use hdcharge_core::powerflow::{read_load_points, LoadPoint, SweepSolver};
use hdcharge_core::profiles::LOAD_POWER_FACTOR;
use hdcharge_core::scenarios::{
    design_case_study, run_case_study, scenario_matrix, CaseStudyConfig, MatrixConfig, MatrixResult,
};
use hdcharge_core::sensitivity::{compute_vlsm_with, rank_locations, LocationClass, Matrix};
use hdcharge_core::sizing::{
    cost_curve, size_system, write_cost_curve_csv, PriceSet, SizingResult,
};
use hdcharge_core::station::{monte_carlo, TrafficParams};
use hdcharge_core::timeseries::format_timestamp;
use serde::Serialize;

use crate::config::{FeederSource, RunConfig};
use crate::CliError;

const DEFAULT_FEEDER: &str = "ieee34_like";

pub struct Context {
    cfg: RunConfig,
    out: PathBuf,
    feeder: FeederSource,
}

impl Context {
    pub fn new(cfg: RunConfig) -> Result<Self, CliError> {
        let feeder = FeederSource::resolve(cfg.feeder.as_deref().unwrap_or(DEFAULT_FEEDER))?;
        let out = cfg.out_dir.clone().unwrap_or_else(|| PathBuf::from("out"));
        Ok(Context { cfg, out, feeder })
    }

    /// Operating point: the configured loads file, else nameplate peaks.
    fn loads(&self, feeder: &Feeder) -> Result<Vec<LoadPoint>, CliError> {
        match &self.cfg.loads {
            Some(path) => {
                let f = File::open(path).map_err(|e| {
                    CliError::Usage(format!("cannot read loads {}: {e}", path.display()))
                })?;
                read_load_points(f)
                    .map_err(|e| CliError::Usage(format!("loads {}: {e}", path.display())))
            }
            None => {
                let tan = LOAD_POWER_FACTOR.acos().tan();
                Ok(feeder
                    .buses
                    .iter()
                    .filter(|b| b.load_connection && b.peak_kw > 0.0)
                    .map(|b| LoadPoint::new(b.id.clone(), b.peak_kw, b.peak_kw * tan))
                    .collect())
            }
        }
    }

    fn case_study(&self) -> Result<CaseStudyConfig, CliError> {
        let mut c = self.cfg.case_study.clone();
        c.seed = self.cfg.seed;
        c.scenario.slack_voltage = self.cfg.slack_voltage;
        if self.cfg.feeder.is_some() {
            c.feeder = self.feeder.bundled("case study")?;
        }
        Ok(c)
    }

    fn create(&self, name: &str) -> Result<BufWriter<File>, CliError> {
        fs::create_dir_all(&self.out).map_err(|e| io_error(&self.out, e))?;
        let path = self.out.join(name);
        let f = File::create(&path).map_err(|e| io_error(&path, e))?;
        Ok(BufWriter::new(f))
    }

    fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<(), CliError> {
        let mut w = self.create(name)?;
        serde_json::to_writer_pretty(&mut w, value).map_err(|e| CliError::Compute(e.into()))?;
        writeln!(w).map_err(|e| io_error(&self.out.join(name), e))?;
        w.flush().map_err(|e| io_error(&self.out.join(name), e))
    }

    fn report(&self, files: &[&str]) {
        for f in files {
            println!("wrote {}", self.out.join(f).display());
        }
    }
}

fn io_error(path: &Path, e: std::io::Error) -> CliError {
    CliError::Compute(hdcharge_core::Error::Io(format!("{}: {e}", path.display())))
}

#[derive(Serialize)]
struct SolveSummary<'a> {
    feeder: &'a str,
    slack_voltage: f64,
    iterations: usize,
    min_v_pu: f64,
    min_v_bus: &'a str,
    slack_p_kw: f64,
    slack_q_kvar: f64,
    losses_kw: f64,
    losses_kvar: f64,
}

pub fn solve(ctx: &Context) -> Result<(), CliError> {
    let feeder = ctx.feeder.feeder();
    let loads = ctx.loads(&feeder)?;
    let solver = SweepSolver::new(&feeder)?;
    let sol = solver.solve(&loads, ctx.cfg.slack_voltage)?;

    let mut w = csv::Writer::from_writer(ctx.create("solution.csv")?);
    let csv_err = |e: csv::Error| CliError::Compute(e.into());
    w.write_record(["bus_id", "v_pu", "angle_deg"])
        .map_err(csv_err)?;
    for (i, id) in solver.bus_ids().iter().enumerate() {
        w.write_record([
            id.as_str(),
            &format!("{:.10}", sol.voltages[i]),
            &format!("{:.6}", sol.angles[i].to_degrees()),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| io_error(&ctx.out, e))?;

    let (k, min_v) = sol
        .voltages
        .iter()
        .enumerate()
        .fold(
            (0, f64::INFINITY),
            |acc, (i, &v)| if v < acc.1 { (i, v) } else { acc },
        );
    let summary = SolveSummary {
        feeder: &feeder.name,
        slack_voltage: ctx.cfg.slack_voltage,
        iterations: sol.iterations,
        min_v_pu: min_v,
        min_v_bus: &solver.bus_ids()[k],
        slack_p_kw: sol.slack_p_kw,
        slack_q_kvar: sol.slack_q_kvar,
        losses_kw: sol.losses_kw,
        losses_kvar: sol.losses_kvar,
    };
    ctx.write_json("solution.json", &summary)?;
    println!(
        "{}: converged in {} iterations, min V {:.6} p.u. at {}, losses {:.2} kW",
        feeder.name, sol.iterations, min_v, summary.min_v_bus, sol.losses_kw
    );
    ctx.report(&["solution.csv", "solution.json"]);
    Ok(())
}

pub fn vlsm(ctx: &Context) -> Result<(), CliError> {
    let feeder = ctx.feeder.feeder();
    let loads = ctx.loads(&feeder)?;
    let solver = SweepSolver::new(&feeder)?;
    let s = &ctx.cfg.vlsm;
    let vlsm = compute_vlsm_with(
        &solver,
        &loads,
        s.perturbation_kw,
        s.perturbation_kvar,
        ctx.cfg.slack_voltage,
    )?;
    vlsm.write_csv(Matrix::P, ctx.create("vlsm_p.csv")?)?;
    vlsm.write_csv(Matrix::Q, ctx.create("vlsm_q.csv")?)?;
    println!("{}: {} x {} sensitivities", feeder.name, vlsm.n(), vlsm.n());
    ctx.report(&["vlsm_p.csv", "vlsm_q.csv"]);
    Ok(())
}

pub fn rank(ctx: &Context) -> Result<(), CliError> {
    let feeder = ctx.feeder.feeder();
    let loads = ctx.loads(&feeder)?;
    let solver = SweepSolver::new(&feeder)?;
    let s = &ctx.cfg.vlsm;
    let vlsm = compute_vlsm_with(
        &solver,
        &loads,
        s.perturbation_kw,
        s.perturbation_kvar,
        ctx.cfg.slack_voltage,
    )?;
    let ranking = rank_locations(&vlsm, ctx.cfg.rank.p_c_max)?;
    ranking.write_csv(ctx.create("ranking.csv")?)?;
    for class in LocationClass::ALL {
        println!("{:5} {}", class.as_str(), ranking.representative(class));
    }
    ctx.report(&["ranking.csv"]);
    Ok(())
}

#[derive(Serialize)]
struct StationSummary {
    ports: usize,
    pattern: String,
    iterations: usize,
    seed: u64,
    peak_bound_kw: f64,
    peaks_kw: Vec<f64>,
    energy_kwh: Vec<f64>,
    abandoned: Vec<usize>,
    max_wait_min: Vec<u32>,
}

pub fn station(ctx: &Context) -> Result<(), CliError> {
    let c = &ctx.cfg;
    let traffic = TrafficParams {
        pattern: c.station.pattern,
        ..c.traffic.clone()
    };
    let mc = monte_carlo(&c.station, &traffic, c.iterations, c.seed)?;
    let s = &mc.summary;
    let mut w = csv::Writer::from_writer(ctx.create("station_profile.csv")?);
    let csv_err = |e: csv::Error| CliError::Compute(e.into());
    w.write_record(["timestamp", "mean_kw", "max_kw"])
        .map_err(csv_err)?;
    for t in 0..s.mean.len() {
        w.write_record([
            format_timestamp(s.mean.timestamp(t)),
            format!("{:.4}", s.mean.values[t]),
            format!("{:.4}", s.max_envelope.values[t]),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| io_error(&ctx.out, e))?;
    let summary = StationSummary {
        ports: c.station.ports,
        pattern: c.station.pattern.as_str().to_string(),
        iterations: c.iterations,
        seed: c.seed,
        peak_bound_kw: c.station.peak_bound(),
        peaks_kw: s.peaks.clone(),
        energy_kwh: mc
            .runs
            .iter()
            .map(|r| r.vehicle_energy.iter().sum())
            .collect(),
        abandoned: mc.runs.iter().map(|r| r.abandoned).collect(),
        max_wait_min: mc.runs.iter().map(|r| r.max_wait_min).collect(),
    };
    ctx.write_json("station_summary.json", &summary)?;
    println!(
        "{} ports, {}: peak {:.0} kW over {} runs (bound {:.0} kW)",
        summary.ports,
        summary.pattern,
        s.max_envelope.max(),
        c.iterations,
        summary.peak_bound_kw
    );
    ctx.report(&["station_profile.csv", "station_summary.json"]);
    Ok(())
}

fn write_matrix(ctx: &Context, result: &MatrixResult) -> Result<(), CliError> {
    result.write_csv(ctx.create("matrix.csv")?)?;
    let mut w = ctx.create("hosting.json")?;
    result.write_hosting_json(&mut w)?;
    writeln!(w)
        .and_then(|_| w.flush())
        .map_err(|e| io_error(&ctx.out, e))?;
    for bar in &result.hosting {
        println!(
            "{} {:5} ({}): none {} ports, pf_control {} ports",
            bar.feeder,
            bar.location_class.as_str(),
            bar.bus,
            bar.none,
            bar.pf_control
        );
    }
    ctx.report(&["matrix.csv", "hosting.json"]);
    Ok(())
}

fn matrix_config(ctx: &Context, feeders: Option<Vec<FeederName>>) -> MatrixConfig {
    let mut m = ctx.cfg.matrix.clone();
    m.seed = ctx.cfg.seed;
    m.scenario.slack_voltage = ctx.cfg.slack_voltage;
    if let Some(f) = feeders {
        m.feeders = f;
    }
    m
}

pub fn hosting(ctx: &Context) -> Result<(), CliError> {
    let name = ctx.feeder.bundled("hosting")?;
    let result = scenario_matrix(&matrix_config(ctx, Some(vec![name])))?;
    write_matrix(ctx, &result)
}

pub fn matrix(ctx: &Context) -> Result<(), CliError> {
    let feeders = match ctx.cfg.feeder {
        Some(_) => Some(vec![ctx.feeder.bundled("matrix")?]),
        None => None,
    };
    let result = scenario_matrix(&matrix_config(ctx, feeders))?;
    write_matrix(ctx, &result)
}

#[derive(Serialize)]
struct SizingReport<'a> {
    prices: &'a PriceSet,
    result: &'a SizingResult,
}

pub fn size(ctx: &Context) -> Result<(), CliError> {
    let s = &ctx.cfg.sizing;
    let prices = s.price_set()?;
    let r = size_system(&s.inputs, &prices)?;
    ctx.write_json(
        "sizing.json",
        &SizingReport {
            prices: &prices,
            result: &r,
        },
    )?;
    let curve = cost_curve(&prices, s.inputs.p_c_max, s.inputs.q_ref, s.curve_points);
    write_cost_curve_csv(&curve, ctx.create("cost_curve.csv")?)?;
    println!("scenario {}", r.scenario);
    println!("S_charger = {:.2} kVA", r.s_charger);
    println!("S_PV = {:.2} kVA", r.s_pv);
    println!("E_ES = {:.2} kWh, P_ES = {:.2} kW", r.e_es, r.p_es);
    println!("cost = ${:.0}", r.cost);
    ctx.report(&["sizing.json", "cost_curve.csv"]);
    Ok(())
}

#[derive(Serialize)]
struct FitReport<'a> {
    bus: &'a str,
    p_ref_kw: f64,
    q_ref_kvar: f64,
    alpha: f64,
    beta: f64,
    points: &'a [hdcharge_core::sizing::FitPoint],
}

pub fn fit_ab(ctx: &Context) -> Result<(), CliError> {
    let design = design_case_study(&ctx.case_study()?)?;
    ctx.write_json(
        "fit_ab.json",
        &FitReport {
            bus: &design.bus,
            p_ref_kw: design.refs.p_ref,
            q_ref_kvar: design.refs.q_ref,
            alpha: design.fit.alpha,
            beta: design.fit.beta,
            points: &design.fit.points,
        },
    )?;
    println!(
        "alpha = {:.4} kWh/kVA, beta = {:.4} kW/kVA",
        design.fit.alpha, design.fit.beta
    );
    ctx.report(&["fit_ab.json"]);
    Ok(())
}

#[derive(Serialize)]
struct DispatchSummary<'a> {
    bus: &'a str,
    s_charger_kva: f64,
    s_pv_kva: f64,
    e_es_kwh: f64,
    p_es_kw: f64,
    alpha: f64,
    beta: f64,
    effective_pv_with_es: f64,
    effective_pv_without_es: f64,
    violations_unmitigated: usize,
    violations_mitigated: usize,
    min_v_unmitigated: f64,
    min_v_mitigated: f64,
    max_v_mitigated: f64,
}

pub fn dispatch(ctx: &Context) -> Result<(), CliError> {
    let cs = run_case_study(&ctx.case_study()?)?;
    let d = &cs.design;
    write_trace(ctx, &d.trace)?;
    let summary = DispatchSummary {
        bus: &d.bus,
        s_charger_kva: d.sizing.s_charger,
        s_pv_kva: d.sizing.s_pv,
        e_es_kwh: d.sizing.e_es,
        p_es_kw: d.sizing.p_es,
        alpha: d.fit.alpha,
        beta: d.fit.beta,
        effective_pv_with_es: cs.effective_pv_with_es,
        effective_pv_without_es: cs.effective_pv_without_es,
        violations_unmitigated: cs.unmitigated.count,
        violations_mitigated: cs.mitigated.count,
        min_v_unmitigated: cs.unmitigated_min_v,
        min_v_mitigated: cs.mitigated_min_v,
        max_v_mitigated: cs.mitigated_max_v,
    };
    ctx.write_json("dispatch_summary.json", &summary)?;
    println!(
        "effective PV {:.1}% without storage, {:.1}% with; violations {} -> {}",
        100.0 * cs.effective_pv_without_es,
        100.0 * cs.effective_pv_with_es,
        cs.unmitigated.count,
        cs.mitigated.count
    );
    ctx.report(&["dispatch_trace.csv", "dispatch_summary.json"]);
    Ok(())
}

fn write_trace(ctx: &Context, trace: &DispatchTrace) -> Result<(), CliError> {
    trace.write_csv(ctx.create("dispatch_trace.csv")?)?;
    Ok(())
}
