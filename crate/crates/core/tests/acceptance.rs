//! Acceptance suite. Runs without the libtest harness so every criterion
//! prints its own PASS/FAIL line; exits non-zero if any criterion fails.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::type_complexity)]

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use hdcharge_core::network::{bundled_feeder, Feeder, FeederName};
use hdcharge_core::powerflow::{LoadPoint, SweepSolver};
use hdcharge_core::scenarios::{
    enumerate_scenarios, run_case_study, scenario_matrix, CaseStudyConfig, MatrixConfig, Mitigation,
};
use hdcharge_core::sensitivity::{compute_vlsm_with, LocationClass};
use hdcharge_core::sizing::{
    charger_reactive_capacity, classify_scenario, cost_at, cost_derivative, optimal_charger_size,
    size_system, PriceSet, SizingInputs,
};
use hdcharge_core::station::{
    monte_carlo, simulate_station, AcceptanceCurve, StationConfig, TrafficParams, TrafficPattern,
    VehicleAgent,
};
use hdcharge_core::timeseries::default_start;
use num_complex::Complex64;

type Check = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

const P_C_MAX: f64 = 3600.0;
const Q_REF: f64 = 1294.0;

fn case2() -> PriceSet {
    PriceSet::case_study(2).unwrap()
}

fn c1_optimal_charger_size() -> Check {
    let prices = PriceSet::composite(17_956.0, 4489.0);
    let s = optimal_charger_size(&prices, P_C_MAX, Q_REF).map_err(|e| e.to_string())?;
    ensure!((s - 3718.0).abs() <= 1.0, "S_charger = {s:.2} kVA");
    let r = size_system(
        &SizingInputs {
            p_c_max: P_C_MAX,
            q_ref: Q_REF,
            p_ref: 0.0,
            eta: 1.0,
            delta: 0.0,
            alpha: 4.75,
            beta: 1.0,
        },
        &prices,
    )
    .map_err(|e| e.to_string())?;
    ensure!(
        (r.s_charger - 3718.0).abs() <= 1.0,
        "sized charger {:.2} kVA",
        r.s_charger
    );
    Ok(format!("S_charger = {s:.2} kVA"))
}

fn c2_composite_price() -> Check {
    let p = case2();
    ensure!(
        p.lambda_pv_es == 4489.75,
        "lambda_pv_es = {}",
        p.lambda_pv_es
    );
    ensure!(
        p.lambda_pv_es.floor() == 4489.0,
        "integer part {}",
        p.lambda_pv_es.floor()
    );
    let p1 = PriceSet::case_study(1).unwrap();
    ensure!(
        p1.lambda_pv_es == 4489.75,
        "case 1 lambda_pv_es = {}",
        p1.lambda_pv_es
    );
    Ok(format!("lambda_PV-ES = {} $/kVA", p.lambda_pv_es))
}

fn c3_sizing_chain() -> Check {
    let q_ch = charger_reactive_capacity(3718.0, P_C_MAX).map_err(|e| e.to_string())?;
    ensure!((q_ch - 929.3).abs() < 0.05, "Q_charger = {q_ch:.3}");
    let s_pv_rounded = Q_REF - q_ch;
    ensure!(
        (s_pv_rounded - 364.7).abs() < 0.05,
        "S_PV at 3718 kVA = {s_pv_rounded:.3}"
    );
    let r = size_system(
        &SizingInputs {
            p_c_max: P_C_MAX,
            q_ref: Q_REF,
            p_ref: 0.0,
            eta: 1.0,
            delta: 0.0,
            alpha: 4.75,
            beta: 1.0,
        },
        &case2(),
    )
    .map_err(|e| e.to_string())?;
    ensure!(
        (r.s_pv - 364.7).abs() < 0.5 && r.s_pv.floor() == 364.0,
        "chain S_PV = {:.3}",
        r.s_pv
    );
    let e_es = 4.75 * s_pv_rounded;
    ensure!((e_es - 1732.0).abs() < 1.0, "E_ES = {e_es:.1}");
    // the printed 1,641 kWh implies alpha ~ 4.50, not 4.75
    ensure!(
        (e_es - 1641.0).abs() > 80.0,
        "E_ES unexpectedly matches the printed value"
    );
    ensure!(
        ((1641.0 / s_pv_rounded) - 4.50).abs() < 0.01,
        "implied alpha {:.3}",
        1641.0 / s_pv_rounded
    );
    Ok(format!(
        "Q_charger = {q_ch:.2} kvar, S_PV = {s_pv_rounded:.2} kVA (chain {:.2}), E_ES = {e_es:.0} kWh vs printed 1641",
        r.s_pv
    ))
}

/// Samples cost over `[p_c_max, S_max(q_ref)]` and checks the regime: strictly
/// decreasing, or strictly down then up around the sampled minimum, which
/// must sit at the optimum clamped to `S_max`.
fn check_regime(prices: &PriceSet, q_ref: f64, scenario: u8) -> Result<f64, String> {
    let s_max = P_C_MAX.hypot(q_ref);
    let n = 20_000;
    let grid: Vec<f64> = (0..=n)
        .map(|k| P_C_MAX + (s_max - P_C_MAX) * k as f64 / n as f64)
        .collect();
    let cost: Vec<f64> = grid
        .iter()
        .map(|&s| cost_at(prices, P_C_MAX, q_ref, s))
        .collect();
    let argmin = (0..cost.len()).fold(0, |m, k| if cost[k] < cost[m] { k } else { m });
    if scenario >= 3 {
        ensure!(
            cost.windows(2).all(|w| w[1] < w[0]),
            "q_ref {q_ref}: cost not strictly decreasing"
        );
        ensure!(argmin == n, "q_ref {q_ref}: minimum before S_max");
    } else {
        ensure!(
            cost[..=argmin].windows(2).all(|w| w[1] < w[0]),
            "q_ref {q_ref}: not decreasing before minimum"
        );
        ensure!(
            cost[argmin..].windows(2).all(|w| w[1] > w[0]),
            "q_ref {q_ref}: not increasing after minimum"
        );
        let s_opt = optimal_charger_size(prices, P_C_MAX, q_ref).map_err(|e| e.to_string())?;
        let step = (s_max - P_C_MAX) / n as f64;
        ensure!(
            (grid[argmin] - s_opt).abs() <= step,
            "q_ref {q_ref}: sampled minimum {} vs {s_opt}",
            grid[argmin]
        );
    }
    let mut worst: f64 = 0.0;
    for k in (50..n).step_by(97) {
        let s = grid[k];
        let h = 1e-3;
        let fd = (cost_at(prices, P_C_MAX, q_ref, s + h) - cost_at(prices, P_C_MAX, q_ref, s - h))
            / (2.0 * h);
        let an = cost_derivative(prices, P_C_MAX, s);
        // C' is a difference of two positive terms that cancel at an interior
        // optimum, so the error is taken relative to their magnitude.
        let q = (s * s - P_C_MAX * P_C_MAX).sqrt();
        let scale = prices.lambda_charger + prices.lambda_pv_es * s / q;
        worst = worst.max(((fd - an) / scale).abs());
        if an.abs() > 0.01 * scale {
            worst = worst.max(((fd - an) / an).abs());
        }
    }
    ensure!(worst < 1e-6, "q_ref {q_ref}: derivative error {worst:e}");
    Ok(grid[argmin])
}

fn c4_price_regimes() -> Check {
    let pv_es = case2().lambda_pv_es;
    let mut notes = Vec::new();
    for (ratio, expected) in [(0.5, 4u8), (1.0, 3), (2.0, 2), (10.0, 1)] {
        let prices = PriceSet::composite(ratio * pv_es, pv_es);
        let scenario = classify_scenario(&prices);
        ensure!(
            scenario == expected,
            "ratio {ratio}: scenario {scenario}, expected {expected}"
        );
        let s_min = check_regime(&prices, Q_REF, scenario)?;
        if expected == 1 {
            ensure!(
                s_min <= 1.006 * P_C_MAX,
                "ratio {ratio}: minimum {s_min} far from p_c_max"
            );
        }
        // 2x puts the stationary point above S_max at 1294 kvar; a larger
        // reference exposes the interior minimum
        if expected == 2 {
            let wide = check_regime(&prices, 4000.0, scenario)?;
            ensure!(
                wide < P_C_MAX.hypot(4000.0) - 1.0,
                "ratio {ratio}: no interior minimum"
            );
            notes.push(format!(
                "{ratio}x -> scenario {scenario}, min {s_min:.0} (clamped), {wide:.0} interior"
            ));
        } else {
            notes.push(format!("{ratio}x -> scenario {scenario}, min {s_min:.0}"));
        }
    }
    Ok(notes.join("; "))
}

fn two_bus_voltage(r: f64, x: f64, p: f64, q: f64) -> f64 {
    let b = 1.0 - 2.0 * (r * p + x * q);
    let c = (r * r + x * x) * (p * p + q * q);
    ((b + (b * b - 4.0 * c).sqrt()) / 2.0).sqrt()
}

/// Slack injection minus loads minus branch losses recomputed from the
/// solved phasors, in kW and kvar.
fn balance_residual(
    feeder: &Feeder,
    loads: &[LoadPoint],
    slack_v: f64,
) -> Result<(f64, f64), String> {
    let solver = SweepSolver::new(feeder).map_err(|e| e.to_string())?;
    let sol = solver.solve(loads, slack_v).map_err(|e| e.to_string())?;
    let pu = feeder.to_per_unit().map_err(|e| e.to_string())?;
    let phasor = |id: &str| {
        let i = solver.bus_index(id).unwrap();
        Complex64::from_polar(sol.voltages[i], sol.angles[i])
    };
    let mut loss = Complex64::new(0.0, 0.0);
    for br in &pu.branches {
        let z = Complex64::new(br.r, br.x);
        let i = (phasor(&br.from) - phasor(&br.to)) / z;
        loss += z * i.norm_sqr();
    }
    let base = solver.base_kva();
    let p: f64 = loads.iter().map(|l| l.p).sum();
    let q: f64 = loads.iter().map(|l| l.q).sum();
    Ok((
        sol.slack_p_kw - p - loss.re * base,
        sol.slack_q_kvar - q - loss.im * base,
    ))
}

fn c5_power_flow_oracles() -> Check {
    let two = common::fixture_feeder("two_bus.json");
    let mut worst_analytic: f64 = 0.0;
    for (p, q) in [(0.5, 0.2), (1.0, 0.4), (2.0, -0.5), (0.1, 0.0)] {
        let sol =
            hdcharge_core::powerflow::solve(&two, &[LoadPoint::new("load", p * 1e4, q * 1e4)], 1.0)
                .map_err(|e| e.to_string())?;
        worst_analytic =
            worst_analytic.max((sol.voltages[1] - two_bus_voltage(0.01, 0.02, p, q)).abs());
    }
    ensure!(worst_analytic < 1e-6, "two-bus error {worst_analytic:e}");

    let eight = common::fixture_feeder("eight_bus.json");
    let mut solves = 0;
    let mut worst_balance: f64 = 0.0;
    let mut cases: Vec<(Feeder, Vec<LoadPoint>)> = FeederName::ALL
        .iter()
        .map(|&f| {
            let feeder = bundled_feeder(f);
            let loads = common::peak_loads(&feeder);
            (feeder, loads)
        })
        .collect();
    cases.push((two.clone(), vec![LoadPoint::new("load", 5000.0, 2000.0)]));
    cases.push((eight.clone(), common::peak_loads(&eight)));
    for (feeder, loads) in &cases {
        for scale in [0.0, 0.5, 1.0, 1.3] {
            let scaled: Vec<LoadPoint> = loads
                .iter()
                .map(|l| LoadPoint::new(l.bus.clone(), l.p * scale, l.q * scale))
                .collect();
            let (dp, dq) = balance_residual(feeder, &scaled, 1.0)?;
            let base = feeder.base_power_mva * 1000.0;
            worst_balance = worst_balance.max(dp.abs().max(dq.abs()) / base);
            solves += 1;
        }
    }
    ensure!(
        worst_balance < 1e-6,
        "power balance residual {worst_balance:e} x base"
    );

    let mut worst_fp: f64 = 0.0;
    for (feeder, loads) in [
        (two.clone(), vec![LoadPoint::new("load", 5000.0, 2000.0)]),
        (eight.clone(), common::peak_loads(&eight)),
        (
            eight.clone(),
            common::peak_loads(&eight)
                .into_iter()
                .map(|l| LoadPoint::new(l.bus, 2.0 * l.p, -l.q))
                .collect(),
        ),
    ] {
        let sol =
            hdcharge_core::powerflow::solve(&feeder, &loads, 1.02).map_err(|e| e.to_string())?;
        let oracle = common::fixed_point_voltages(&feeder, &loads, 1.02);
        for (a, b) in sol.voltages.iter().zip(&oracle) {
            worst_fp = worst_fp.max((a - b).abs());
        }
    }
    ensure!(worst_fp < 1e-8, "sweep vs fixed point {worst_fp:e}");
    Ok(format!(
        "two-bus {worst_analytic:.1e}, balance {worst_balance:.1e} x base over {solves} solves, fixed point {worst_fp:.1e}"
    ))
}

fn c6_vlsm_fidelity() -> Check {
    let mut worst: f64 = 0.0;
    let mut checked = 0usize;
    for name in FeederName::ALL {
        let feeder = bundled_feeder(name);
        let solver = SweepSolver::new(&feeder).map_err(|e| e.to_string())?;
        let mut tight = solver.clone();
        tight.options.tolerance = 1e-14;
        let base = common::peak_loads(&feeder);
        let vlsm = compute_vlsm_with(&solver, &base, 10.0, 10.0, 1.0).map_err(|e| e.to_string())?;
        let zero = vlsm
            .predict_deviation(&vec![0.0; vlsm.n()], &vec![0.0; vlsm.n()])
            .map_err(|e| e.to_string())?;
        ensure!(
            zero.iter().all(|&d| d == 0.0),
            "{name}: zero perturbation gives non-zero prediction"
        );
        let v0 = tight.solve(&base, 1.0).map_err(|e| e.to_string())?.voltages;
        for j in 0..vlsm.n() {
            if !vlsm.eligible[j] {
                continue;
            }
            for (dp, dq) in [(1.0, 0.0), (0.0, 1.0)] {
                let mut loads = base.clone();
                loads.push(LoadPoint::new(vlsm.bus_ids[j].clone(), dp, dq));
                let v1 = tight
                    .solve(&loads, 1.0)
                    .map_err(|e| e.to_string())?
                    .voltages;
                for i in 0..vlsm.n() {
                    let actual = v1[i] - v0[i];
                    if actual == 0.0 {
                        continue;
                    }
                    let predicted = -(dp * vlsm.p_at(i, j) + dq * vlsm.q_at(i, j));
                    let rel = ((predicted - actual) / actual).abs();
                    ensure!(
                        rel <= 0.05,
                        "{name}: bus {} perturbed at {}: {rel:.3}",
                        vlsm.bus_ids[i],
                        vlsm.bus_ids[j]
                    );
                    worst = worst.max(rel);
                    checked += 1;
                }
            }
        }
    }
    Ok(format!(
        "worst relative error {worst:.2e} over {checked} bus responses"
    ))
}

fn c7_station_simulator() -> Check {
    let mut runs = 0;
    let mut worst: f64 = 0.0;
    let mut peaks = Vec::new();
    for (ports, bound) in [(1usize, 1200.0), (3, 3600.0), (6, 7200.0)] {
        let mut peak: f64 = 0.0;
        for pattern in TrafficPattern::ALL {
            let config = StationConfig::new(ports, pattern);
            let traffic = TrafficParams {
                days: 30,
                ..TrafficParams::default()
            };
            let mc = monte_carlo(&config, &traffic, 20, 1000 + ports as u64)
                .map_err(|e| e.to_string())?;
            for run in &mc.runs {
                let drawn = run.load_profile.integral();
                let delivered: f64 = run.vehicle_energy.iter().sum();
                worst = worst.max((drawn - delivered).abs() / delivered.max(1e-12));
                peak = peak.max(run.peak());
                runs += 1;
            }
        }
        ensure!(peak <= bound + 1e-9, "{ports} ports peak {peak}");
        peaks.push(format!("{ports}p {peak:.0}"));
    }
    ensure!(worst <= 1e-6, "energy mismatch {worst:e}");

    let vehicle = VehicleAgent {
        id: 0,
        battery_kwh: 1000.0,
        arrival_min: 30,
        initial_soc: 0.5,
        target_soc: 0.9,
        deadline_min: 150,
        acceptance: AcceptanceCurve::flat(1200.0),
    };
    let run = simulate_station(
        &StationConfig::new(1, TrafficPattern::Daytime),
        &[vehicle],
        default_start(),
        120,
        1,
    )
    .map_err(|e| e.to_string())?;
    let minutes = run.load_profile.values.iter().filter(|&&v| v > 0.0).count();
    ensure!(minutes == 20, "single vehicle charged for {minutes} min");
    ensure!(
        run.vehicle_energy[0] == 400.0,
        "single vehicle took {} kWh",
        run.vehicle_energy[0]
    );
    ensure!(
        run.load_profile.values[30..50].iter().all(|&v| v == 1200.0),
        "single vehicle power not flat"
    );
    Ok(format!(
        "{runs} runs, energy error {worst:.1e}, peaks {}",
        peaks.join(", ")
    ))
}

fn c8_hosting_properties() -> Check {
    let m = scenario_matrix(&MatrixConfig::default()).map_err(|e| e.to_string())?;
    ensure!(m.rows.len() == 76, "{} rows", m.rows.len());
    // monotone in size: within a (feeder, location, patterns) group, a
    // violating size implies every larger size violates
    for r in &m.rows {
        if r.hosted {
            continue;
        }
        for other in &m.rows {
            let same = other.feeder == r.feeder
                && other.location_class == r.location_class
                && other.charging_pattern == r.charging_pattern
                && other.system_pattern == r.system_pattern;
            ensure!(
                !(same && other.ports > r.ports && other.hosted),
                "{} hosts but {} does not",
                other.scenario_id,
                r.scenario_id
            );
        }
    }
    for b in &m.hosting {
        ensure!(
            b.pf_control >= b.none,
            "{} {:?}: pf {} < none {}",
            b.feeder,
            b.location_class,
            b.pf_control,
            b.none
        );
    }
    let mut bars = Vec::new();
    for f in [
        FeederName::Ieee34Like,
        FeederName::SingleFeeder,
        FeederName::TwoFeeder,
    ] {
        let get = |c: LocationClass| {
            m.hosting
                .iter()
                .find(|b| b.feeder == f && b.location_class == c)
                .unwrap()
        };
        let (best, good, worst) = (
            get(LocationClass::Best),
            get(LocationClass::Good),
            get(LocationClass::Worst),
        );
        ensure!(
            best.none >= good.none && good.none >= worst.none,
            "{f}: no-mitigation order {}/{}/{}",
            best.none,
            good.none,
            worst.none
        );
        ensure!(
            best.pf_control >= good.pf_control && good.pf_control >= worst.pf_control,
            "{f}: pf order {}/{}/{}",
            best.pf_control,
            good.pf_control,
            worst.pf_control
        );
        bars.push(format!(
            "{f} {}/{}/{} pf {}/{}/{}",
            best.none, good.none, worst.none, best.pf_control, good.pf_control, worst.pf_control
        ));
    }
    let dedicated = m
        .hosting
        .iter()
        .find(|b| b.feeder == FeederName::Dedicated)
        .unwrap();
    ensure!(dedicated.none == 6, "dedicated hosts {}", dedicated.none);
    ensure!(
        m.rows
            .iter()
            .filter(|r| r.feeder == FeederName::Dedicated)
            .all(|r| r.hosted),
        "dedicated scenario violates"
    );
    bars.push("dedicated 6".into());
    Ok(bars.join("; "))
}

fn c9_mitigation_properties() -> Check {
    let cs = run_case_study(&CaseStudyConfig::default()).map_err(|e| e.to_string())?;
    let d = &cs.design;
    ensure!(
        cs.effective_pv_with_es >= 0.90,
        "effective PV with ES {:.4}",
        cs.effective_pv_with_es
    );
    ensure!(
        cs.effective_pv_with_es > cs.effective_pv_without_es,
        "with ES {:.4} <= without {:.4}",
        cs.effective_pv_with_es,
        cs.effective_pv_without_es
    );
    ensure!(
        cs.unmitigated.count > 0,
        "fixture does not violate without mitigation"
    );
    ensure!(
        cs.mitigated.is_clean(),
        "{} violations remain (min {:.4})",
        cs.mitigated.count,
        cs.mitigated_min_v
    );
    Ok(format!(
        "effective PV {:.1}% -> {:.1}%, violations {} -> 0, S_ch {:.0} S_PV {:.0} E_ES {:.0} (alpha {:.2}, beta {:.2})",
        100.0 * cs.effective_pv_without_es,
        100.0 * cs.effective_pv_with_es,
        cs.unmitigated.count,
        d.sizing.s_charger,
        d.sizing.s_pv,
        d.sizing.e_es,
        d.fit.alpha,
        d.fit.beta
    ))
}

fn c10_enumeration() -> Check {
    let counts: Vec<usize> = FeederName::ALL
        .iter()
        .map(|&f| enumerate_scenarios(f, Mitigation::None, 0).len())
        .collect();
    ensure!(counts == [36, 18, 18, 4], "counts {counts:?}");
    Ok(format!("{counts:?}"))
}

fn main() -> ExitCode {
    let criteria: [(&str, u64, fn() -> Check); 10] = [
        (
            "optimal charger size for case-2 prices",
            1,
            c1_optimal_charger_size,
        ),
        ("composite PV-ES price", 1, c2_composite_price),
        ("sizing chain from Q_ref = 1294 kvar", 1, c3_sizing_chain),
        ("cost regimes and analytic derivative", 5, c4_price_regimes),
        ("power-flow oracles", 5, c5_power_flow_oracles),
        ("VLSM fidelity", 30, c6_vlsm_fidelity),
        ("station simulator", 60, c7_station_simulator),
        (
            "hosting properties over the full matrix",
            600,
            c8_hosting_properties,
        ),
        (
            "PV-ES-charger mitigation on the 7-day fixture",
            300,
            c9_mitigation_properties,
        ),
        ("scenario enumeration counts", 1, c10_enumeration),
    ];
    let mut failed = 0;
    for (k, (title, limit, check)) in criteria.into_iter().enumerate() {
        let t = Instant::now();
        let out = check();
        let elapsed = t.elapsed();
        let limit = Duration::from_secs(limit);
        let (ok, detail) = match out {
            Ok(d) if elapsed <= limit => (true, d),
            Ok(d) => (false, format!("{d}; over the {limit:?} budget")),
            Err(e) => (false, e),
        };
        if !ok {
            failed += 1;
        }
        println!(
            "criterion {:>2} {} - {title}: {detail} [{elapsed:.2?}]",
            k + 1,
            if ok { "PASS" } else { "FAIL" }
        );
    }
    println!("{} of 10 criteria passed", 10 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
