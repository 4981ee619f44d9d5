//! The JSON run configuration. Every section is optional; omitted keys take
//! the library defaults, unknown keys are rejected.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use hdcharge_core::network::{bundled_feeder, Feeder, FeederName};
use hdcharge_core::scenarios::{CaseStudyConfig, MatrixConfig};
use hdcharge_core::sizing::{PriceSet, SizingInputs};
use hdcharge_core::station::{StationConfig, TrafficParams};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Bundled feeder name or path to a feeder JSON file.
    pub feeder: Option<String>,
    /// Master seed; every generator derives from it.
    pub seed: u64,
    pub out_dir: Option<PathBuf>,
    pub slack_voltage: f64,
    /// `bus_id,p_kw,q_kvar` operating point for `solve`, `vlsm` and `rank`.
    /// Defaults to every load at its nameplate peak.
    pub loads: Option<PathBuf>,
    pub vlsm: VlsmSection,
    pub rank: RankSection,
    pub station: StationConfig,
    pub traffic: TrafficParams,
    pub iterations: usize,
    pub matrix: MatrixConfig,
    pub sizing: SizingSection,
    pub case_study: CaseStudyConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            feeder: None,
            seed: 0,
            out_dir: None,
            slack_voltage: 1.0,
            loads: None,
            vlsm: VlsmSection::default(),
            rank: RankSection::default(),
            station: StationConfig::default(),
            traffic: TrafficParams::default(),
            iterations: 10,
            matrix: MatrixConfig::default(),
            sizing: SizingSection::default(),
            case_study: CaseStudyConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VlsmSection {
    pub perturbation_kw: f64,
    pub perturbation_kvar: f64,
}

impl Default for VlsmSection {
    fn default() -> Self {
        VlsmSection {
            perturbation_kw: hdcharge_core::sensitivity::DEFAULT_PERTURBATION_KW,
            perturbation_kvar: hdcharge_core::sensitivity::DEFAULT_PERTURBATION_KVAR,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RankSection {
    /// Station draw used to score locations, kW.
    pub p_c_max: f64,
}

impl Default for RankSection {
    fn default() -> Self {
        RankSection { p_c_max: 3600.0 }
    }
}

/// Either a worked price case, a charger price with a composite PV-ES
/// price, or the four component prices (storage ratios come from `inputs`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Prices {
    Case(u8),
    Composite {
        lambda_charger: f64,
        lambda_pv_es: f64,
    },
    Components {
        lambda_charger: f64,
        lambda_pv: f64,
        lambda_es_e: f64,
        lambda_es_p: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SizingSection {
    pub inputs: SizingInputs,
    pub prices: Prices,
    pub curve_points: usize,
}

impl Default for SizingSection {
    fn default() -> Self {
        SizingSection {
            inputs: SizingInputs {
                p_c_max: 3600.0,
                q_ref: 1294.0,
                p_ref: 0.0,
                eta: 1.0,
                delta: 0.0,
                alpha: 4.75,
                beta: 1.0,
            },
            prices: Prices::Case(2),
            curve_points: 201,
        }
    }
}

impl SizingSection {
    pub fn price_set(&self) -> Result<PriceSet, CliError> {
        let i = &self.inputs;
        match self.prices {
            Prices::Case(c) => {
                PriceSet::case_study(c).map_err(|e| CliError::config("sizing.prices.case", e))
            }
            Prices::Composite {
                lambda_charger,
                lambda_pv_es,
            } => Ok(PriceSet::composite(lambda_charger, lambda_pv_es)),
            Prices::Components {
                lambda_charger,
                lambda_pv,
                lambda_es_e,
                lambda_es_p,
            } => Ok(PriceSet::new(
                lambda_charger,
                lambda_pv,
                lambda_es_e,
                lambda_es_p,
                i.alpha,
                i.beta,
            )),
        }
    }
}

/// Where the feeder comes from.
#[derive(Debug, Clone)]
pub enum FeederSource {
    Bundled(FeederName),
    File(PathBuf, Feeder),
}

impl FeederSource {
    pub fn resolve(spec: &str) -> Result<Self, CliError> {
        if let Ok(name) = FeederName::from_str(spec) {
            return Ok(FeederSource::Bundled(name));
        }
        let path = Path::new(spec);
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::Usage(format!(
                "feeder `{spec}` is neither a bundled name nor a readable file: {e}"
            ))
        })?;
        let feeder = Feeder::from_json(&text).map_err(|e| CliError::config("feeder", e))?;
        Ok(FeederSource::File(path.to_path_buf(), feeder))
    }

    pub fn feeder(&self) -> Feeder {
        match self {
            FeederSource::Bundled(name) => bundled_feeder(*name),
            FeederSource::File(_, f) => f.clone(),
        }
    }

    /// Commands built on the scenario tables need a bundled feeder.
    pub fn bundled(&self, command: &str) -> Result<FeederName, CliError> {
        match self {
            FeederSource::Bundled(name) => Ok(*name),
            FeederSource::File(p, _) => Err(CliError::Usage(format!(
                "`{command}` runs on bundled feeders only, got file {}",
                p.display()
            ))),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))
    }

    /// Checks every section up front so no command starts on bad input.
    pub fn validate(&self) -> Result<(), CliError> {
        if !(0.9..=1.1).contains(&self.slack_voltage) {
            return Err(CliError::Usage(format!(
                "slack_voltage: {} outside [0.9, 1.1]",
                self.slack_voltage
            )));
        }
        if self.vlsm.perturbation_kw == 0.0 || self.vlsm.perturbation_kvar == 0.0 {
            return Err(CliError::Usage(
                "vlsm: perturbation must be non-zero".into(),
            ));
        }
        if !(self.rank.p_c_max > 0.0) {
            return Err(CliError::Usage(format!(
                "rank.p_c_max: {}",
                self.rank.p_c_max
            )));
        }
        self.station
            .validate()
            .map_err(|e| CliError::config("station", e))?;
        if self.iterations == 0 {
            return Err(CliError::Usage(
                "iterations: at least one Monte Carlo iteration".into(),
            ));
        }
        if self.traffic.days == 0 {
            return Err(CliError::Usage("traffic.days: must be positive".into()));
        }
        self.matrix
            .scenario
            .validate()
            .map_err(|e| CliError::config("matrix.scenario", e))?;
        self.case_study
            .scenario
            .validate()
            .map_err(|e| CliError::config("case_study.scenario", e))?;
        if self.case_study.days == 0 {
            return Err(CliError::Usage("case_study.days: must be positive".into()));
        }
        self.sizing
            .inputs
            .validate()
            .map_err(|e| CliError::config("sizing.inputs", e))?;
        self.sizing
            .price_set()?
            .validate()
            .map_err(|e| CliError::config("sizing.prices", e))?;
        if self.sizing.curve_points < 2 {
            return Err(CliError::Usage("sizing.curve_points: at least 2".into()));
        }
        Ok(())
    }
}
