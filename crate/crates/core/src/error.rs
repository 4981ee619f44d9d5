use thiserror::Error;

/// Errors raised across the analysis pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("feeder topology contains a cycle through bus `{0}`")]
    CycleDetected(String),
    #[error("bus `{0}` is not reachable from the slack bus")]
    DisconnectedBus(String),
    #[error("feeder has {0} slack buses, expected exactly one")]
    MultipleSlack(usize),
    #[error("missing per-unit base: {0}")]
    MissingBase(String),
    #[error("unknown bundled feeder `{0}`")]
    UnknownFeeder(String),
    #[error("invalid feeder data: {0}")]
    InvalidFeeder(String),

    #[error("power flow did not converge within {0} iterations")]
    NoConvergence(usize),
    #[error(
        "power flow did not converge at step {step} ({timestamp}) within {max_iters} iterations"
    )]
    NoConvergenceAt {
        step: usize,
        timestamp: String,
        max_iters: usize,
    },
    #[error("unknown or ineligible bus `{0}`")]
    InvalidBus(String),
    #[error("time series mismatch: {0}")]
    SeriesLengthMismatch(String),
    #[error("empty time series")]
    EmptySeries,
    #[error("slack voltage {0} p.u. outside [0.9, 1.1]")]
    InvalidSlackVoltage(f64),

    #[error("perturbation must be non-zero")]
    ZeroPerturbation,
    #[error("zero sensitivity at contributing bus `{0}`")]
    ZeroSensitivity(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("feeder has no load buses")]
    NoLoadBuses,

    #[error("station step mismatch: {0}")]
    StepMismatch(String),
    #[error("negative charging power {0} kW")]
    NegativePower(f64),
    #[error("invalid station configuration: {0}")]
    InvalidStation(String),

    #[error("charger capacity {s_kva} kVA below peak load {p_kw} kW")]
    CapacityBelowPeak { s_kva: f64, p_kw: f64 },
    #[error("charger price {charger} $/kVA does not exceed PV-ES price {pv_es} $/kVA")]
    DegeneratePrices { charger: f64, pv_es: f64 },
    #[error("eta = 1 leaves no real-power capability for the minimum PV generation")]
    InfeasibleEta,
    #[error("invalid sizing input: {0}")]
    InvalidSizing(String),
    #[error("no profiles supplied")]
    EmptyProfiles,

    #[error("power factor {0} outside (0, 1]")]
    InvalidPf(f64),

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("scenario {id}: {source}")]
    Scenario { id: String, source: Box<Error> },

    #[error("csv: {0}")]
    Csv(String),
    #[error("json: {0}")]
    Json(String),
    #[error("io: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Csv(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Json(e.to_string())
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
