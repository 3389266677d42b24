//! TOML run configuration.
//!
//! ```toml
//! output_dir = "out"
//!
//! [vehicle]
//! m_veh = 1600.0
//!
//! [tire]            # applies to both axles
//! mu = 0.9
//! [tire.rear]       # per-axle overrides
//! c_kappa = 90000.0
//!
//! [loss_map]        # optional tabulated motor loss
//! file = "motor_loss.csv"
//!
//! [[scenario]]
//! cycle = "ftp75"   # bundled name or a CSV path
//! lane_change_interval = 1000.0
//! regen = true
//! ```
//!
//! Every section is optional; missing values take the model defaults. Paths
//! are relative to the config file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use evlat_core::driver::{DriverParams, LaneGeometry};
use evlat_core::dynamics::VehicleParams;
use evlat_core::powertrain::{BatteryParams, PowertrainParams};
use evlat_core::scenario::{DriveCycle, Scenario};
use evlat_core::tire::TireParams;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cycle_file::{builtin_cycle, load_cycle, load_loss_map, CycleFileError};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {error}")]
    Io { path: PathBuf, error: std::io::Error },
    #[error("{path}: {message}")]
    Syntax { path: PathBuf, message: String },
    #[error("unknown key `{key}`")]
    UnknownKey { key: String },
    #[error("`{key}`: {reason}")]
    Invalid { key: String, reason: String },
    #[error(transparent)]
    Cycle(#[from] CycleFileError),
    #[error("config lists no scenarios")]
    NoScenarios,
}

impl ConfigError {
    /// Dotted key the error is about, if it concerns one.
    pub fn key(&self) -> Option<&str> {
        match self {
            ConfigError::UnknownKey { key } | ConfigError::Invalid { key, .. } => Some(key),
            _ => None,
        }
    }

    fn invalid(key: impl Into<String>, reason: impl ToString) -> Self {
        ConfigError::Invalid { key: key.into(), reason: reason.to_string() }
    }
}

/// What to do with keys the schema does not know.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum UnknownKeys {
    #[default]
    Reject,
    Warn,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TirePatch {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c_kappa: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c_alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps_v: Option<f64>,
}

impl TirePatch {
    fn apply(&self, mut p: TireParams) -> TireParams {
        p.c_kappa = self.c_kappa.unwrap_or(p.c_kappa);
        p.c_alpha = self.c_alpha.unwrap_or(p.c_alpha);
        p.mu = self.mu.unwrap_or(p.mu);
        p.eps_v = self.eps_v.unwrap_or(p.eps_v);
        p
    }

    fn full(p: &TireParams) -> Self {
        TirePatch { c_kappa: Some(p.c_kappa), c_alpha: Some(p.c_alpha), mu: Some(p.mu), eps_v: Some(p.eps_v) }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TireSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c_kappa: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c_alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps_v: Option<f64>,
    pub front: TirePatch,
    pub rear: TirePatch,
}

impl TireSection {
    fn axles(&self) -> (TireParams, TireParams) {
        let both = TirePatch { c_kappa: self.c_kappa, c_alpha: self.c_alpha, mu: self.mu, eps_v: self.eps_v };
        let base = both.apply(TireParams::default());
        (self.front.apply(base), self.rear.apply(base))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossMapSection {
    pub file: PathBuf,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimulationSection {
    /// Integrator step (s).
    pub dt: f64,
    /// Trace rows per second.
    pub trace_hz: f64,
    /// One trace row per integrator step, overriding `trace_hz`.
    pub full_rate_trace: bool,
    pub write_traces: bool,
    /// Relative tolerance of the balance identities.
    pub identity_tol: f64,
}

impl Default for SimulationSection {
    fn default() -> Self {
        SimulationSection { dt: 1e-3, trace_hz: 100.0, full_rate_trace: false, write_traces: true, identity_tol: 1e-3 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioEntry {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub cycle: String,
    pub lane_change_interval: f64,
    pub regen: bool,
    pub repetitions: u32,
    pub to_depletion: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
}

impl Default for ScenarioEntry {
    fn default() -> Self {
        ScenarioEntry {
            name: None,
            cycle: String::new(),
            lane_change_interval: 1000.0,
            regen: true,
            repetitions: 1,
            to_depletion: false,
            dt: None,
        }
    }
}

/// The config document as written, every section defaulted.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ConfigFile {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    pub vehicle: VehicleParams,
    pub tire: TireSection,
    pub powertrain: PowertrainParams,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub loss_map: Option<LossMapSection>,
    pub battery: BatteryParams,
    pub driver: DriverParams,
    pub lane: LaneGeometry,
    pub simulation: SimulationSection,
    pub scenario: Vec<ScenarioEntry>,
}

/// A validated configuration, ready to run.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub output_dir: PathBuf,
    pub identity_tol: f64,
    pub write_traces: bool,
    pub scenarios: Vec<Scenario>,
    /// The document with every default written out.
    pub resolved: ConfigFile,
}

impl RunConfig {
    /// Echo of the resolved configuration as TOML.
    pub fn echo(&self) -> String {
        toml::to_string_pretty(&self.resolved).expect("config serializes")
    }

    /// The four regen × lane-change variants of every distinct cycle, in
    /// the order (no regen, no lanes), (no regen, lanes), (regen, no lanes),
    /// (regen, lanes). The lane spacing comes from the first scenario on the
    /// cycle, or 1 km if that one has lane changes disabled.
    pub fn grid(&self) -> Vec<Scenario> {
        let mut seen: Vec<&str> = Vec::new();
        let mut out = Vec::new();
        for s in &self.scenarios {
            let cycle = s.cycle.name();
            if seen.contains(&cycle) {
                continue;
            }
            seen.push(cycle);
            let interval = if s.lane_change_interval > 0.0 { s.lane_change_interval } else { 1000.0 };
            for regen in [false, true] {
                for lanes in [false, true] {
                    let mut v = s.clone();
                    v.regen_enabled = regen;
                    v.lane_change_interval = if lanes { interval } else { 0.0 };
                    v.name = variant_name(cycle, regen, lanes);
                    out.push(v);
                }
            }
        }
        out
    }
}

fn variant_name(cycle: &str, regen: bool, lanes: bool) -> String {
    format!("{}_{}_{}", cycle, if regen { "regen" } else { "noregen" }, if lanes { "lanes" } else { "nolanes" })
}

pub fn parse_config(path: &Path, unknown: UnknownKeys) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|error| ConfigError::Io { path: path.to_path_buf(), error })?;
    let base = path.parent().unwrap_or(Path::new("."));
    parse_config_str(&text, base, path, unknown)
}

/// Parses config text; relative paths resolve against `base`, and `origin`
/// names the document in errors.
pub fn parse_config_str(text: &str, base: &Path, origin: &Path, unknown: UnknownKeys) -> Result<RunConfig, ConfigError> {
    let syntax = |e: toml::de::Error| ConfigError::Syntax { path: origin.to_path_buf(), message: e.to_string() };
    let de = toml::Deserializer::parse(text).map_err(syntax)?;
    let mut ignored = Vec::new();
    let file: ConfigFile = serde_ignored::deserialize(de, |p| ignored.push(p.to_string())).map_err(syntax)?;
    if let Some(key) = ignored.first() {
        match unknown {
            UnknownKeys::Reject => return Err(ConfigError::UnknownKey { key: key.clone() }),
            UnknownKeys::Warn => ignored.iter().for_each(|k| log::warn!("ignoring unknown config key `{k}`")),
        }
    }
    resolve(file, base)
}

fn resolve(mut file: ConfigFile, base: &Path) -> Result<RunConfig, ConfigError> {
    if file.scenario.is_empty() {
        return Err(ConfigError::NoScenarios);
    }
    let (tire_front, tire_rear) = file.tire.axles();
    let mut powertrain = file.powertrain.clone();
    if let Some(map) = &file.loss_map {
        let path = base.join(&map.file);
        let table = load_loss_map(&path).map_err(|r| ConfigError::invalid("loss_map.file", format!("{}: {r}", path.display())))?;
        powertrain.loss_map = Some(table);
    }
    let sim = &file.simulation;
    if !(sim.trace_hz > 0.0 && sim.trace_hz.is_finite()) {
        return Err(ConfigError::invalid("simulation.trace_hz", "must be positive"));
    }
    if sim.identity_tol.is_nan() || sim.identity_tol <= 0.0 {
        return Err(ConfigError::invalid("simulation.identity_tol", "must be positive"));
    }

    let mut cycles: BTreeMap<String, DriveCycle> = BTreeMap::new();
    let mut scenarios = Vec::new();
    let mut names: Vec<String> = Vec::new();
    for (i, entry) in file.scenario.iter_mut().enumerate() {
        let key = |field: &str| format!("scenario[{i}].{field}");
        if entry.cycle.is_empty() {
            return Err(ConfigError::invalid(key("cycle"), "missing"));
        }
        if !cycles.contains_key(&entry.cycle) {
            let cycle = match builtin_cycle(&entry.cycle) {
                Some(c) => c,
                None => load_cycle(&base.join(&entry.cycle))?,
            };
            cycles.insert(entry.cycle.clone(), cycle);
        }
        let cycle = cycles[&entry.cycle].clone();
        if !(entry.lane_change_interval >= 0.0 && entry.lane_change_interval.is_finite()) {
            return Err(ConfigError::invalid(key("lane_change_interval"), "must be non-negative"));
        }
        if entry.repetitions < 1 {
            return Err(ConfigError::invalid(key("repetitions"), "must be at least 1"));
        }
        let dt = entry.dt.unwrap_or(sim.dt);
        if !(dt > 0.0 && dt <= 0.01) {
            let k = if entry.dt.is_some() { key("dt") } else { "simulation.dt".into() };
            return Err(ConfigError::invalid(k, "must lie in (0, 0.01]"));
        }
        let mut name = entry.name.clone().unwrap_or_else(|| variant_name(cycle.name(), entry.regen, entry.lane_change_interval > 0.0));
        if names.contains(&name) {
            name = format!("{name}_{i}");
        }
        names.push(name.clone());
        entry.name = Some(name.clone());
        entry.dt = Some(dt);

        let mut s = Scenario::new(name, cycle);
        s.lane_change_interval = entry.lane_change_interval;
        s.regen_enabled = entry.regen;
        s.repetitions = entry.repetitions;
        s.to_depletion = entry.to_depletion;
        s.dt = dt;
        s.trace_interval = if sim.full_rate_trace { dt } else { 1.0 / sim.trace_hz };
        s.vehicle = file.vehicle;
        s.tire_front = tire_front;
        s.tire_rear = tire_rear;
        s.powertrain = powertrain.clone();
        s.battery = file.battery;
        s.driver = file.driver;
        s.lane = file.lane;
        s.validate().map_err(|e| ConfigError::invalid(e.path(), e.reason))?;
        scenarios.push(s);
    }

    file.tire = TireSection { front: TirePatch::full(&tire_front), rear: TirePatch::full(&tire_rear), ..Default::default() };
    let output_dir = base.join(file.output_dir.clone().unwrap_or_else(|| PathBuf::from("evlat-out")));
    file.output_dir = Some(output_dir.clone());
    Ok(RunConfig {
        output_dir,
        identity_tol: file.simulation.identity_tol,
        write_traces: file.simulation.write_traces,
        scenarios,
        resolved: file,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<RunConfig, ConfigError> {
        parse_config_str(text, Path::new("."), Path::new("test.toml"), UnknownKeys::Reject)
    }

    #[test]
    fn minimal_config_takes_defaults() {
        let c = parse("[[scenario]]\ncycle = \"hwfet\"\n").unwrap();
        assert_eq!(c.scenarios.len(), 1);
        let s = &c.scenarios[0];
        assert_eq!(s.vehicle, VehicleParams::default());
        assert_eq!(s.dt, 1e-3);
        assert_eq!(s.name, "hwfet_regen_lanes");
        let echo = c.echo();
        for key in ["m_veh", "c_kappa", "gear_ratio", "capacity_kwh", "kp", "width", "identity_tol", "lane_change_interval"] {
            assert!(echo.contains(key), "echo lacks {key}:\n{echo}");
        }
    }

    #[test]
    fn echo_parses_back_to_the_same_run() {
        let c = parse("[tire]\nmu = 0.8\n[tire.rear]\nc_kappa = 1e5\n[[scenario]]\ncycle = \"nedc\"\nregen = false\n").unwrap();
        let again = parse(&c.echo()).unwrap();
        assert_eq!(again.scenarios, c.scenarios);
        assert_eq!(c.scenarios[0].tire_front.mu, 0.8);
        assert_eq!(c.scenarios[0].tire_rear.c_kappa, 1e5);
        assert_eq!(c.scenarios[0].tire_rear.mu, 0.8);
    }

    #[test]
    fn negative_mass_names_the_key() {
        let e = parse("[vehicle]\nm_veh = -5.0\n[[scenario]]\ncycle = \"hwfet\"\n").unwrap_err();
        assert_eq!(e.key(), Some("vehicle.m_veh"));
    }

    #[test]
    fn unknown_key_is_rejected_or_ignored() {
        let text = "[vehicle]\nmass = 1.0\n[[scenario]]\ncycle = \"hwfet\"\n";
        let e = parse(text).unwrap_err();
        assert_eq!(e.key(), Some("vehicle.mass"));
        assert!(parse_config_str(text, Path::new("."), Path::new("t"), UnknownKeys::Warn).is_ok());
    }

    #[test]
    fn missing_cycle_file_is_an_error() {
        let e = parse("[[scenario]]\ncycle = \"no/such/file.csv\"\n").unwrap_err();
        assert!(matches!(e, ConfigError::Cycle(CycleFileError::Io { .. })));
    }

    #[test]
    fn grid_has_four_variants_per_cycle() {
        let c = parse("[[scenario]]\ncycle = \"hwfet\"\n[[scenario]]\ncycle = \"hwfet\"\nregen = false\n[[scenario]]\ncycle = \"nedc\"\n").unwrap();
        let g = c.grid();
        assert_eq!(g.len(), 8);
        assert_eq!(g[1].name, "hwfet_noregen_lanes");
        assert_eq!(g[1].lane_change_interval, 1000.0);
    }
}
