//! Scenario configuration: a JSON document naming the powers and the three
//! radial coefficient expressions.

use std::path::Path;

use serde::Serialize;
use serde_json::{Map, Value};

use breather_core::coeffexpr::RadialProfile;
use breather_core::oscillator::PowerPair;
use breather_core::periodmap::QuadratureSettings;
use breather_core::radial::{
    MediumCoefficients, RadialError, REMARK41_MU, REMARK41_RHO, REMARK41_VQ,
};

use crate::CliError;

pub const DEFAULT_R_MAX: f64 = 6.0;
pub const DEFAULT_R_POINTS: usize = 50;
pub const DEFAULT_T_POINTS: usize = 50;

const TOP_KEYS: [&str; 8] = ["p", "q", "rho", "mu", "vq", "r_max", "grids", "phase_shift"];
const GRID_KEYS: [&str; 4] = ["r_points", "t_points", "panels", "nodes_per_panel"];

/// Optional grid overrides.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Grids {
    pub r_points: usize,
    pub t_points: usize,
    pub quadrature: QuadratureSettings,
}

impl Default for Grids {
    fn default() -> Self {
        Self {
            r_points: DEFAULT_R_POINTS,
            t_points: DEFAULT_T_POINTS,
            quadrature: QuadratureSettings::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioConfig {
    pub p: f64,
    pub q: f64,
    pub rho: String,
    pub mu: String,
    pub vq: String,
    pub r_max: f64,
    pub grids: Grids,
    pub phase_shift: Option<String>,
}

/// A config whose expressions have been parsed and whose coefficients have
/// been evaluated on the working range.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub powers: PowerPair,
    pub coefficients: MediumCoefficients,
    pub phase_shift: Option<RadialProfile>,
}

impl ScenarioConfig {
    /// The built-in `remark41` scenario.
    pub fn remark41() -> Self {
        Self {
            p: 3.0,
            q: 4.0,
            rho: REMARK41_RHO.into(),
            mu: REMARK41_MU.into(),
            vq: REMARK41_VQ.into(),
            r_max: DEFAULT_R_MAX,
            grids: Grids::default(),
            phase_shift: None,
        }
    }

    pub fn builtin(name: &str) -> Result<Self, CliError> {
        match name {
            "remark41" => Ok(Self::remark41()),
            other => Err(CliError::input(format!(
                "unknown scenario `{other}`, available: remark41"
            ))),
        }
    }

    pub fn from_path(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::input(format!("reading config {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let value: Value = serde_json::from_str(text)
            .map_err(|e| CliError::input(format!("config is not valid JSON: {e}")))?;
        let Value::Object(map) = value else {
            return Err(CliError::input("config must be a JSON object"));
        };
        reject_unknown(&map, &TOP_KEYS, "")?;
        let grids = match map.get("grids") {
            None | Some(Value::Null) => Grids::default(),
            Some(Value::Object(g)) => {
                reject_unknown(g, &GRID_KEYS, "grids.")?;
                let mut out = Grids::default();
                if let Some(n) = opt_count(g, "r_points", "grids.r_points", 2)? {
                    out.r_points = n;
                }
                if let Some(n) = opt_count(g, "t_points", "grids.t_points", 2)? {
                    out.t_points = n;
                }
                if let Some(n) = opt_count(g, "panels", "grids.panels", 1)? {
                    out.quadrature.panels = n;
                }
                if let Some(n) = opt_count(g, "nodes_per_panel", "grids.nodes_per_panel", 2)? {
                    out.quadrature.nodes_per_panel = n;
                }
                out
            }
            Some(_) => return Err(CliError::key("grids", "expected an object")),
        };
        let r_max = match map.get("r_max") {
            None | Some(Value::Null) => DEFAULT_R_MAX,
            Some(_) => number(&map, "r_max")?,
        };
        let phase_shift = match map.get("phase_shift") {
            None | Some(Value::Null) => None,
            Some(_) => Some(string(&map, "phase_shift")?),
        };
        Ok(Self {
            p: number(&map, "p")?,
            q: number(&map, "q")?,
            rho: string(&map, "rho")?,
            mu: string(&map, "mu")?,
            vq: string(&map, "vq")?,
            r_max,
            grids,
            phase_shift,
        })
    }

    /// Parses every expression and evaluates the coefficients on [0, r_max]
    /// so later stages never meet an input error.
    pub fn validate(self) -> Result<Scenario, CliError> {
        if !(self.p > 1.0 && self.p.is_finite()) {
            return Err(CliError::key("p", format!("need p > 1, got {}", self.p)));
        }
        if !(self.q > self.p && self.q.is_finite()) {
            return Err(CliError::key(
                "q",
                format!("need q > p = {}, got {}", self.p, self.q),
            ));
        }
        if !(self.r_max > 0.0 && self.r_max.is_finite()) {
            return Err(CliError::key(
                "r_max",
                format!("need a positive finite radius, got {}", self.r_max),
            ));
        }
        let powers =
            PowerPair::new(self.p, self.q).map_err(|e| CliError::key("p", e.to_string()))?;
        let parse = |key: &str, src: &str| {
            RadialProfile::parse(src).map_err(|e| CliError::key(key, e.to_string()))
        };
        let coefficients = MediumCoefficients::new(
            parse("rho", &self.rho)?,
            parse("mu", &self.mu)?,
            parse("vq", &self.vq)?,
            powers,
        );
        coefficients
            .derive_fields(self.r_max)
            .map_err(coefficient_error)?;
        let phase_shift = match &self.phase_shift {
            Some(src) => Some(parse("phase_shift", src)?),
            None => None,
        };
        Ok(Scenario {
            config: self,
            powers,
            coefficients,
            phase_shift,
        })
    }
}

/// Input errors from coefficient evaluation, attributed to a config key
/// where one is responsible.
pub fn coefficient_error(e: RadialError) -> CliError {
    match &e {
        RadialError::Eval { name, .. } | RadialError::NonPositiveCoefficient { name, .. } => {
            let key = match *name {
                "rho" | "mu" | "vq" | "phase_shift" => *name,
                // derived quantities inherit from the expressions they are built from
                _ => "rho/mu/vq",
            };
            CliError::key(key, e.to_string())
        }
        _ => CliError::input(e.to_string()),
    }
}

fn reject_unknown(
    map: &Map<String, Value>,
    allowed: &[&str],
    prefix: &str,
) -> Result<(), CliError> {
    match map.keys().find(|k| !allowed.contains(&k.as_str())) {
        Some(k) => Err(CliError::key(
            &format!("{prefix}{k}"),
            format!("unknown key, expected one of {}", allowed.join(", ")),
        )),
        None => Ok(()),
    }
}

fn number(map: &Map<String, Value>, key: &str) -> Result<f64, CliError> {
    match map.get(key) {
        None => Err(CliError::key(key, "missing")),
        Some(v) => v
            .as_f64()
            .ok_or_else(|| CliError::key(key, format!("expected a number, got {v}"))),
    }
}

fn string(map: &Map<String, Value>, key: &str) -> Result<String, CliError> {
    match map.get(key) {
        None => Err(CliError::key(key, "missing")),
        Some(Value::String(s)) => Ok(s.clone()),
        Some(v) => Err(CliError::key(
            key,
            format!("expected an expression string, got {v}"),
        )),
    }
}

fn opt_count(
    map: &Map<String, Value>,
    key: &str,
    label: &str,
    min: u64,
) -> Result<Option<usize>, CliError> {
    match map.get(key) {
        None | Some(Value::Null) => Ok(None),
        Some(v) => match v.as_u64() {
            Some(n) if n >= min => Ok(Some(n as usize)),
            _ => Err(CliError::key(
                label,
                format!("expected an integer ≥ {min}, got {v}"),
            )),
        },
    }
}
