//! Scenario files.
//!
//! A scenario is a TOML document with the sections `[econ]`, `[recruitment]`,
//! `[bounds]`, `[strategy]`, `[simulation]` and an optional `[output]`.
//! Unknown keys are rejected. Every model invariant is checked at load time.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::control::Strategy;
use crate::error::ModelError;
use crate::model::{EconParams, Recruitment};
use crate::sim::SimConfig;
use crate::viability::{Maturity, ViabilityBounds};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed scenario: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid field `{field}`: {source}")]
    Invalid {
        field: String,
        #[source]
        source: ModelError,
    },
    #[error("unknown field `{0}`")]
    UnknownField(String),
}

fn invalid(field: &str) -> impl FnOnce(ModelError) -> ConfigError + '_ {
    move |source| ConfigError::Invalid {
        field: field.to_string(),
        source,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EconSection {
    pub alpha: [f64; 2],
    pub beta: [f64; 2],
    pub kappa: [f64; 2],
    pub price: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecruitmentSection {
    pub growth: f64,
    pub capacity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsSection {
    pub x_lo: f64,
    pub h_lo: f64,
}

fn default_rate() -> f64 {
    0.05
}

fn default_exit_intervals() -> u32 {
    crate::control::DEFAULT_EXIT_INTERVALS
}

fn default_maturity() -> Maturity {
    Maturity::Emerging
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrategySection {
    pub kind: Strategy,
    #[serde(default)]
    pub r0: f64,
    #[serde(default = "default_rate")]
    pub rate: f64,
    #[serde(default = "default_exit_intervals")]
    pub exit_intervals: u32,
    #[serde(default = "default_maturity", with = "maturity_serde")]
    pub initial_maturity: Maturity,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trend_deadband: Option<f64>,
}

mod maturity_serde {
    use super::Maturity;
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(m: &Maturity, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&m.as_str().to_ascii_lowercase())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Maturity, D::Error> {
        let s = String::deserialize(d)?;
        match s.to_ascii_lowercase().as_str() {
            "emerging" => Ok(Maturity::Emerging),
            "mature" => Ok(Maturity::Mature),
            other => Err(D::Error::custom(format!(
                "unknown maturity '{other}' (expected emerging or mature)"
            ))),
        }
    }
}

fn default_stride() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSection {
    pub x0: f64,
    pub dt: f64,
    pub horizon: f64,
    pub control_interval: f64,
    #[serde(default = "default_stride")]
    pub record_stride: usize,
    #[serde(default)]
    pub forced_moratorium: bool,
}

fn default_trajectory() -> String {
    "trajectory.csv".into()
}

fn default_events() -> String {
    "events.json".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    /// Directory used when no `--out` is given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<String>,
    #[serde(default = "default_trajectory")]
    pub trajectory: String,
    #[serde(default = "default_events")]
    pub events: String,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: None,
            trajectory: default_trajectory(),
            events: default_events(),
        }
    }
}

/// Raw scenario as written in a file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub econ: EconSection,
    pub recruitment: RecruitmentSection,
    pub bounds: BoundsSection,
    pub strategy: StrategySection,
    pub simulation: SimulationSection,
    #[serde(default)]
    pub output: OutputSection,
}

/// Validated model objects built from a [`ScenarioConfig`].
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub params: EconParams,
    pub recruitment: Recruitment,
    pub bounds: ViabilityBounds,
    pub sim: SimConfig,
}

/// Scalar fields addressable by name, e.g. from a sweep axis.
pub const NUMERIC_FIELDS: &[&str] = &[
    "alpha1",
    "alpha2",
    "beta1",
    "beta2",
    "kappa1",
    "kappa2",
    "price",
    "growth",
    "capacity",
    "x_lo",
    "h_lo",
    "r0",
    "rate",
    "x0",
    "dt",
    "horizon",
    "control_interval",
];

fn canonical_name(name: &str) -> &str {
    match name {
        "p" => "price",
        "g" => "growth",
        "K" | "k" => "capacity",
        "rho" => "rate",
        "T" => "horizon",
        "dt_c" => "control_interval",
        other => other,
    }
}

impl ScenarioConfig {
    /// The reference scenario: symmetric fleet, logistic stock with `g = 1`, `K = 2`.
    pub fn canonical() -> Self {
        Self {
            econ: EconSection {
                alpha: [1.0, 1.0],
                beta: [1.0, 1.0],
                kappa: [1.0, 1.0],
                price: 2.0,
            },
            recruitment: RecruitmentSection {
                growth: 1.0,
                capacity: 2.0,
            },
            bounds: BoundsSection {
                x_lo: 1.0,
                h_lo: 0.4,
            },
            strategy: StrategySection {
                kind: Strategy::Conservative,
                r0: 0.0,
                rate: default_rate(),
                exit_intervals: default_exit_intervals(),
                initial_maturity: Maturity::Emerging,
                trend_deadband: None,
            },
            simulation: SimulationSection {
                x0: 1.2,
                dt: 0.01,
                horizon: 200.0,
                control_interval: 0.1,
                record_stride: 1,
                forced_moratorium: false,
            },
            output: OutputSection::default(),
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let cfg: ScenarioConfig = toml::from_str(text)?;
        cfg.build()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    /// Serialized form; loading it back yields an equal config.
    pub fn to_canonical_string(&self) -> String {
        toml::to_string(self).expect("scenario config is always serializable")
    }

    /// Checks every invariant and builds the model objects.
    pub fn build(&self) -> Result<Scenario, ConfigError> {
        let e = &self.econ;
        let params = EconParams::new(e.alpha, e.beta, e.kappa, e.price).map_err(invalid("econ"))?;
        let recruitment = Recruitment::new(self.recruitment.growth, self.recruitment.capacity)
            .map_err(invalid("recruitment"))?;
        let bounds =
            ViabilityBounds::new(self.bounds.x_lo, self.bounds.h_lo).map_err(invalid("bounds"))?;
        let s = &self.strategy;
        let m = &self.simulation;
        let sim = SimConfig {
            dt: m.dt,
            horizon: m.horizon,
            control_interval: m.control_interval,
            x0: m.x0,
            strategy: s.kind,
            r0: s.r0,
            rate: s.rate,
            exit_intervals: s.exit_intervals,
            initial_maturity: s.initial_maturity,
            trend_deadband: s.trend_deadband,
            record_stride: m.record_stride,
            forced_moratorium: m.forced_moratorium,
        };
        sim.validate().map_err(|err| {
            let field = match &err {
                ModelError::InvalidParameter { name, .. } => match *name {
                    "r0" | "rate" | "exit_intervals" | "trend_deadband" => {
                        format!("strategy.{name}")
                    }
                    other => format!("simulation.{other}"),
                },
                _ => "simulation".to_string(),
            };
            ConfigError::Invalid { field, source: err }
        })?;
        if s.kind == Strategy::Conservative && !params.has_deviation_costs() {
            return Err(ConfigError::Invalid {
                field: "econ.kappa".into(),
                source: ModelError::NoDeviationCosts,
            });
        }
        Ok(Scenario {
            params,
            recruitment,
            bounds,
            sim,
        })
    }

    pub fn get_field(&self, name: &str) -> Result<f64, ConfigError> {
        Ok(match canonical_name(name) {
            "alpha1" => self.econ.alpha[0],
            "alpha2" => self.econ.alpha[1],
            "beta1" => self.econ.beta[0],
            "beta2" => self.econ.beta[1],
            "kappa1" => self.econ.kappa[0],
            "kappa2" => self.econ.kappa[1],
            "price" => self.econ.price,
            "growth" => self.recruitment.growth,
            "capacity" => self.recruitment.capacity,
            "x_lo" => self.bounds.x_lo,
            "h_lo" => self.bounds.h_lo,
            "r0" => self.strategy.r0,
            "rate" => self.strategy.rate,
            "x0" => self.simulation.x0,
            "dt" => self.simulation.dt,
            "horizon" => self.simulation.horizon,
            "control_interval" => self.simulation.control_interval,
            _ => return Err(ConfigError::UnknownField(name.to_string())),
        })
    }

    /// Overwrites one scalar field without validating the result.
    pub fn set_field(&mut self, name: &str, value: f64) -> Result<(), ConfigError> {
        let slot = match canonical_name(name) {
            "alpha1" => &mut self.econ.alpha[0],
            "alpha2" => &mut self.econ.alpha[1],
            "beta1" => &mut self.econ.beta[0],
            "beta2" => &mut self.econ.beta[1],
            "kappa1" => &mut self.econ.kappa[0],
            "kappa2" => &mut self.econ.kappa[1],
            "price" => &mut self.econ.price,
            "growth" => &mut self.recruitment.growth,
            "capacity" => &mut self.recruitment.capacity,
            "x_lo" => &mut self.bounds.x_lo,
            "h_lo" => &mut self.bounds.h_lo,
            "r0" => &mut self.strategy.r0,
            "rate" => &mut self.strategy.rate,
            "x0" => &mut self.simulation.x0,
            "dt" => &mut self.simulation.dt,
            "horizon" => &mut self.simulation.horizon,
            "control_interval" => &mut self.simulation.control_interval,
            _ => return Err(ConfigError::UnknownField(name.to_string())),
        };
        *slot = value;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const CANONICAL: &str = r#"
[econ]
alpha = [1.0, 1.0]
beta = [1.0, 1.0]
kappa = [1.0, 1.0]
price = 2.0

[recruitment]
growth = 1.0
capacity = 2.0

[bounds]
x_lo = 1.0
h_lo = 0.4

[strategy]
kind = "conservative"

[simulation]
x0 = 1.2
dt = 0.01
horizon = 200.0
control_interval = 0.1
"#;

    #[test]
    fn parses_with_defaults() {
        let cfg = ScenarioConfig::from_toml_str(CANONICAL).unwrap();
        assert_eq!(cfg, ScenarioConfig::canonical());
        let sc = cfg.build().unwrap();
        assert_eq!(sc.sim, SimConfig::default());
    }

    #[test]
    fn round_trip_is_idempotent() {
        let cfg = ScenarioConfig::from_toml_str(CANONICAL).unwrap();
        let once = cfg.to_canonical_string();
        let back = ScenarioConfig::from_toml_str(&once).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.to_canonical_string(), once);
    }

    #[test]
    fn unknown_keys_rejected() {
        let text = CANONICAL.replace("price = 2.0", "price = 2.0\ncolour = 3");
        let err = ScenarioConfig::from_toml_str(&text).unwrap_err();
        assert!(matches!(err, ConfigError::Parse(_)));
        assert!(err.to_string().contains("colour"), "{err}");
    }

    #[test]
    fn invariants_rechecked() {
        let text = CANONICAL.replace("beta = [1.0, 1.0]", "beta = [-1.0, 1.0]");
        let err = ScenarioConfig::from_toml_str(&text).unwrap_err();
        assert!(
            err.to_string().contains("econ") && err.to_string().contains("beta"),
            "{err}"
        );

        let text = CANONICAL.replace("horizon = 200.0", "horizon = 0.0");
        let err = ScenarioConfig::from_toml_str(&text).unwrap_err();
        assert!(err.to_string().contains("simulation.horizon"), "{err}");

        let text = CANONICAL.replace("kind = \"conservative\"", "kind = \"greedy\"");
        assert!(ScenarioConfig::from_toml_str(&text).is_err());
    }

    #[test]
    fn fields_by_name() {
        let mut cfg = ScenarioConfig::canonical();
        for name in NUMERIC_FIELDS {
            let v = cfg.get_field(name).unwrap();
            cfg.set_field(name, v).unwrap();
        }
        assert_eq!(cfg, ScenarioConfig::canonical());
        cfg.set_field("p", 3.0).unwrap();
        assert_eq!(cfg.econ.price, 3.0);
        cfg.set_field("kappa2", 0.5).unwrap();
        assert_eq!(cfg.econ.kappa, [1.0, 0.5]);
        assert!(matches!(
            cfg.set_field("zeta", 1.0),
            Err(ConfigError::UnknownField(_))
        ));
    }
}
