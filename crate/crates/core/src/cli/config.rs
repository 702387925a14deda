//! Scenario configuration (TOML).

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::density::Prescription;
use crate::error::{Error, Result};
use crate::state::{make_gaussian, mix, Dim, GridSpec, MixedState, ModelParams, MomentumState};

pub const MIN_MOMENTUM_NODES: usize = 256;
pub const MIN_SPATIAL_POINTS: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub model: ModelConfig,
    #[serde(default)]
    pub grids: GridConfig,
    #[serde(default)]
    pub states: Vec<StateConfig>,
    #[serde(default)]
    pub mixtures: Vec<MixtureConfig>,
    #[serde(default)]
    pub run: RunConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub mass: f64,
    pub dim: Dim,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default = "default_momentum_nodes")]
    pub momentum_nodes: usize,
    #[serde(default)]
    pub spatial_window: SpatialWindow,
    #[serde(default = "default_spatial_points")]
    pub spatial_points: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            momentum_nodes: default_momentum_nodes(),
            spatial_window: SpatialWindow::default(),
            spatial_points: default_spatial_points(),
        }
    }
}

fn default_momentum_nodes() -> usize {
    1024
}

fn default_spatial_points() -> usize {
    801
}

/// `"auto"` or a half-width `X` giving `[-X, X]` (d=1) / `[0, X]` (d=3).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum SpatialWindow {
    #[default]
    Auto,
    HalfWidth(f64),
}

impl Serialize for SpatialWindow {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            SpatialWindow::Auto => s.serialize_str("auto"),
            SpatialWindow::HalfWidth(x) => s.serialize_f64(*x),
        }
    }
}

impl<'de> Deserialize<'de> for SpatialWindow {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Number(f64),
            Int(i64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Number(x) => Ok(SpatialWindow::HalfWidth(x)),
            Raw::Int(x) => Ok(SpatialWindow::HalfWidth(x as f64)),
            Raw::Text(t) if t == "auto" => Ok(SpatialWindow::Auto),
            Raw::Text(t) => Err(serde::de::Error::custom(format!(
                "spatial_window must be \"auto\" or a number, got \"{t}\""
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateConfig {
    pub name: String,
    #[serde(rename = "type")]
    pub kind: String,
    pub p0: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixtureConfig {
    pub name: String,
    pub components: Vec<ComponentConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComponentConfig {
    pub weight: f64,
    pub state: String,
}

/// Command-specific parameters; every field has a default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// State or mixture for `density`; the first state when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<String>,
    /// States for `tails`, `spread` and `compare`; all states when empty.
    #[serde(default)]
    pub states: Vec<String>,
    #[serde(default = "default_times")]
    pub times: Vec<f64>,
    #[serde(default)]
    pub regions: Vec<[f64; 2]>,
    #[serde(default = "default_prescriptions")]
    pub prescriptions: Vec<Prescription>,
    /// Tail fit window; derived from each state's width when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tail_window: Option<[f64; 2]>,
    #[serde(default = "default_quantile")]
    pub quantile: f64,
    #[serde(default = "default_speed_tolerance")]
    pub speed_tolerance: f64,
    #[serde(default = "default_fraction")]
    pub fraction: f64,
    #[serde(default = "default_jitter")]
    pub jitter: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            target: None,
            states: Vec::new(),
            times: default_times(),
            regions: Vec::new(),
            prescriptions: default_prescriptions(),
            tail_window: None,
            quantile: default_quantile(),
            speed_tolerance: default_speed_tolerance(),
            fraction: default_fraction(),
            jitter: default_jitter(),
        }
    }
}

fn default_times() -> Vec<f64> {
    vec![0.0]
}

fn default_prescriptions() -> Vec<Prescription> {
    vec![Prescription::Povm, Prescription::NaiveNormalized]
}

fn default_quantile() -> f64 {
    0.1
}

fn default_speed_tolerance() -> f64 {
    0.05
}

fn default_fraction() -> f64 {
    crate::analysis::DEFAULT_BOUND_FRACTION
}

fn default_jitter() -> f64 {
    0.05
}

fn invalid(field: &str, message: impl Into<String>) -> Error {
    Error::Config { field: field.to_string(), message: message.into() }
}

impl ScenarioConfig {
    /// Parses and validates. TOML syntax and type errors carry line and
    /// column; semantic errors name the offending field.
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig = toml::from_str(text).map_err(|e| Error::Config {
            field: "config".into(),
            message: e.to_string().trim_end().to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        ModelParams::new(self.model.mass, self.model.dim)?;
        if self.grids.momentum_nodes < MIN_MOMENTUM_NODES {
            return Err(invalid(
                "grids.momentum_nodes",
                format!("{} is below the minimum of {MIN_MOMENTUM_NODES}", self.grids.momentum_nodes),
            ));
        }
        if self.grids.spatial_points < MIN_SPATIAL_POINTS {
            return Err(invalid(
                "grids.spatial_points",
                format!("{} is below the minimum of {MIN_SPATIAL_POINTS}", self.grids.spatial_points),
            ));
        }
        if let SpatialWindow::HalfWidth(x) = self.grids.spatial_window {
            if !(x.is_finite() && x > 0.0) {
                return Err(invalid("grids.spatial_window", format!("half-width must be > 0, got {x}")));
            }
        }
        let mut names = BTreeMap::new();
        for (i, s) in self.states.iter().enumerate() {
            if s.kind != "gaussian" {
                return Err(invalid(
                    &format!("states[{i}].type"),
                    format!("unsupported wavepacket type \"{}\" (only \"gaussian\")", s.kind),
                ));
            }
            if names.insert(s.name.clone(), i).is_some() {
                return Err(invalid(&format!("states[{i}].name"), format!("duplicate name \"{}\"", s.name)));
            }
        }
        for (i, m) in self.mixtures.iter().enumerate() {
            if names.contains_key(&m.name) || self.mixtures[..i].iter().any(|o| o.name == m.name) {
                return Err(invalid(&format!("mixtures[{i}].name"), format!("duplicate name \"{}\"", m.name)));
            }
            if m.components.is_empty() {
                return Err(invalid(&format!("mixtures[{i}].components"), "needs at least one component"));
            }
            for (j, c) in m.components.iter().enumerate() {
                if !names.contains_key(&c.state) {
                    return Err(invalid(
                        &format!("mixtures[{i}].components[{j}].state"),
                        format!("unknown state \"{}\"", c.state),
                    ));
                }
            }
            let sum: f64 = m.components.iter().map(|c| c.weight).sum();
            if (sum - 1.0).abs() > crate::state::WEIGHT_SUM_TOLERANCE {
                return Err(invalid(&format!("mixtures[{i}].components"), format!("weights sum to {sum}, must sum to 1")));
            }
        }
        if let Some(t) = &self.run.target {
            if !names.contains_key(t) && !self.mixtures.iter().any(|m| &m.name == t) {
                return Err(invalid("run.target", format!("unknown state or mixture \"{t}\"")));
            }
        }
        for (i, n) in self.run.states.iter().enumerate() {
            if !names.contains_key(n) {
                return Err(invalid(&format!("run.states[{i}]"), format!("unknown state \"{n}\"")));
            }
        }
        if self.run.times.is_empty() || self.run.times.iter().any(|t| !t.is_finite()) {
            return Err(invalid("run.times", "need at least one finite time"));
        }
        if let Some([a, b]) = self.run.tail_window {
            if !(a < b) {
                return Err(invalid("run.tail_window", format!("[{a}, {b}] is empty")));
            }
        }
        Ok(())
    }

    /// Applies `--resolution-scale`: momentum nodes times `k`, spatial
    /// intervals times `k` (so the coarse points stay on the fine grid).
    pub fn scaled(mut self, k: usize) -> Self {
        let k = k.max(1);
        self.grids.momentum_nodes *= k;
        self.grids.spatial_points = (self.grids.spatial_points - 1) * k + 1;
        self
    }

    pub fn params(&self) -> Result<ModelParams> {
        ModelParams::new(self.model.mass, self.model.dim)
    }

    pub fn grid_spec(&self) -> GridSpec {
        GridSpec::with_nodes(self.grids.momentum_nodes)
    }

    pub fn build_state(&self, name: &str) -> Result<MomentumState> {
        let s = self
            .states
            .iter()
            .find(|s| s.name == name)
            .ok_or_else(|| invalid("states", format!("unknown state \"{name}\"")))?;
        make_gaussian(self.params()?, s.p0, s.sigma, self.grid_spec()).map_err(|e| match e {
            Error::Config { field, message } => Error::Config { field: format!("states.{name}: {field}"), message },
            other => other,
        })
    }

    pub fn build_mixture(&self, name: &str) -> Result<MixedState> {
        let m = self
            .mixtures
            .iter()
            .find(|m| m.name == name)
            .ok_or_else(|| invalid("mixtures", format!("unknown mixture \"{name}\"")))?;
        let comps = m
            .components
            .iter()
            .map(|c| Ok((c.weight, self.build_state(&c.state)?)))
            .collect::<Result<Vec<_>>>()?;
        mix(comps)
    }

    /// States named in `run.states`, or every state in file order.
    pub fn selected_states(&self) -> Vec<String> {
        if self.run.states.is_empty() {
            self.states.iter().map(|s| s.name.clone()).collect()
        } else {
            self.run.states.clone()
        }
    }

    /// The effective configuration as TOML.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASIC: &str = r#"
[model]
mass = 1.0
dim = 1

[[states]]
name = "rest"
type = "gaussian"
p0 = 0.0
sigma = 0.25
"#;

    #[test]
    fn defaults_fill_in() {
        let cfg = ScenarioConfig::parse(BASIC).unwrap();
        assert_eq!(cfg.grids.momentum_nodes, 1024);
        assert_eq!(cfg.grids.spatial_window, SpatialWindow::Auto);
        assert_eq!(cfg.run.quantile, 0.1);
        let again = ScenarioConfig::parse(&cfg.to_toml()).unwrap();
        assert_eq!(again, cfg);
    }

    #[test]
    fn missing_mass_is_named() {
        let err = ScenarioConfig::parse("[model]\ndim = 1\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("mass"), "{msg}");
        assert!(msg.contains("line"), "{msg}");
    }

    #[test]
    fn resolution_minimums_are_enforced() {
        let text = format!("{BASIC}\n[grids]\nmomentum_nodes = 128\n");
        let err = ScenarioConfig::parse(&text).unwrap_err();
        assert!(err.to_string().contains("grids.momentum_nodes"));
        let text = format!("{BASIC}\n[grids]\nspatial_points = 50\n");
        assert!(ScenarioConfig::parse(&text).is_err());
    }

    #[test]
    fn mixture_references_and_weights_are_checked() {
        let bad_ref = format!("{BASIC}\n[[mixtures]]\nname = \"m\"\ncomponents = [{{ weight = 1.0, state = \"nope\" }}]\n");
        let err = ScenarioConfig::parse(&bad_ref).unwrap_err();
        assert!(err.to_string().contains("unknown state"));
        let bad_sum = format!(
            "{BASIC}\n[[mixtures]]\nname = \"m\"\ncomponents = [{{ weight = 0.7, state = \"rest\" }}, {{ weight = 0.4, state = \"rest\" }}]\n"
        );
        assert!(ScenarioConfig::parse(&bad_sum).unwrap_err().to_string().contains("sum"));
    }

    #[test]
    fn window_accepts_auto_or_number() {
        let text = format!("{BASIC}\n[grids]\nspatial_window = 12\n");
        assert_eq!(ScenarioConfig::parse(&text).unwrap().grids.spatial_window, SpatialWindow::HalfWidth(12.0));
        let text = format!("{BASIC}\n[grids]\nspatial_window = \"wide\"\n");
        assert!(ScenarioConfig::parse(&text).is_err());
    }

    #[test]
    fn scaling_keeps_coarse_points_nested() {
        let cfg = ScenarioConfig::parse(BASIC).unwrap().scaled(2);
        assert_eq!(cfg.grids.momentum_nodes, 2048);
        assert_eq!(cfg.grids.spatial_points, 1601);
    }
}
