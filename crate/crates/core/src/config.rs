//! Game configuration and its flat `key = value` file format.
//!
//! Every field is written explicitly and every field is required when
//! reading a file back. Unknown keys are rejected so a mistyped override can
//! never silently fall back to a default.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("unknown config key `{0}`")]
    UnknownKey(String),
    #[error("duplicate config key `{0}`")]
    DuplicateKey(String),
    #[error("missing config keys: {}", .0.join(", "))]
    MissingKeys(Vec<String>),
    #[error("bad value `{value}` for `{key}`: {reason}")]
    BadValue {
        key: String,
        value: String,
        reason: String,
    },
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("invalid config: {}", .0.join("; "))]
    Invalid(Vec<String>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EngineVariant {
    Survival,
    SexualSelection,
}

impl fmt::Display for EngineVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EngineVariant::Survival => "survival",
            EngineVariant::SexualSelection => "sexual_selection",
        })
    }
}

impl FromStr for EngineVariant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "survival" => Ok(EngineVariant::Survival),
            "sexual_selection" => Ok(EngineVariant::SexualSelection),
            other => Err(format!(
                "expected survival or sexual_selection, got {other}"
            )),
        }
    }
}

/// Costs and inheritance parameters of the sexual-selection variant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatingConfig {
    pub provider_food_cost: u32,
    pub provider_token_cost: u32,
    pub chooser_food_cost: u32,
    pub chooser_token_cost: u32,
    pub mutation_sigma: f64,
    pub communicate_token_cost: u32,
    pub reveal_duration: u32,
    /// Chooser is charged on every evaluation, not only on acceptance.
    pub chooser_pays_on_reject: bool,
}

impl Default for MatingConfig {
    fn default() -> Self {
        Self {
            provider_food_cost: 6,
            provider_token_cost: 3,
            chooser_food_cost: 12,
            chooser_token_cost: 5,
            mutation_sigma: 1.0,
            communicate_token_cost: 2,
            reveal_duration: 3,
            chooser_pays_on_reject: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameConfig {
    pub grid_width: u32,
    pub grid_height: u32,
    pub n_food_nodes: u32,
    pub n_token_nodes: u32,
    pub food_regen: u32,
    pub token_regen: u32,
    pub upkeep: u32,
    pub max_turns: u32,
    pub n_agents: u32,
    pub engine_variant: EngineVariant,
    pub cell_capacity: u32,
    pub seed: u64,
    pub llm_concurrency: u32,
    pub mating: MatingConfig,
}

impl Default for GameConfig {
    /// The controlled upkeep-sweep arena at its lowest upkeep.
    fn default() -> Self {
        Self {
            grid_width: 9,
            grid_height: 9,
            n_food_nodes: 8,
            n_token_nodes: 5,
            food_regen: 3,
            token_regen: 2,
            upkeep: 2,
            max_turns: 60,
            n_agents: 16,
            engine_variant: EngineVariant::Survival,
            cell_capacity: 3,
            seed: 42,
            llm_concurrency: 4,
            mating: MatingConfig::default(),
        }
    }
}

/// Keys of the flat format, in canonical write order.
pub const CONFIG_KEYS: &[&str] = &[
    "grid_width",
    "grid_height",
    "n_food_nodes",
    "n_token_nodes",
    "food_regen",
    "token_regen",
    "upkeep",
    "max_turns",
    "n_agents",
    "engine_variant",
    "cell_capacity",
    "seed",
    "llm_concurrency",
    "provider_food_cost",
    "provider_token_cost",
    "chooser_food_cost",
    "chooser_token_cost",
    "mutation_sigma",
    "communicate_token_cost",
    "reveal_duration",
    "chooser_pays_on_reject",
];

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T, ConfigError>
where
    T::Err: fmt::Display,
{
    value.parse::<T>().map_err(|e| ConfigError::BadValue {
        key: key.to_string(),
        value: value.to_string(),
        reason: e.to_string(),
    })
}

impl GameConfig {
    pub fn cells(&self) -> u64 {
        u64::from(self.grid_width) * u64::from(self.grid_height)
    }

    /// Checks every invariant and reports all violations at once.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut errs = Vec::new();
        if self.grid_width < 1 || self.grid_height < 1 {
            errs.push("grid dimensions must be >= 1".to_string());
        }
        if self.cell_capacity < 1 {
            errs.push("cell_capacity must be >= 1".to_string());
        }
        let nodes = u64::from(self.n_food_nodes) + u64::from(self.n_token_nodes);
        if nodes > self.cells() {
            errs.push(format!(
                "n_food_nodes + n_token_nodes = {nodes} exceeds {} cells",
                self.cells()
            ));
        }
        if u64::from(self.n_agents) > self.cells() * u64::from(self.cell_capacity) {
            errs.push(format!(
                "n_agents = {} exceeds grid capacity {}",
                self.n_agents,
                self.cells() * u64::from(self.cell_capacity)
            ));
        }
        if self.n_food_nodes > 0 && self.food_regen == 0 {
            errs.push("food_regen must be > 0 when food nodes exist".to_string());
        }
        if self.n_token_nodes > 0 && self.token_regen == 0 {
            errs.push("token_regen must be > 0 when token nodes exist".to_string());
        }
        if self.engine_variant == EngineVariant::SexualSelection && !self.n_agents.is_multiple_of(2)
        {
            errs.push(format!(
                "sexual_selection requires an even n_agents, got {}",
                self.n_agents
            ));
        }
        if self.llm_concurrency < 1 {
            errs.push("llm_concurrency must be >= 1".to_string());
        }
        if !(self.mating.mutation_sigma > 0.0 && self.mating.mutation_sigma.is_finite()) {
            errs.push("mutation_sigma must be a positive finite number".to_string());
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::Invalid(errs))
        }
    }

    pub fn get(&self, key: &str) -> Option<String> {
        let m = &self.mating;
        Some(match key {
            "grid_width" => self.grid_width.to_string(),
            "grid_height" => self.grid_height.to_string(),
            "n_food_nodes" => self.n_food_nodes.to_string(),
            "n_token_nodes" => self.n_token_nodes.to_string(),
            "food_regen" => self.food_regen.to_string(),
            "token_regen" => self.token_regen.to_string(),
            "upkeep" => self.upkeep.to_string(),
            "max_turns" => self.max_turns.to_string(),
            "n_agents" => self.n_agents.to_string(),
            "engine_variant" => self.engine_variant.to_string(),
            "cell_capacity" => self.cell_capacity.to_string(),
            "seed" => self.seed.to_string(),
            "llm_concurrency" => self.llm_concurrency.to_string(),
            "provider_food_cost" => m.provider_food_cost.to_string(),
            "provider_token_cost" => m.provider_token_cost.to_string(),
            "chooser_food_cost" => m.chooser_food_cost.to_string(),
            "chooser_token_cost" => m.chooser_token_cost.to_string(),
            "mutation_sigma" => format!("{:?}", m.mutation_sigma),
            "communicate_token_cost" => m.communicate_token_cost.to_string(),
            "reveal_duration" => m.reveal_duration.to_string(),
            "chooser_pays_on_reject" => m.chooser_pays_on_reject.to_string(),
            _ => return None,
        })
    }

    /// Sets one field from its textual form. Does not validate cross-field invariants.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let value = value.trim();
        let m = &mut self.mating;
        match key {
            "grid_width" => self.grid_width = parse_value(key, value)?,
            "grid_height" => self.grid_height = parse_value(key, value)?,
            "n_food_nodes" => self.n_food_nodes = parse_value(key, value)?,
            "n_token_nodes" => self.n_token_nodes = parse_value(key, value)?,
            "food_regen" => self.food_regen = parse_value(key, value)?,
            "token_regen" => self.token_regen = parse_value(key, value)?,
            "upkeep" => self.upkeep = parse_value(key, value)?,
            "max_turns" => self.max_turns = parse_value(key, value)?,
            "n_agents" => self.n_agents = parse_value(key, value)?,
            "engine_variant" => self.engine_variant = parse_value(key, value)?,
            "cell_capacity" => self.cell_capacity = parse_value(key, value)?,
            "seed" => self.seed = parse_value(key, value)?,
            "llm_concurrency" => self.llm_concurrency = parse_value(key, value)?,
            "provider_food_cost" => m.provider_food_cost = parse_value(key, value)?,
            "provider_token_cost" => m.provider_token_cost = parse_value(key, value)?,
            "chooser_food_cost" => m.chooser_food_cost = parse_value(key, value)?,
            "chooser_token_cost" => m.chooser_token_cost = parse_value(key, value)?,
            "mutation_sigma" => m.mutation_sigma = parse_value(key, value)?,
            "communicate_token_cost" => m.communicate_token_cost = parse_value(key, value)?,
            "reveal_duration" => m.reveal_duration = parse_value(key, value)?,
            "chooser_pays_on_reject" => m.chooser_pays_on_reject = parse_value(key, value)?,
            _ => return Err(ConfigError::UnknownKey(key.to_string())),
        }
        Ok(())
    }

    /// Renders every field, one `key = value` line each, in [`CONFIG_KEYS`] order.
    pub fn to_flat(&self) -> String {
        let mut out = String::new();
        for key in CONFIG_KEYS {
            let value = self.get(key).expect("every listed key is readable");
            out.push_str(key);
            out.push_str(" = ");
            out.push_str(&value);
            out.push('\n');
        }
        out
    }

    /// Parses a complete flat config. Blank lines and `#` comments are skipped.
    pub fn from_flat(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = GameConfig::default();
        let mut seen: Vec<&str> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or(ConfigError::Syntax { line: idx + 1 })?;
            let key = key.trim();
            if !CONFIG_KEYS.contains(&key) {
                return Err(ConfigError::UnknownKey(key.to_string()));
            }
            if seen.contains(&key) {
                return Err(ConfigError::DuplicateKey(key.to_string()));
            }
            cfg.set(key, value)?;
            seen.push(key);
        }
        let missing: Vec<String> = CONFIG_KEYS
            .iter()
            .filter(|k| !seen.contains(k))
            .map(|k| k.to_string())
            .collect();
        if !missing.is_empty() {
            return Err(ConfigError::MissingKeys(missing));
        }
        Ok(cfg)
    }

    /// Applies `key=value` overrides in order.
    pub fn apply_overrides<'a, I>(&mut self, overrides: I) -> Result<(), ConfigError>
    where
        I: IntoIterator<Item = (&'a str, &'a str)>,
    {
        for (k, v) in overrides {
            self.set(k.trim(), v)?;
        }
        Ok(())
    }
}
