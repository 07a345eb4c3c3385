use std::fmt;
use std::str::FromStr;

use arena_core::config::GameConfig;
use arena_core::policy::{PolicyMap, PolicySet, ScriptedKind};
use arena_gateway::{Gateway, GatewayConfig, LlmPolicySet};

use crate::HarnessError;

/// Who decides for the agents of a game.
///
/// Text forms: `llm`, `scripted:<name>` and `mixed:<name>,<name>,...`, where
/// a mixed rotation assigns agent `i` the policy at `i % len`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PolicySpec {
    Llm,
    Scripted(ScriptedKind),
    Mixed(Vec<ScriptedKind>),
}

impl PolicySpec {
    pub fn is_llm(&self) -> bool {
        matches!(self, PolicySpec::Llm)
    }

    pub fn uses(&self, kind: ScriptedKind) -> bool {
        match self {
            PolicySpec::Llm => false,
            PolicySpec::Scripted(k) => *k == kind,
            PolicySpec::Mixed(ks) => ks.contains(&kind),
        }
    }

    /// Builds the policy set for one game. LLM policies need a gateway
    /// config; the key is read from its environment variable here, before
    /// any turn is played.
    pub fn build(
        &self,
        config: &GameConfig,
        gateway: Option<&GatewayConfig>,
    ) -> Result<Box<dyn PolicySet + Send>, HarnessError> {
        Ok(match self {
            PolicySpec::Llm => {
                let mut gw = gateway.cloned().ok_or(HarnessError::NoEndpoint)?;
                gw.max_concurrency = config.llm_concurrency as usize;
                Box::new(LlmPolicySet::new(Gateway::from_env(gw)?)?)
            }
            PolicySpec::Scripted(k) => Box::new(PolicyMap::scripted(&[*k], config)),
            PolicySpec::Mixed(ks) => Box::new(PolicyMap::scripted(ks, config)),
        })
    }
}

impl fmt::Display for PolicySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PolicySpec::Llm => f.write_str("llm"),
            PolicySpec::Scripted(k) => write!(f, "scripted:{k}"),
            PolicySpec::Mixed(ks) => {
                let names: Vec<&str> = ks.iter().map(|k| k.name()).collect();
                write!(f, "mixed:{}", names.join(","))
            }
        }
    }
}

impl FromStr for PolicySpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("llm") {
            return Ok(PolicySpec::Llm);
        }
        if let Some(name) = s.strip_prefix("scripted:") {
            return Ok(PolicySpec::Scripted(name.trim().parse()?));
        }
        if let Some(list) = s.strip_prefix("mixed:") {
            let kinds = list
                .split(',')
                .map(|n| n.trim().parse::<ScriptedKind>())
                .collect::<Result<Vec<_>, _>>()?;
            return Ok(PolicySpec::Mixed(kinds));
        }
        Err(format!(
            "unknown policy spec `{s}` (expected llm, scripted:<name> or mixed:<name>,<name>,...)"
        ))
    }
}
