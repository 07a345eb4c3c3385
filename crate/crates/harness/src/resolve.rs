use arena_core::config::{GameConfig, CONFIG_KEYS};

use crate::HarnessError;

/// Command-line changes to a preset configuration.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Overrides {
    pub set: Vec<(String, String)>,
    pub seed: Option<u64>,
    /// Explicit acknowledgment that preset values are being replaced.
    pub acknowledged: bool,
}

impl Overrides {
    pub fn is_empty(&self) -> bool {
        self.set.is_empty() && self.seed.is_none()
    }

    /// Keys this override set touches, in application order.
    pub fn keys(&self) -> Vec<String> {
        let mut keys: Vec<String> = self.set.iter().map(|(k, _)| k.clone()).collect();
        if self.seed.is_some() {
            keys.push("seed".into());
        }
        keys
    }
}

/// Parses a `key=value` command-line assignment.
pub fn parse_assignment(s: &str) -> Result<(String, String), String> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| format!("expected key=value, got `{s}`"))?;
    let k = k.trim();
    if k.is_empty() {
        return Err(format!("empty key in `{s}`"));
    }
    Ok((k.to_string(), v.trim().to_string()))
}

/// Applies overrides to a preset configuration. Unknown keys are reported
/// first; any override then needs acknowledgment; the result must validate.
pub fn resolve(base: &GameConfig, overrides: &Overrides) -> Result<GameConfig, HarnessError> {
    let mut config = base.clone();
    config.apply_overrides(overrides.set.iter().map(|(k, v)| (k.as_str(), v.as_str())))?;
    if let Some(seed) = overrides.seed {
        config.seed = seed;
    }
    if !overrides.is_empty() && !overrides.acknowledged {
        return Err(HarnessError::UnacknowledgedOverrides(overrides.keys()));
    }
    config.validate()?;
    Ok(config)
}

/// The resolved configuration as printed before a run: every key, with
/// values that differ from the preset marked.
pub fn echo_config(id: &str, resolved: &GameConfig, preset: &GameConfig) -> String {
    let mut out = format!("# resolved config for {id}\n");
    for key in CONFIG_KEYS {
        let value = resolved.get(key).unwrap_or_default();
        out.push_str(&format!("{key} = {value}"));
        if preset.get(key).as_deref() != Some(value.as_str()) {
            out.push_str(&format!(
                "    # overridden, preset {}",
                preset.get(key).unwrap_or_default()
            ));
        }
        out.push('\n');
    }
    out
}
