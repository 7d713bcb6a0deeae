//! Tool configuration: file locations plus the tunable model parameters.
//! Absent fields take documented defaults; all referenced files must exist
//! at load time.

use bazaar_core::catalog::MatchWeights;
use bazaar_core::plan::CostModel;
use bazaar_core::region::Region;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub marketplaces: Vec<PathBuf>,
    pub node_registry: Option<PathBuf>,
    pub authority_registry: Option<PathBuf>,
    pub cost: CostModel,
    pub match_weights: MatchWeights,
    pub metering_window_s: u64,
    pub default_region: Region,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            marketplaces: Vec::new(),
            node_registry: None,
            authority_registry: None,
            cost: CostModel::default(),
            match_weights: MatchWeights::default(),
            metering_window_s: 60,
            default_region: Region::EU,
        }
    }
}

#[derive(Debug, thiserror::Error)]
#[error("config field `{field}`: {reason}")]
pub struct ConfigError {
    pub field: String,
    pub reason: String,
}

fn err(field: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError { field: field.to_string(), reason: reason.into() }
}

impl Config {
    pub fn load(path: &Path) -> Result<Config, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| err("<config>", format!("cannot read {}: {e}", path.display())))?;
        let config: Config =
            serde_json::from_str(&text).map_err(|e| err("<config>", e.to_string()))?;
        config.validate(path.parent().unwrap_or(Path::new(".")))?;
        Ok(config)
    }

    /// Range checks plus existence of every referenced file (relative paths
    /// resolve against the config file's directory).
    pub fn validate(&self, base: &Path) -> Result<(), ConfigError> {
        self.cost.check().map_err(|reason| err("cost", reason))?;
        let w = self.match_weights;
        if !(w.quality >= 0.0 && w.price >= 0.0 && (w.quality + w.price) > 0.0) {
            return Err(err(
                "match_weights",
                format!("weights ({}, {}) must be ≥ 0 and sum > 0", w.quality, w.price),
            ));
        }
        if self.metering_window_s == 0 {
            return Err(err("metering_window_s", "must be > 0"));
        }
        for (field, path) in self
            .marketplaces
            .iter()
            .map(|p| ("marketplaces", p))
            .chain(self.node_registry.iter().map(|p| ("node_registry", p)))
            .chain(self.authority_registry.iter().map(|p| ("authority_registry", p)))
        {
            let resolved = if path.is_absolute() { path.clone() } else { base.join(path) };
            if !resolved.exists() {
                return Err(err(field, format!("file {} does not exist", resolved.display())));
            }
        }
        Ok(())
    }

    pub fn render(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}
