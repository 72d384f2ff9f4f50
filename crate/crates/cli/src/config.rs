use std::path::{Path, PathBuf};

use agitrack_core::synth::ScenarioSpec;
use agitrack_forest::Hyperparams;
use agitrack_realtime::{EngineConfig, PreAgitationDetector};
use agitrack_seqnet::TrainConfig;
use agitrack_service::PipelineConfig;
use serde::Deserialize;

use crate::error::{invalid, Result};

/// Settings a `--config` file may override. Every section is optional and
/// flags win over file values.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CliConfig {
    pub engine: EngineConfig,
    pub forest: Hyperparams,
    pub seq: TrainConfig,
    pub synth: Option<ScenarioSpec>,
    pub preagitation: PreAgitationDetector,
    pub retrain: PipelineConfig,
}

impl CliConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else { return Ok(CliConfig::default()) };
        let text = std::fs::read_to_string(path).map_err(|e| invalid(format!("config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| invalid(format!("config {}: {e}", path.display())))
    }
}

/// Resolves relative paths against the data root when one is set.
#[derive(Debug, Clone, Default)]
pub struct Paths {
    pub root: Option<PathBuf>,
}

impl Paths {
    pub fn get(&self, p: &Path) -> PathBuf {
        match &self.root {
            Some(r) if p.is_relative() => r.join(p),
            _ => p.to_path_buf(),
        }
    }
}
