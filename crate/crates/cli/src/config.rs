//! Optional TOML configuration. Command-line flags override file values.

use std::path::{Path, PathBuf};

use pdeflow_core::agents::ProgActConfig;
use pdeflow_core::graphmetrics::MetricConfig;
use pdeflow_core::providers::HttpConfig;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ProviderKind {
    #[default]
    Scripted,
    Http,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CliConfig {
    pub provider: ProviderKind,
    /// Script for `run` when no case is given.
    pub script: Option<PathBuf>,
    pub http: HttpConfig,
    pub progact: ProgActConfig,
    pub metrics: MetricConfig,
    pub out: Option<PathBuf>,
    pub trace: bool,
    pub seed: Option<u64>,
}

impl CliConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
    }
}
