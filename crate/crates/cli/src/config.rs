use std::fs;
use std::path::PathBuf;

use anyhow::Context;
use halotouch::gbrt::GbrtConfig;
use halotouch::pipeline::PipelineConfig;
use serde::{Deserialize, Serialize};

use crate::{Cli, CliResult};

/// Boosting settings as they appear in a config file; unset fields keep the
/// library defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GbrtSection {
    pub learning_rate: Option<f64>,
    pub n_iterations: Option<u32>,
    pub max_leaf_nodes: Option<u32>,
    pub min_samples_leaf: Option<u32>,
    pub max_bins: Option<u16>,
    pub validation_fraction: Option<f64>,
}

impl GbrtSection {
    pub fn apply(&self, mut c: GbrtConfig) -> GbrtConfig {
        c.learning_rate = self.learning_rate.unwrap_or(c.learning_rate);
        c.n_iterations = self.n_iterations.unwrap_or(c.n_iterations);
        c.max_leaf_nodes = self.max_leaf_nodes.unwrap_or(c.max_leaf_nodes);
        c.min_samples_leaf = self.min_samples_leaf.unwrap_or(c.min_samples_leaf);
        c.max_bins = self.max_bins.unwrap_or(c.max_bins);
        c.validation_fraction = self.validation_fraction.unwrap_or(c.validation_fraction);
        c
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigFile {
    pub seed: Option<u64>,
    pub pipeline: Option<PipelineConfig>,
    pub gbrt: GbrtSection,
    pub fine_tune_iterations: Option<u32>,
    pub pairing_window_ms: Option<f64>,
    pub characterize_seeds: Option<u64>,
}

/// Global flags merged over the config file merged over defaults.
#[derive(Debug, Clone)]
pub struct Settings {
    pub seed: u64,
    pub out_dir: PathBuf,
    pub config_path: Option<PathBuf>,
    pub file: ConfigFile,
}

impl Settings {
    pub fn resolve(cli: &Cli) -> CliResult<Self> {
        let file = match &cli.config {
            Some(p) => {
                let text = fs::read_to_string(p).with_context(|| format!("reading config {}", p.display()))?;
                serde_json::from_str(&text).with_context(|| format!("parsing config {}", p.display()))?
            }
            None => ConfigFile::default(),
        };
        Ok(Self { seed: cli.seed.or(file.seed).unwrap_or(0), out_dir: cli.out_dir.clone(), config_path: cli.config.clone(), file })
    }

    pub fn pipeline(&self) -> PipelineConfig {
        self.file.pipeline.unwrap_or_default()
    }

    pub fn gbrt(&self) -> GbrtConfig {
        let mut c = self.file.gbrt.apply(GbrtConfig::default());
        c.seed = self.seed;
        c
    }

    pub fn out(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }

    pub fn ensure_out_dir(&self) -> CliResult<()> {
        use crate::Internal;
        fs::create_dir_all(&self.out_dir).internal("creating the output directory")
    }

    /// The config file content, for the manifest.
    pub fn overrides(&self) -> serde_json::Value {
        serde_json::to_value(&self.file).unwrap_or(serde_json::Value::Null)
    }
}
