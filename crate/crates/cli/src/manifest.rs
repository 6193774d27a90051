use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::config::Settings;
use crate::{CliResult, Internal};

/// Record of one invocation, written beside its outputs as
/// `<command>.manifest.json`.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub subcommand: String,
    pub args: Vec<String>,
    pub seed: u64,
    pub config: Option<String>,
    pub overrides: serde_json::Value,
    pub inputs: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, String>,
    pub details: serde_json::Value,
}

impl RunManifest {
    pub fn new(settings: &Settings, subcommand: &str, args: &[String]) -> Self {
        Self {
            tool: "halotouch",
            version: env!("CARGO_PKG_VERSION"),
            subcommand: subcommand.into(),
            args: args.to_vec(),
            seed: settings.seed,
            config: settings.config_path.as_ref().map(|p| p.display().to_string()),
            overrides: settings.overrides(),
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
            details: serde_json::Value::Null,
        }
    }

    pub fn input(&mut self, name: &str, path: &Path) -> &mut Self {
        self.inputs.insert(name.into(), path.display().to_string());
        self
    }

    pub fn output(&mut self, name: &str, path: &Path) -> &mut Self {
        self.outputs.insert(name.into(), path.display().to_string());
        self
    }

    pub fn write(&self, settings: &Settings) -> CliResult<()> {
        let path = settings.out(&format!("{}.manifest.json", self.subcommand.replace(' ', "-")));
        let text = serde_json::to_string_pretty(self).internal("serializing the manifest")?;
        fs::write(&path, text + "\n").internal("writing the manifest")
    }
}
