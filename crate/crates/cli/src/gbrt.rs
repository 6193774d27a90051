use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use clap::{Args, Subcommand};
use halotouch::calib::{train_pilot_corrector, PilotConfig};
use halotouch::gbrt::{fit, Dataset};

use crate::calibrate::load_model;
use crate::config::Settings;
use crate::manifest::RunManifest;
use crate::{CliResult, Internal};

#[derive(Debug, Subcommand)]
pub enum GbrtCommand {
    /// Fit a model on a CSV table.
    Fit(FitArgs),
    /// Append predictions to a CSV table.
    Predict(PredictArgs),
    /// Train the generic signal corrector on simulated pilot sweeps.
    Pilot,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// CSV with a header row; every column but the target is a feature.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub target: String,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub iterations: Option<u32>,
    #[arg(long)]
    pub max_leaves: Option<u32>,
    #[arg(long)]
    pub min_samples_leaf: Option<u32>,
    #[arg(long)]
    pub validation_fraction: Option<f64>,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// CSV holding at least the model's feature columns.
    #[arg(long)]
    pub data: PathBuf,
}

struct Table {
    headers: Vec<String>,
    rows: Vec<Vec<f64>>,
}

fn read_table(path: &Path) -> CliResult<Table> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("opening {}", path.display()))?;
    let headers: Vec<String> = r.headers()?.iter().map(String::from).collect();
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let row = rec
            .iter()
            .map(|v| v.trim().parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|_| anyhow!("{} row {}: non-numeric value", path.display(), i + 1))?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(anyhow!("{} has no rows", path.display()).into());
    }
    Ok(Table { headers, rows })
}

pub fn gbrt(settings: &Settings, cmd: &GbrtCommand, args: &[String]) -> CliResult<()> {
    settings.ensure_out_dir()?;
    match cmd {
        GbrtCommand::Fit(a) => {
            let t = read_table(&a.data)?;
            let target = t.headers.iter().position(|h| *h == a.target).ok_or_else(|| anyhow!("no column named {:?}", a.target))?;
            let names: Vec<String> = t.headers.iter().enumerate().filter(|(i, _)| *i != target).map(|(_, h)| h.clone()).collect();
            let features: Vec<Vec<f64>> =
                t.rows.iter().map(|r| r.iter().enumerate().filter(|(i, _)| *i != target).map(|(_, v)| *v).collect()).collect();
            let targets = t.rows.iter().map(|r| r[target]).collect();
            let data = Dataset::from_rows(&features, targets)?;
            let mut cfg = settings.gbrt();
            cfg.learning_rate = a.learning_rate.unwrap_or(cfg.learning_rate);
            cfg.n_iterations = a.iterations.unwrap_or(cfg.n_iterations);
            cfg.max_leaf_nodes = a.max_leaves.unwrap_or(cfg.max_leaf_nodes);
            cfg.min_samples_leaf = a.min_samples_leaf.unwrap_or(cfg.min_samples_leaf);
            cfg.validation_fraction = a.validation_fraction.unwrap_or(cfg.validation_fraction);
            let (model, log) = fit(&data, &cfg)?;
            let model = model.with_feature_names(names)?;
            let model_path = settings.out("model.htgb");
            fs::write(&model_path, model.to_bytes()).internal("writing the model")?;
            let mut m = RunManifest::new(settings, "gbrt fit", args);
            m.input("data", &a.data).output("model", &model_path);
            m.details = serde_json::json!({
                "trees": model.trees().len(),
                "train_mse": log.train_mse.last(),
                "validation_mse": log.validation_mse.last(),
            });
            m.write(settings)?;
            println!("fitted {} trees -> {}", model.trees().len(), model_path.display());
            Ok(())
        }
        GbrtCommand::Predict(a) => {
            let model = load_model(&a.model)?;
            let t = read_table(&a.data)?;
            let cols: Vec<usize> = if model.feature_names().iter().all(|n| t.headers.contains(n)) && !model.feature_names().is_empty() {
                model.feature_names().iter().map(|n| t.headers.iter().position(|h| h == n).unwrap()).collect()
            } else if t.headers.len() == model.n_features() {
                (0..t.headers.len()).collect()
            } else {
                return Err(anyhow!("table columns {:?} do not supply the model's features {:?}", t.headers, model.feature_names()).into());
            };
            let out_path = settings.out("predictions.csv");
            let mut w = csv::Writer::from_path(&out_path).internal("creating predictions")?;
            let mut header = t.headers.clone();
            header.push("prediction".into());
            w.write_record(&header).internal("writing predictions")?;
            for row in &t.rows {
                let x: Vec<f64> = cols.iter().map(|&c| row[c]).collect();
                let p = model.predict(&x)?;
                let mut rec: Vec<String> = row.iter().map(|v| v.to_string()).collect();
                rec.push(p.to_string());
                w.write_record(&rec).internal("writing predictions")?;
            }
            w.flush().internal("writing predictions")?;
            let mut m = RunManifest::new(settings, "gbrt predict", args);
            m.input("model", &a.model).input("data", &a.data).output("predictions", &out_path);
            m.details = serde_json::json!({ "rows": t.rows.len() });
            m.write(settings)?;
            println!("{} predictions -> {}", t.rows.len(), out_path.display());
            Ok(())
        }
        GbrtCommand::Pilot => {
            let cfg = PilotConfig { seed: settings.seed, ..PilotConfig::default() };
            let (model, log) = train_pilot_corrector(&cfg, &settings.gbrt()).internal("training the pilot corrector")?;
            let path = settings.out("pilot.htgb");
            fs::write(&path, model.to_bytes()).internal("writing the model")?;
            let r2 = match (log.validation_mse.first(), log.validation_mse.last()) {
                (Some(first), Some(last)) if *first > 0.0 => Some(1.0 - last / first),
                _ => None,
            };
            let mut m = RunManifest::new(settings, "gbrt pilot", args);
            m.output("model", &path);
            m.details = serde_json::json!({ "trees": model.trees().len(), "validation_r2": r2 });
            m.write(settings)?;
            println!("pilot corrector ({} trees, validation R2 {:?}) -> {}", model.trees().len(), r2, path.display());
            Ok(())
        }
    }
}
