use std::fs::{self, File};
use std::io::BufReader;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use clap::{Args, Subcommand};
use halotouch::detect::{read_events, read_trace, EventKind};
use halotouch::evalkit::{
    block_series, characterization_report, hover_mae, load_phrases, match_events, pressure_mae, read_characterization_csv,
    read_keystrokes, spatial_accuracy, typing_metrics, BlockQuantity, CharacterizationPoint, EventPoint,
    PropertyCheck, TypingTrial, DEFAULT_PAIRING_WINDOW_MS,
};
use halotouch::mpisim::{characterize as sweep, contact_intervals, read_ground_truth, write_characterization_csv, MaterialProfile, SceneSpec, Sweep};
use serde::Serialize;

use crate::config::Settings;
use crate::manifest::RunManifest;
use crate::simulate::load_scenario;
use crate::{CliResult, Internal};

#[derive(Debug, Subcommand)]
pub enum EvalCommand {
    /// Touch-down precision, recall and F1 against ground-truth contacts.
    Touch(TouchArgs),
    /// Spatial error after removing the global offset.
    Spatial(TouchArgs),
    /// Hover error over labelled hover blocks.
    Hover(BlockArgs),
    /// Pressure error over labelled pressure blocks.
    Pressure(BlockArgs),
    /// Speed and error rates from a keystroke log.
    Typing(TypingArgs),
    /// Envelope checks on a characterization table.
    Characterize(CharacterizeEvalArgs),
}

#[derive(Debug, Args)]
pub struct TouchArgs {
    #[arg(long)]
    pub events: PathBuf,
    /// Ground-truth CSV from `simulate`.
    #[arg(long)]
    pub truth: PathBuf,
    /// Pairing window, ms.
    #[arg(long)]
    pub window: Option<f64>,
    /// Frame rate the event log was recorded at.
    #[arg(long, default_value_t = 30.0)]
    pub fps: f64,
}

#[derive(Debug, Args)]
pub struct BlockArgs {
    #[arg(long)]
    pub trace: PathBuf,
    /// Scenario whose `block` segments carry the targets.
    #[arg(long, conflicts_with = "builtin", required_unless_present = "builtin")]
    pub scenario: Option<PathBuf>,
    #[arg(long)]
    pub builtin: Option<String>,
}

#[derive(Debug, Args)]
pub struct TypingArgs {
    /// `sentence,timestamp_ms,key` keystroke log.
    #[arg(long)]
    pub log: PathBuf,
    /// Reference phrases, one per line, in sentence order.
    #[arg(long)]
    pub references: PathBuf,
}

#[derive(Debug, Args)]
pub struct CharacterizeEvalArgs {
    /// `param,state,strength_norm` table.
    #[arg(long)]
    pub csv: PathBuf,
}

#[derive(Debug, Args)]
pub struct CharacterizeArgs {
    /// Noise seeds averaged per point.
    #[arg(long)]
    pub seeds: Option<u64>,
    #[arg(long)]
    pub material: Option<String>,
    /// Scene to sweep (frame size, material, gains); defaults to a 256x256
    /// scene.
    #[arg(long)]
    pub scenario: Option<PathBuf>,
}

fn open(path: &Path, what: &str) -> CliResult<BufReader<File>> {
    Ok(BufReader::new(File::open(path).with_context(|| format!("opening {what} {}", path.display()))?))
}

fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path).internal("creating a report")?;
    for r in rows {
        w.serialize(r).internal("writing a report row")?;
    }
    w.flush().internal("writing a report")
}

fn finish(settings: &Settings, m: &mut RunManifest, stem: &str, text: String) -> CliResult<()> {
    let path = settings.out(&format!("{stem}.txt"));
    fs::write(&path, format!("{text}\n")).internal("writing the summary")?;
    m.output("summary", &path);
    m.write(settings)?;
    println!("{text}");
    Ok(())
}

fn touch_inputs(a: &TouchArgs) -> CliResult<(Vec<EventPoint>, Vec<EventPoint>)> {
    let events = read_events(open(&a.events, "events")?, a.fps).with_context(|| format!("reading {}", a.events.display()))?;
    let truth = read_ground_truth(open(&a.truth, "ground truth")?).with_context(|| format!("reading {}", a.truth.display()))?;
    let detected = events.iter().filter(|e| e.kind == EventKind::Down).map(EventPoint::from).collect();
    let truth = contact_intervals(&truth).iter().map(EventPoint::from).collect();
    Ok((detected, truth))
}

pub fn eval(settings: &Settings, cmd: &EvalCommand, args: &[String]) -> CliResult<()> {
    settings.ensure_out_dir()?;
    match cmd {
        EvalCommand::Touch(a) => {
            let (detected, truth) = touch_inputs(a)?;
            let window = a.window.or(settings.file.pairing_window_ms).unwrap_or(DEFAULT_PAIRING_WINDOW_MS);
            let r = match_events(&detected, &truth, window);
            let mut m = RunManifest::new(settings, "eval touch", args);
            m.input("events", &a.events).input("truth", &a.truth);
            let csv_path = settings.out("touch.csv");
            write_rows(&csv_path, std::slice::from_ref(&r))?;
            m.output("report", &csv_path);
            m.details = serde_json::to_value(&r).unwrap_or_default();
            finish(settings, &mut m, "touch", r.to_string())
        }
        EvalCommand::Spatial(a) => {
            let (detected, truth) = touch_inputs(a)?;
            let window = a.window.or(settings.file.pairing_window_ms).unwrap_or(DEFAULT_PAIRING_WINDOW_MS);
            let matched = match_events(&detected, &truth, window);
            let r = spatial_accuracy(&matched.position_pairs(&detected, &truth))?;
            let mut m = RunManifest::new(settings, "eval spatial", args);
            m.input("events", &a.events).input("truth", &a.truth);
            #[derive(Serialize)]
            struct Row {
                target_x: f64,
                target_y: f64,
                center_x: f64,
                center_y: f64,
                major: f64,
                minor: f64,
                angle_deg: f64,
                points: usize,
            }
            let rows: Vec<Row> = r
                .ellipses
                .iter()
                .map(|e| Row {
                    target_x: e.target[0],
                    target_y: e.target[1],
                    center_x: e.center[0],
                    center_y: e.center[1],
                    major: e.axes[0],
                    minor: e.axes[1],
                    angle_deg: e.angle_deg,
                    points: e.points,
                })
                .collect();
            let csv_path = settings.out("spatial_ellipses.csv");
            write_rows(&csv_path, &rows)?;
            m.output("ellipses", &csv_path);
            m.details = serde_json::json!({
                "global_offset": r.global_offset,
                "mean_euclidean_error": r.mean_euclidean_error,
                "sd": r.sd,
                "outliers_removed": r.outliers_removed,
                "points_used": r.points_used,
            });
            finish(settings, &mut m, "spatial", r.to_string())
        }
        EvalCommand::Hover(a) | EvalCommand::Pressure(a) => {
            let quantity = if matches!(cmd, EvalCommand::Hover(_)) { BlockQuantity::Hover } else { BlockQuantity::Pressure };
            let name = if quantity == BlockQuantity::Hover { "hover" } else { "pressure" };
            let (scenario, source) = load_scenario(a.scenario.as_deref(), a.builtin.as_deref())?;
            let trace = read_trace(open(&a.trace, "trace")?).with_context(|| format!("reading {}", a.trace.display()))?;
            let series = block_series(&trace, &scenario.script.segments, scenario.script.fps, quantity);
            let r = match quantity {
                BlockQuantity::Hover => hover_mae(&series.predicted, &series.truth)?,
                BlockQuantity::Pressure => pressure_mae(&series.predicted, &series.truth)?,
            };
            let mut m = RunManifest::new(settings, &format!("eval {name}"), args);
            m.input("trace", &a.trace);
            m.inputs.insert("scenario".into(), source);
            let csv_path = settings.out(&format!("{name}.csv"));
            write_rows(&csv_path, &r.per_target)?;
            m.output("per_target", &csv_path);
            m.details = serde_json::json!({ "mae": r.mae, "unit": quantity.unit(), "samples": series.truth.len(), "missing": series.missing });
            let text = format!("{r}\n  {} block frames without an estimate", series.missing);
            finish(settings, &mut m, name, text)
        }
        EvalCommand::Typing(a) => {
            let logs = read_keystrokes(open(&a.log, "keystroke log")?).with_context(|| format!("reading {}", a.log.display()))?;
            let refs = load_phrases(&fs::read_to_string(&a.references).with_context(|| format!("reading {}", a.references.display()))?);
            if refs.len() != logs.len() {
                return Err(anyhow!("{} reference phrases for {} logged sentences", refs.len(), logs.len()).into());
            }
            let trials: Vec<TypingTrial> = refs.into_iter().zip(logs).map(|(r, k)| TypingTrial::from_keystrokes(r, k)).collect();
            let r = typing_metrics(&trials)?;
            let mut m = RunManifest::new(settings, "eval typing", args);
            m.input("log", &a.log).input("references", &a.references);
            let csv_path = settings.out("typing.csv");
            write_rows(&csv_path, &r.sentences)?;
            m.output("sentences", &csv_path);
            m.details = serde_json::json!({ "wpm": r.wpm, "accuracy": r.accuracy, "awpm": r.awpm, "uer": r.uer, "cer": r.cer });
            finish(settings, &mut m, "typing", r.to_string())
        }
        EvalCommand::Characterize(a) => {
            let points = read_characterization_csv(open(&a.csv, "characterization table")?)?;
            let checks = characterization_report(&points);
            let mut m = RunManifest::new(settings, "eval characterize", args);
            m.input("table", &a.csv);
            report_checks(settings, &mut m, &checks)
        }
    }
}

fn report_checks(settings: &Settings, m: &mut RunManifest, checks: &[PropertyCheck]) -> CliResult<()> {
    let csv_path = settings.out("characterization_report.csv");
    write_rows(&csv_path, checks)?;
    m.output("report", &csv_path);
    let passed = checks.iter().filter(|c| c.passed).count();
    m.details = serde_json::json!({ "passed": passed, "total": checks.len() });
    let text: Vec<String> = checks.iter().map(|c| c.to_string()).collect();
    finish(settings, m, "characterization_report", format!("{}\n{passed}/{} properties hold", text.join("\n"), checks.len()))
}

/// Runs the yaw, pitch and distance sweeps, writes the table and checks the
/// envelopes on it.
pub fn characterize(settings: &Settings, a: &CharacterizeArgs, args: &[String]) -> CliResult<()> {
    let mut scene = match &a.scenario {
        Some(p) => load_scenario(Some(p), None)?.0.scene,
        None => SceneSpec::default().with_size(256, 256),
    };
    if let Some(mat) = &a.material {
        scene.material = MaterialProfile::preset(mat).ok_or_else(|| anyhow!("unknown material {mat:?}"))?;
    }
    let seeds = a.seeds.or(settings.file.characterize_seeds).unwrap_or(20);
    let rows = sweep(&scene, &Sweep::defaults(), seeds)?;
    settings.ensure_out_dir()?;
    let table = settings.out("characterization.csv");
    write_characterization_csv(File::create(&table).internal("creating the table")?, &rows).internal("writing the table")?;
    let points: Vec<CharacterizationPoint> = rows.iter().map(CharacterizationPoint::from).collect();
    let mut m = RunManifest::new(settings, "characterize", args);
    if let Some(p) = &a.scenario {
        m.input("scenario", p);
    }
    m.output("table", &table);
    report_checks(settings, &mut m, &characterization_report(&points))
}
