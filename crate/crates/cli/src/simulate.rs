use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use clap::Args;
use halotouch::depthio::StreamWriter;
use halotouch::halocore::write_landmarks;
use halotouch::mpisim::scripts::Scenario;
use halotouch::mpisim::{render_trajectory, write_ground_truth, MaterialProfile};

use crate::config::Settings;
use crate::manifest::RunManifest;
use crate::{assets, CliResult, Internal};

pub const STREAM_FILE: &str = "stream.htds";
pub const LANDMARKS_FILE: &str = "landmarks.csv";
pub const TRUTH_FILE: &str = "truth.csv";
pub const SCENARIO_FILE: &str = "scenario.json";

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Scenario JSON (scene, script, optional targets).
    #[arg(long, conflicts_with = "builtin", required_unless_present = "builtin")]
    pub scenario: Option<PathBuf>,
    /// Bundled scenario: grid16, calibration, hover_blocks, pressure_blocks
    /// or typing.
    #[arg(long)]
    pub builtin: Option<String>,
    /// Replace the scenario's surface material with a preset.
    #[arg(long)]
    pub material: Option<String>,
}

/// Reads a scenario from a file or the bundled set.
pub fn load_scenario(path: Option<&Path>, builtin: Option<&str>) -> CliResult<(Scenario, String)> {
    let (text, source) = match (path, builtin) {
        (Some(p), _) => (fs::read_to_string(p).with_context(|| format!("reading scenario {}", p.display()))?, p.display().to_string()),
        (None, Some(name)) => (
            assets::scenario(name).ok_or_else(|| anyhow!("no bundled scenario named {name:?}"))?.to_string(),
            format!("builtin:{name}"),
        ),
        (None, None) => return Err(anyhow!("a scenario is required").into()),
    };
    let scenario = Scenario::from_json(&text).with_context(|| format!("invalid scenario {source}"))?;
    Ok((scenario, source))
}

pub fn simulate(settings: &Settings, a: &SimulateArgs, args: &[String]) -> CliResult<()> {
    let (mut scenario, source) = load_scenario(a.scenario.as_deref(), a.builtin.as_deref())?;
    if let Some(m) = &a.material {
        let preset = MaterialProfile::preset(m)
            .ok_or_else(|| anyhow!("unknown material {m:?}; presets: {}", MaterialProfile::PRESET_NAMES.join(", ")))?;
        scenario.scene.material = preset;
    }
    let fps = scenario.script.fps;
    let traj = render_trajectory(&scenario.scene, &scenario.script, fps, settings.seed)?;
    settings.ensure_out_dir()?;

    let stream_path = settings.out(STREAM_FILE);
    let count = u32::try_from(traj.frame_count()).map_err(|_| anyhow!("script is too long"))?;
    let sink = BufWriter::new(File::create(&stream_path).internal("creating the stream file")?);
    let mut writer = StreamWriter::new(sink, traj.header(), Some(count)).internal("starting the stream")?;
    let mut landmarks = Vec::new();
    let mut truth = Vec::with_capacity(count as usize);
    for f in traj {
        let f = f?;
        writer.write_frame(&f.frame).internal("writing a frame")?;
        landmarks.extend(f.landmarks);
        truth.push(f.truth);
    }
    let (_, bytes) = writer.finish().internal("finishing the stream")?;

    let lm_path = settings.out(LANDMARKS_FILE);
    write_landmarks(BufWriter::new(File::create(&lm_path).internal("creating landmarks")?), &landmarks).internal("writing landmarks")?;
    let truth_path = settings.out(TRUTH_FILE);
    write_ground_truth(BufWriter::new(File::create(&truth_path).internal("creating ground truth")?), &truth)
        .internal("writing ground truth")?;
    let scenario_path = settings.out(SCENARIO_FILE);
    fs::write(&scenario_path, scenario.to_json() + "\n").internal("writing the scenario")?;

    let mut m = RunManifest::new(settings, "simulate", args);
    m.inputs.insert("scenario".into(), source);
    m.output("stream", &stream_path).output("landmarks", &lm_path).output("truth", &truth_path).output("scenario", &scenario_path);
    m.details = serde_json::json!({
        "frames": count,
        "stream_bytes": bytes,
        "landmark_frames": landmarks.len(),
        "material": scenario.scene.material.name,
        "fps": fps,
    });
    m.write(settings)?;
    println!("simulated {count} frames ({} with landmarks) into {}", landmarks.len(), settings.out_dir.display());
    Ok(())
}
