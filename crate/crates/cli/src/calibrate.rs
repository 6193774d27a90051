use std::fs::{self, File};
use std::io::BufReader;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use clap::{Args, ValueEnum};
use halotouch::calib::{run_calibration, train_pilot_corrector, CalibrationOptions, PilotConfig, MODEL_FILE, PROFILE_FILE};
use halotouch::depthio::StreamReader;
use halotouch::gbrt::GbrtModel;
use halotouch::geometry::CameraModel;
use halotouch::halocore::{read_landmarks, Hand, LandmarkFrame};

use crate::config::Settings;
use crate::manifest::RunManifest;
use crate::simulate::load_scenario;
use crate::{CliResult, Internal};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum HandArg {
    Left,
    Right,
}

impl From<HandArg> for Hand {
    fn from(h: HandArg) -> Self {
        match h {
            HandArg::Left => Hand::Left,
            HandArg::Right => Hand::Right,
        }
    }
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    /// Depth stream of the calibration session.
    #[arg(long)]
    pub stream: PathBuf,
    #[arg(long)]
    pub landmarks: PathBuf,
    /// Scenario whose labelled segments mark the hover, subtle, touch,
    /// pressure and sweep windows.
    #[arg(long, conflicts_with = "builtin", required_unless_present = "builtin")]
    pub scenario: Option<PathBuf>,
    #[arg(long)]
    pub builtin: Option<String>,
    /// Generic corrector to start from; trained from simulated pilots when
    /// absent.
    #[arg(long)]
    pub pilot: Option<PathBuf>,
    #[arg(long, default_value = "user")]
    pub user: String,
    /// Surface label stored in the profile (defaults to the scenario's).
    #[arg(long)]
    pub material: Option<String>,
    #[arg(long, default_value = "1970-01-01T00:00:00Z")]
    pub created_at: String,
    /// Save as a per-hand profile.
    #[arg(long, value_enum)]
    pub hand: Option<HandArg>,
}

pub fn open_stream(path: &Path) -> CliResult<StreamReader<BufReader<File>>> {
    let f = File::open(path).with_context(|| format!("opening stream {}", path.display()))?;
    Ok(StreamReader::new(BufReader::new(f)).with_context(|| format!("reading stream header of {}", path.display()))?)
}

pub fn load_landmarks(path: &Path) -> CliResult<Vec<LandmarkFrame>> {
    let f = File::open(path).with_context(|| format!("opening landmarks {}", path.display()))?;
    Ok(read_landmarks(BufReader::new(f)).with_context(|| format!("reading landmarks {}", path.display()))?)
}

pub fn load_model(path: &Path) -> CliResult<GbrtModel> {
    let bytes = fs::read(path).with_context(|| format!("reading model {}", path.display()))?;
    Ok(GbrtModel::from_bytes(&bytes).with_context(|| format!("decoding model {}", path.display()))?)
}

pub fn calibrate(settings: &Settings, a: &CalibrateArgs, args: &[String]) -> CliResult<()> {
    let (scenario, source) = load_scenario(a.scenario.as_deref(), a.builtin.as_deref())?;
    let reader = open_stream(&a.stream)?;
    let header = *reader.header();
    let camera = CameraModel::new(header.width, header.height, header.camera_pose);
    let landmarks = load_landmarks(&a.landmarks)?;
    let pilot = match &a.pilot {
        Some(p) => load_model(p)?,
        None => {
            let cfg = PilotConfig { seed: settings.seed, ..PilotConfig::default() };
            train_pilot_corrector(&cfg, &settings.gbrt()).internal("training the pilot corrector")?.0
        }
    };
    let mut opts = CalibrationOptions {
        user_id: a.user.clone(),
        material: a.material.clone().unwrap_or_else(|| scenario.scene.material.name.clone()),
        created_at: a.created_at.clone(),
        fps: scenario.script.fps,
        extract: settings.pipeline().extract,
        ..CalibrationOptions::default()
    };
    if let Some(n) = settings.file.fine_tune_iterations {
        opts.fine_tune_iterations = n;
    }
    let (profile, report) = run_calibration(reader, &landmarks, &camera, &scenario.script.segments, &pilot, &opts)
        .map_err(|e| anyhow!("calibration failed: {e}"))?;

    settings.ensure_out_dir()?;
    match a.hand {
        Some(h) => profile.save_for_hand(&settings.out_dir, h.into()),
        None => profile.save(&settings.out_dir),
    }
    .internal("saving the profile")?;

    let anchors = &profile.state_anchors;
    let mut text = format!(
        "user {} on {}\nanchors: hover {:.1}  subtle {:.1}  touch {:.1}  pressure {:.1}\nreference strength {:.1} at pose {:?}\nfine-tuned: {} ({} sweep samples)\n",
        profile.user_id,
        profile.material,
        anchors.hover,
        anchors.subtle,
        anchors.touch,
        anchors.pressure,
        profile.reference_strength,
        profile.reference_pose,
        profile.fine_tuned,
        report.sweep_samples
    );
    for (state, w) in &report.windows {
        text += &format!("{state:?} window: {} frames, {} without landmarks, {} rejected\n", w.frames, w.missing_landmarks, w.rejected);
    }
    for n in &report.notes {
        text += &format!("note: {n}\n");
    }
    let report_path = settings.out("calibration.txt");
    fs::write(&report_path, &text).internal("writing the calibration report")?;
    print!("{text}");

    let (profile_name, model_name) = match a.hand {
        Some(h) => {
            let tag = if h == HandArg::Left { "left" } else { "right" };
            (format!("profile.{tag}.json"), format!("corrector.{tag}.htgb"))
        }
        None => (PROFILE_FILE.to_string(), MODEL_FILE.to_string()),
    };
    let mut m = RunManifest::new(settings, "calibrate", args);
    m.input("stream", &a.stream).input("landmarks", &a.landmarks);
    m.inputs.insert("scenario".into(), source);
    if let Some(p) = &a.pilot {
        m.input("pilot", p);
    }
    m.output("profile", &settings.out(&profile_name)).output("corrector", &settings.out(&model_name)).output("report", &report_path);
    m.details = serde_json::json!({
        "anchors": [anchors.hover, anchors.subtle, anchors.touch, anchors.pressure],
        "reference_strength": profile.reference_strength,
        "fine_tuned": profile.fine_tuned,
        "sweep_samples": report.sweep_samples,
    });
    m.write(settings)
}
