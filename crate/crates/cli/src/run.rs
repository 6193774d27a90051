use std::fs::{self, File};
use std::io::BufWriter;
use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{mpsc, Arc};
use std::thread;

use anyhow::{anyhow, Context};
use clap::Args;
use halotouch::calib::CalibrationProfile;
use halotouch::detect::{write_events, write_trace, EventKind};
use halotouch::geometry::CameraModel;
use halotouch::pipeline::Pipeline;

use crate::calibrate::{load_landmarks, open_stream, HandArg};
use crate::config::Settings;
use crate::manifest::RunManifest;
use crate::{CliResult, Failure, Internal};

pub const EVENTS_FILE: &str = "events.csv";
pub const TRACE_FILE: &str = "trace.csv";

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub stream: PathBuf,
    #[arg(long)]
    pub landmarks: PathBuf,
    /// Directory holding the calibration profile.
    #[arg(long)]
    pub profile: PathBuf,
    /// Use the per-hand profile when one exists.
    #[arg(long, value_enum)]
    pub hand: Option<HandArg>,
    /// Surface the stream was recorded on; a warning is printed when it
    /// differs from the profile's.
    #[arg(long)]
    pub material: Option<String>,
    /// Frames the reader may run ahead of detection.
    #[arg(long, default_value_t = 8)]
    pub queue: usize,
}

pub fn run(settings: &Settings, a: &RunArgs, args: &[String]) -> CliResult<()> {
    if a.queue == 0 {
        return Err(anyhow!("--queue must be at least 1").into());
    }
    let profile = match a.hand {
        Some(h) => CalibrationProfile::load_for_hand(&a.profile, h.into()),
        None => CalibrationProfile::load(&a.profile),
    }
    .with_context(|| format!("loading profile from {}", a.profile.display()))?;
    let mut warnings = Vec::new();
    if let Some(m) = &a.material {
        if *m != profile.material {
            let w = format!("profile was calibrated on {:?} but the stream is labelled {m:?}", profile.material);
            eprintln!("warning: {w}");
            warnings.push(w);
        }
    }
    let reader = open_stream(&a.stream)?;
    let header = *reader.header();
    let camera = CameraModel::new(header.width, header.height, header.camera_pose);
    let landmarks = load_landmarks(&a.landmarks)?;
    let mut pipeline = Pipeline::new(profile, camera, settings.pipeline())?;

    // the reader runs ahead on its own thread; detection consumes in order
    let (tx, rx) = mpsc::sync_channel(a.queue);
    let in_flight = Arc::new(AtomicUsize::new(0));
    let counter = Arc::clone(&in_flight);
    let producer = thread::spawn(move || {
        for item in reader {
            let stop = item.is_err();
            counter.fetch_add(1, Ordering::SeqCst);
            if tx.send(item).is_err() || stop {
                break;
            }
        }
    });

    let mut events = Vec::new();
    let mut trace = Vec::new();
    let mut notes = Vec::new();
    let mut read_error = None;
    let (mut received, mut max_in_flight, mut sum_in_flight) = (0usize, 0usize, 0usize);
    let mut lm = landmarks.iter().peekable();
    for item in rx {
        let depth = in_flight.fetch_sub(1, Ordering::SeqCst);
        received += 1;
        max_in_flight = max_in_flight.max(depth);
        sum_in_flight += depth;
        let frame = match item {
            Ok(f) => f,
            Err(e) => {
                read_error = Some(e);
                break;
            }
        };
        while lm.peek().is_some_and(|l| l.frame_index < frame.frame_index) {
            lm.next();
        }
        let here = lm.peek().copied().filter(|l| l.frame_index == frame.frame_index);
        match pipeline.process(&frame, here) {
            Ok(o) => {
                events.extend(o.events);
                trace.push(o.trace);
            }
            Err(e) => notes.push(format!("frame {}: {e}", frame.frame_index)),
        }
    }
    producer.join().map_err(|_| Failure::Internal(anyhow!("stream reader thread panicked")))?;
    let frames = pipeline.frames_processed();
    notes.extend(pipeline.finish());

    settings.ensure_out_dir()?;
    let events_path = settings.out(EVENTS_FILE);
    write_events(BufWriter::new(File::create(&events_path).internal("creating events")?), &events).internal("writing events")?;
    let trace_path = settings.out(TRACE_FILE);
    write_trace(BufWriter::new(File::create(&trace_path).internal("creating trace")?), &trace).internal("writing trace")?;
    let notes_path = settings.out("run_notes.txt");
    let mut note_text: String = warnings.iter().chain(&notes).map(|n| format!("{n}\n")).collect();
    if let Some(e) = &read_error {
        note_text += &format!("stream ended early: {e}\n");
    }
    fs::write(&notes_path, note_text).internal("writing run notes")?;

    let count = |k: EventKind| events.iter().filter(|e| e.kind == k).count();
    let keys: Vec<f64> = events.iter().filter(|e| e.kind == EventKind::Key).map(|e| e.latency_frames as f64).collect();
    let mut m = RunManifest::new(settings, "run", args);
    m.input("stream", &a.stream).input("landmarks", &a.landmarks).input("profile", &a.profile);
    m.output("events", &events_path).output("trace", &trace_path).output("notes", &notes_path);
    m.details = serde_json::json!({
        "frames": frames,
        "complete": read_error.is_none(),
        "downs": count(EventKind::Down),
        "ups": count(EventKind::Up),
        "keys": count(EventKind::Key),
        "latency": {
            "queue_capacity": a.queue,
            "max_frames_in_flight": max_in_flight,
            "mean_frames_in_flight": if received > 0 { sum_in_flight as f64 / received as f64 } else { 0.0 },
            "mean_key_latency_frames": if keys.is_empty() { 0.0 } else { keys.iter().sum::<f64>() / keys.len() as f64 },
        },
        "warnings": warnings,
    });
    m.write(settings)?;
    println!(
        "{frames} frames: {} downs, {} ups, {} keys -> {}",
        count(EventKind::Down),
        count(EventKind::Up),
        count(EventKind::Key),
        events_path.display()
    );
    match read_error {
        Some(e) => Err(anyhow!("stream {} ended early after {frames} frames: {e}", a.stream.display()).into()),
        None => Ok(()),
    }
}
