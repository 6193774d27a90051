use serde::{Deserialize, Serialize};

use crate::calib::CalibrationProfile;
use crate::depthio::{BackgroundBuilder, DepthFrame, BACKGROUND_FRAMES};
use crate::detect::{
    DebounceSignal, Debouncer, Detector, DetectorCalibration, DetectorConfig, EventKind, Observation, TouchEvent,
    TouchState, TraceRecord,
};
use crate::geometry::CameraModel;
use crate::halocore::{ExtractConfig, LandmarkFrame};

use super::{Measurer, PipelineError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub extract: ExtractConfig,
    pub detector: DetectorConfig,
    pub background_frames: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self { extract: ExtractConfig::default(), detector: DetectorConfig::default(), background_frames: BACKGROUND_FRAMES }
    }
}

/// Events raised by one frame (down/up from the detector, keys from the
/// debouncer) and its trace record.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameOutput {
    pub events: Vec<TouchEvent>,
    pub trace: TraceRecord,
}

/// Streaming touch pipeline for one camera and one calibrated user.
pub struct Pipeline {
    profile: CalibrationProfile,
    camera: CameraModel,
    cfg: PipelineConfig,
    background: Option<BackgroundBuilder>,
    measurer: Option<Measurer>,
    detector: Detector,
    debouncer: Debouncer,
    frames: u64,
}

impl Pipeline {
    pub fn new(profile: CalibrationProfile, camera: CameraModel, cfg: PipelineConfig) -> Result<Self> {
        let detector = Detector::new(DetectorCalibration::from(&profile), cfg.detector)?;
        let background = Some(BackgroundBuilder::new(camera.width, camera.height));
        Ok(Self { profile, camera, cfg, background, measurer: None, detector, debouncer: Debouncer::new(), frames: 0 })
    }

    pub fn profile(&self) -> &CalibrationProfile {
        &self.profile
    }

    pub fn frames_processed(&self) -> u64 {
        self.frames
    }

    fn observe(&self, m: &Measurer, frame: &DepthFrame, lm: Option<&LandmarkFrame>) -> Observation {
        let mut obs =
            Observation { frame_index: frame.frame_index, timestamp_us: frame.timestamp_us, ..Default::default() };
        let Some(lm) = lm else {
            obs.note = Some("no landmarks".into());
            return obs;
        };
        match m.measure(frame, lm) {
            Ok(meas) => {
                obs.x = meas.sample.x;
                obs.y = meas.sample.y;
                obs.line_count = Some(meas.line_count);
                match self.profile.correct(&meas.sample) {
                    Ok(c) => obs.corrected = Some(c),
                    Err(e) => obs.note = Some(e.to_string()),
                }
            }
            Err(e) => obs.note = Some(e.to_string()),
        }
        obs
    }

    /// Processes one frame. Only a frame of the wrong size is an error;
    /// anything else that goes wrong is flagged in the trace.
    pub fn process(&mut self, frame: &DepthFrame, lm: Option<&LandmarkFrame>) -> Result<FrameOutput> {
        if frame.width != self.camera.width || frame.height != self.camera.height {
            return Err(PipelineError::FrameSize {
                frame: frame.frame_index,
                width: frame.width,
                height: frame.height,
            });
        }
        self.frames += 1;
        if let Some(bg) = self.background.as_mut() {
            bg.push(frame)?;
            if bg.frames() >= self.cfg.background_frames {
                let model = self.background.take().unwrap().finish()?;
                self.measurer = Some(Measurer::new(model, self.camera.clone(), self.cfg.extract));
            }
            return Ok(FrameOutput { events: Vec::new(), trace: background_record(frame) });
        }
        let m = self.measurer.as_ref().expect("background finished");
        let obs = self.observe(m, frame, lm);
        let (event, trace) = self.detector.step(&obs);
        let mut events = Vec::new();
        let signal = match event.map(|e| e.kind) {
            Some(EventKind::Down) => DebounceSignal::Down,
            Some(EventKind::Up) => DebounceSignal::Up,
            _ if self.detector.state().in_contact() => DebounceSignal::Held,
            _ => DebounceSignal::Clear,
        };
        let carrier = event.unwrap_or(TouchEvent {
            kind: EventKind::Down,
            frame_index: frame.frame_index,
            timestamp_us: frame.timestamp_us,
            x: obs.x,
            y: obs.y,
            pressure: 0.0,
            latency_frames: 0,
        });
        // a frame the detector could not read says nothing about contact
        let key = if obs.corrected.is_some() || event.is_some() { self.debouncer.feed(signal, &carrier) } else { None };
        events.extend(event);
        events.extend(key);
        Ok(FrameOutput { events, trace })
    }

    /// Closes the stream; returns the debouncer's notes.
    pub fn finish(mut self) -> Vec<String> {
        self.debouncer.finish();
        self.debouncer.notes().to_vec()
    }
}

fn background_record(frame: &DepthFrame) -> TraceRecord {
    TraceRecord {
        frame: frame.frame_index,
        timestamp_us: frame.timestamp_us,
        corrected: None,
        value: None,
        baseline: None,
        derivative: None,
        state: TouchState::Idle,
        hover_mm: None,
        pressure: 0.0,
        line_count: None,
        path: String::new(),
        flag: "background".into(),
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunOutput {
    pub events: Vec<TouchEvent>,
    pub trace: Vec<TraceRecord>,
    pub notes: Vec<String>,
}

impl RunOutput {
    pub fn of_kind(&self, kind: EventKind) -> impl Iterator<Item = &TouchEvent> {
        self.events.iter().filter(move |e| e.kind == kind)
    }
}

/// Runs a whole stream. `landmarks` must be sorted by frame index; frames
/// without an entry are treated as frames where tracking lost the hand.
pub fn run_stream<I>(
    frames: I,
    landmarks: &[LandmarkFrame],
    profile: CalibrationProfile,
    camera: CameraModel,
    cfg: PipelineConfig,
) -> Result<RunOutput>
where
    I: IntoIterator<Item = DepthFrame>,
{
    let mut p = Pipeline::new(profile, camera, cfg)?;
    let mut out = RunOutput::default();
    let mut lm = landmarks.iter().peekable();
    for frame in frames {
        while lm.peek().is_some_and(|l| l.frame_index < frame.frame_index) {
            lm.next();
        }
        let here = lm.peek().copied().filter(|l| l.frame_index == frame.frame_index);
        let o = p.process(&frame, here)?;
        out.events.extend(o.events);
        out.trace.push(o.trace);
    }
    out.notes = p.finish();
    Ok(out)
}
