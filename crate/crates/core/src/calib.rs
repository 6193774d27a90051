//! Four-state calibration, sweep fine-tuning and the signal corrector.
//!
//! Raw halo strength depends on where the finger is and how it is held. The
//! corrector is a regressor from `[x, y, pitch, yaw]` to the strength a
//! touching finger produces there; dividing by its prediction and scaling
//! by the prediction at the calibration pose puts every frame on the scale
//! of the calibration anchors.

use std::fmt;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::depthio::{BackgroundBuilder, DepthFrame, BACKGROUND_FRAMES};
use crate::gbrt::{fit, Dataset, FineTuneMode, GbrtConfig, GbrtError, GbrtModel, TrainingLog};
use crate::geometry::CameraModel;
use crate::halocore::{ExtractConfig, Hand, HaloSample, LandmarkFrame, FEATURE_NAMES};
use crate::mpisim::scripts::{CALIBRATION_HOVER_MM, CALIBRATION_SUBTLE_MM};
use crate::mpisim::{sample_halo, FingerPose, MpisimError, Renderer, SceneSpec, Segment, SegmentKind, UserProfile};
use crate::pipeline::{Measurement, Measurer, PipelineError};

/// Shortest hold a state anchor is captured from.
pub const MIN_CAPTURE_FRAMES: usize = 30;
/// Largest accepted median absolute deviation, relative to the median.
pub const MAX_DISPERSION: f64 = 0.25;
/// Predictions below this fraction of the reference strength are treated
/// as poses the corrector knows nothing about.
pub const EPSILON_FRACTION: f64 = 0.01;
/// Below this finger pitch the halo is too weak to correct.
pub const MIN_PITCH_DEG: f64 = 15.0;
/// 20 s at 30 fps.
pub const MIN_SWEEP_SAMPLES: usize = 600;
pub const FINE_TUNE_ITERATIONS: u32 = 50;
pub const PROFILE_FILE: &str = "profile.json";
pub const MODEL_FILE: &str = "corrector.htgb";

#[derive(Debug, Error)]
pub enum CalibError {
    #[error("finger pitch {pitch:.1} deg is below {MIN_PITCH_DEG} deg")]
    LowPitch { pitch: f64 },
    #[error("corrector predicts {predicted:.3} at this pose, below the floor {floor:.3}")]
    DegeneratePose { predicted: f64, floor: f64 },
    #[error("{state} window has {frames} frames, need at least {MIN_CAPTURE_FRAMES}")]
    WindowTooShort { state: CalibrationState, frames: usize },
    #[error("{state} capture unstable: dispersion {dispersion:.3} of median {median:.3}")]
    UnstableCapture { state: CalibrationState, dispersion: f64, median: f64 },
    #[error("no {0} segment in the calibration script")]
    MissingSegment(CalibrationState),
    #[error("sweep has {0} samples, need at least {MIN_SWEEP_SAMPLES}")]
    SweepTooShort(usize),
    #[error("calibration failed: {0}")]
    CalibrationFailed(String),
    #[error("invalid profile: {0}")]
    InvalidProfile(String),
    #[error("stream: {0}")]
    Stream(String),
    #[error(transparent)]
    Gbrt(#[from] GbrtError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Simulation(#[from] MpisimError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, CalibError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CalibrationState {
    Hover,
    Subtle,
    Touch,
    Pressure,
}

impl CalibrationState {
    pub const ALL: [CalibrationState; 4] =
        [CalibrationState::Hover, CalibrationState::Subtle, CalibrationState::Touch, CalibrationState::Pressure];

    pub fn name(&self) -> &'static str {
        match self {
            CalibrationState::Hover => "hover",
            CalibrationState::Subtle => "subtle",
            CalibrationState::Touch => "touch",
            CalibrationState::Pressure => "pressure",
        }
    }

    pub fn segment_kind(&self) -> SegmentKind {
        match self {
            CalibrationState::Hover => SegmentKind::Hover,
            CalibrationState::Subtle => SegmentKind::Subtle,
            CalibrationState::Touch => SegmentKind::Touch,
            CalibrationState::Pressure => SegmentKind::Pressure,
        }
    }
}

impl fmt::Display for CalibrationState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Corrected strengths of the four held states.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StateAnchors {
    pub hover: f64,
    pub subtle: f64,
    pub touch: f64,
    pub pressure: f64,
}

impl StateAnchors {
    pub fn get(&self, state: CalibrationState) -> f64 {
        match state {
            CalibrationState::Hover => self.hover,
            CalibrationState::Subtle => self.subtle,
            CalibrationState::Touch => self.touch,
            CalibrationState::Pressure => self.pressure,
        }
    }

    fn set(&mut self, state: CalibrationState, v: f64) {
        match state {
            CalibrationState::Hover => self.hover = v,
            CalibrationState::Subtle => self.subtle = v,
            CalibrationState::Touch => self.touch = v,
            CalibrationState::Pressure => self.pressure = v,
        }
    }

    /// First adjacent pair that is not strictly increasing.
    pub fn ordering_violation(&self) -> Option<(CalibrationState, CalibrationState)> {
        CalibrationState::ALL
            .windows(2)
            .find(|w| !(self.get(w[0]) < self.get(w[1])))
            .map(|w| (w[0], w[1]))
    }

    fn check(&self) -> std::result::Result<(), String> {
        if let Some((a, b)) = self.ordering_violation() {
            return Err(format!("{a} anchor {:.3} is not below {b} anchor {:.3}", self.get(a), self.get(b)));
        }
        Ok(())
    }
}

/// A captured anchor: the window median and its median absolute deviation
/// relative to that median.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnchorCapture {
    pub value: f64,
    pub dispersion: f64,
    pub frames: usize,
}

pub(crate) fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

pub fn capture_state(values: &[f64], state: CalibrationState) -> Result<AnchorCapture> {
    if values.len() < MIN_CAPTURE_FRAMES {
        return Err(CalibError::WindowTooShort { state, frames: values.len() });
    }
    let m = median(values);
    let deviations: Vec<f64> = values.iter().map(|v| (v - m).abs()).collect();
    let mad = median(&deviations);
    let dispersion = if mad == 0.0 { 0.0 } else { mad / m.abs() };
    if !(dispersion <= MAX_DISPERSION) {
        return Err(CalibError::UnstableCapture { state, dispersion, median: m });
    }
    Ok(AnchorCapture { value: m, dispersion, frames: values.len() })
}

/// `raw * reference / predicted`. Fails for shallow fingers and for poses
/// where the prediction is under 1% of the reference.
pub fn correct(sample: &HaloSample, corrector: &GbrtModel, reference_strength: f64) -> Result<f64> {
    if sample.pitch < MIN_PITCH_DEG {
        return Err(CalibError::LowPitch { pitch: sample.pitch });
    }
    let predicted = corrector.predict(&sample.features())?;
    let floor = EPSILON_FRACTION * reference_strength;
    if !(reference_strength > 0.0 && predicted > floor) {
        return Err(CalibError::DegeneratePose { predicted, floor });
    }
    Ok(sample.raw_strength * reference_strength / predicted)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationProfile {
    pub user_id: String,
    pub material: String,
    pub state_anchors: StateAnchors,
    pub anchor_dispersion: StateAnchors,
    pub corrector: GbrtModel,
    pub reference_strength: f64,
    /// Mean `[x, y, pitch, yaw]` of the touch hold.
    pub reference_pose: [f64; 4],
    /// Heights of the hover and subtle holds, mm.
    pub hover_mm: f64,
    pub subtle_mm: f64,
    /// Median halo pixels on the tip-dip segment during the hover hold.
    pub hover_line_count: f64,
    pub fine_tuned: bool,
    pub created_at: String,
}

#[derive(Serialize, Deserialize)]
struct ProfileFile {
    user_id: String,
    material: String,
    state_anchors: StateAnchors,
    anchor_dispersion: StateAnchors,
    reference_strength: f64,
    reference_pose: [f64; 4],
    hover_mm: f64,
    subtle_mm: f64,
    hover_line_count: f64,
    fine_tuned: bool,
    created_at: String,
    model_file: String,
}

impl CalibrationProfile {
    pub fn validate(&self) -> Result<()> {
        self.state_anchors.check().map_err(CalibError::InvalidProfile)?;
        if !(self.reference_strength > 0.0 && self.reference_strength.is_finite()) {
            return Err(CalibError::InvalidProfile(format!("reference strength {}", self.reference_strength)));
        }
        if !(self.hover_mm > self.subtle_mm && self.subtle_mm >= 0.0) {
            return Err(CalibError::InvalidProfile(format!(
                "hover height {} must exceed subtle height {}",
                self.hover_mm, self.subtle_mm
            )));
        }
        if self.corrector.n_features() != FEATURE_NAMES.len() {
            return Err(CalibError::InvalidProfile(format!(
                "corrector takes {} features, expected {}",
                self.corrector.n_features(),
                FEATURE_NAMES.len()
            )));
        }
        Ok(())
    }

    pub fn correct(&self, sample: &HaloSample) -> Result<f64> {
        correct(sample, &self.corrector, self.reference_strength)
    }

    /// Writes `profile.json` and the corrector model into `dir`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        self.save_as(dir, PROFILE_FILE, MODEL_FILE)
    }

    fn save_as(&self, dir: &Path, profile_name: &str, model_name: &str) -> Result<()> {
        self.validate()?;
        fs::create_dir_all(dir)?;
        let file = ProfileFile {
            user_id: self.user_id.clone(),
            material: self.material.clone(),
            state_anchors: self.state_anchors,
            anchor_dispersion: self.anchor_dispersion,
            reference_strength: self.reference_strength,
            reference_pose: self.reference_pose,
            hover_mm: self.hover_mm,
            subtle_mm: self.subtle_mm,
            hover_line_count: self.hover_line_count,
            fine_tuned: self.fine_tuned,
            created_at: self.created_at.clone(),
            model_file: model_name.to_string(),
        };
        fs::write(dir.join(model_name), self.corrector.to_bytes())?;
        fs::write(dir.join(profile_name), serde_json::to_string_pretty(&file)? + "\n")?;
        Ok(())
    }

    /// Saves a profile that applies to one hand only.
    pub fn save_for_hand(&self, dir: &Path, hand: Hand) -> Result<()> {
        let tag = hand_tag(hand);
        self.save_as(dir, &format!("profile.{tag}.json"), &format!("corrector.{tag}.htgb"))
    }

    pub fn load(dir: &Path) -> Result<Self> {
        Self::load_file(dir, &dir.join(PROFILE_FILE))
    }

    /// The per-hand override in `dir` if there is one, else the shared
    /// profile.
    pub fn load_for_hand(dir: &Path, hand: Hand) -> Result<Self> {
        let own = dir.join(format!("profile.{}.json", hand_tag(hand)));
        if own.exists() {
            Self::load_file(dir, &own)
        } else {
            Self::load(dir)
        }
    }

    fn load_file(dir: &Path, path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let f: ProfileFile = serde_json::from_str(&text)?;
        let corrector = GbrtModel::from_bytes(&fs::read(dir.join(&f.model_file))?)?;
        let p = CalibrationProfile {
            user_id: f.user_id,
            material: f.material,
            state_anchors: f.state_anchors,
            anchor_dispersion: f.anchor_dispersion,
            corrector,
            reference_strength: f.reference_strength,
            reference_pose: f.reference_pose,
            hover_mm: f.hover_mm,
            subtle_mm: f.subtle_mm,
            hover_line_count: f.hover_line_count,
            fine_tuned: f.fine_tuned,
            created_at: f.created_at,
        };
        p.validate()?;
        Ok(p)
    }
}

fn hand_tag(hand: Hand) -> &'static str {
    match hand {
        Hand::Left => "left",
        Hand::Right => "right",
    }
}

/// Pilot sweeps the generic corrector is trained on: each pilot user sweeps
/// a touching finger over the surface with the finger supported at each of
/// `pitches` (give or take `pitch_jitter`).
#[derive(Debug, Clone, PartialEq)]
pub struct PilotConfig {
    pub scene: SceneSpec,
    pub users: Vec<UserProfile>,
    pub pitches: Vec<f64>,
    pub pitch_jitter: f64,
    pub samples_per_pitch: usize,
    /// Half-width of the square swept, mm.
    pub reach: f64,
    pub yaw_range: (f64, f64),
    pub seed: u64,
}

impl Default for PilotConfig {
    fn default() -> Self {
        Self {
            scene: SceneSpec::default().with_size(256, 256),
            users: UserProfile::pilots(),
            pitches: vec![15.0, 30.0, 45.0, 60.0, 75.0],
            pitch_jitter: 5.0,
            samples_per_pitch: MIN_SWEEP_SAMPLES,
            reach: 90.0,
            yaw_range: (240.0, 300.0),
            seed: 0,
        }
    }
}

/// Features and raw strengths of the pilot sweeps. Poses whose finger
/// leaves the frame are redrawn.
pub fn pilot_corpus(cfg: &PilotConfig) -> Result<Dataset> {
    let extract = ExtractConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut features = Vec::new();
    let mut targets = Vec::new();
    let mut frame = 0u64;
    for user in &cfg.users {
        let mut scene = cfg.scene.clone();
        scene.user = user.clone();
        let renderer = Renderer::new(scene)?;
        for &pitch in &cfg.pitches {
            let mut taken = 0;
            let mut attempts = 0;
            while taken < cfg.samples_per_pitch {
                attempts += 1;
                if attempts > 20 * cfg.samples_per_pitch + 100 {
                    return Err(CalibError::CalibrationFailed(format!(
                        "pilot sweep at {pitch} deg keeps leaving the frame"
                    )));
                }
                let p = (pitch + rng.gen_range(-cfg.pitch_jitter..=cfg.pitch_jitter)).clamp(5.0, 85.0);
                let pose = FingerPose::touching(
                    rng.gen_range(-cfg.reach..=cfg.reach),
                    rng.gen_range(-cfg.reach..=cfg.reach),
                    p,
                    rng.gen_range(cfg.yaw_range.0..=cfg.yaw_range.1),
                );
                frame += 1;
                let s = match sample_halo(&renderer, &pose, frame, cfg.seed, &extract) {
                    Ok(s) => s,
                    Err(MpisimError::FingerOutsideFrame { .. }) | Err(MpisimError::Extract(_)) => continue,
                    Err(e) => return Err(e.into()),
                };
                features.extend_from_slice(&s.features());
                targets.push(s.raw_strength);
                taken += 1;
            }
        }
    }
    Ok(Dataset::new(FEATURE_NAMES.len(), features, targets)?)
}

pub fn feature_names() -> Vec<String> {
    FEATURE_NAMES.iter().map(|s| s.to_string()).collect()
}

pub fn train_pilot_corrector(cfg: &PilotConfig, gbrt: &GbrtConfig) -> Result<(GbrtModel, TrainingLog)> {
    let data = pilot_corpus(cfg)?;
    let (model, log) = fit(&data, gbrt)?;
    Ok((model.with_feature_names(feature_names())?, log))
}

#[derive(Debug, Clone)]
pub struct CalibrationOptions {
    pub user_id: String,
    pub material: String,
    /// Stored verbatim; callers supply it so runs stay reproducible.
    pub created_at: String,
    pub fps: f64,
    pub extract: ExtractConfig,
    pub fine_tune_iterations: u32,
    pub fine_tune_mode: FineTuneMode,
}

impl Default for CalibrationOptions {
    fn default() -> Self {
        Self {
            user_id: "user".into(),
            material: "unknown".into(),
            created_at: "1970-01-01T00:00:00Z".into(),
            fps: 30.0,
            extract: ExtractConfig::default(),
            fine_tune_iterations: FINE_TUNE_ITERATIONS,
            fine_tune_mode: FineTuneMode::Append,
        }
    }
}

/// Per-state bookkeeping from a calibration run.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct WindowStats {
    pub frames: usize,
    pub missing_landmarks: usize,
    pub rejected: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CalibrationReport {
    pub windows: Vec<(CalibrationState, WindowStats)>,
    pub sweep_samples: usize,
    pub notes: Vec<String>,
}

/// Frame range `[start, end)` of a segment on a `fps` clock.
pub fn segment_frames(seg: &Segment, fps: f64) -> std::ops::Range<u64> {
    let first = |t: f64| {
        let f = (t * fps).ceil().max(0.0) as u64;
        // the script clock computes frame / fps, which can land a hair off
        if f > 0 && ((f - 1) as f64 / fps) >= t {
            f - 1
        } else {
            f
        }
    };
    first(seg.start)..first(seg.end)
}

struct Windows {
    state: Vec<(CalibrationState, std::ops::Range<u64>, Option<f64>)>,
    sweep: Vec<std::ops::Range<u64>>,
}

impl Windows {
    fn new(segments: &[Segment], fps: f64) -> Result<Self> {
        let mut state = Vec::new();
        for s in CalibrationState::ALL {
            let seg = segments
                .iter()
                .find(|g| g.kind == s.segment_kind())
                .ok_or(CalibError::MissingSegment(s))?;
            state.push((s, segment_frames(seg, fps), seg.target));
        }
        let sweep = segments.iter().filter(|g| g.kind == SegmentKind::Sweep).map(|g| segment_frames(g, fps)).collect();
        Ok(Self { state, sweep })
    }

    fn state_of(&self, frame: u64) -> Option<CalibrationState> {
        self.state.iter().find(|(_, r, _)| r.contains(&frame)).map(|(s, _, _)| *s)
    }

    fn in_sweep(&self, frame: u64) -> bool {
        self.sweep.iter().any(|r| r.contains(&frame))
    }
}

/// Calibrates from a recorded session: background from the first 60
/// frames, the corrector fine-tuned on the sweep segment (if any), then the
/// four anchors captured from the corrected strengths of their holds.
pub fn run_calibration<I, E>(
    frames: I,
    landmarks: &[LandmarkFrame],
    camera: &CameraModel,
    segments: &[Segment],
    pilot: &GbrtModel,
    opts: &CalibrationOptions,
) -> Result<(CalibrationProfile, CalibrationReport)>
where
    I: IntoIterator<Item = std::result::Result<DepthFrame, E>>,
    E: fmt::Display,
{
    let windows = Windows::new(segments, opts.fps)?;
    let mut report = CalibrationReport::default();
    let mut stats: Vec<WindowStats> = vec![WindowStats::default(); 4];
    let mut held: Vec<Vec<Measurement>> = vec![Vec::new(); 4];
    let mut sweep: Vec<HaloSample> = Vec::new();

    let mut bg = BackgroundBuilder::new(camera.width, camera.height);
    let mut measurer: Option<Measurer> = None;
    let mut lm_iter = landmarks.iter().peekable();
    for frame in frames {
        let frame = frame.map_err(|e| CalibError::Stream(e.to_string()))?;
        let idx = frame.frame_index;
        while lm_iter.peek().is_some_and(|l| l.frame_index < idx) {
            lm_iter.next();
        }
        let lm = lm_iter.peek().filter(|l| l.frame_index == idx).copied();
        let Some(m) = measurer.as_ref() else {
            bg.push(&frame).map_err(PipelineError::from)?;
            if bg.frames() == BACKGROUND_FRAMES {
                let done = std::mem::replace(&mut bg, BackgroundBuilder::new(0, 0));
                measurer = Some(Measurer::new(done.finish().map_err(PipelineError::from)?, camera.clone(), opts.extract));
            }
            continue;
        };
        let state = windows.state_of(idx);
        let swept = windows.in_sweep(idx);
        if state.is_none() && !swept {
            continue;
        }
        let si = state.map(|s| CalibrationState::ALL.iter().position(|&x| x == s).unwrap());
        if let Some(i) = si {
            stats[i].frames += 1;
        }
        let Some(lm) = lm else {
            if let Some(i) = si {
                stats[i].missing_landmarks += 1;
            }
            continue;
        };
        match m.measure(&frame, lm) {
            Ok(meas) => {
                if let Some(i) = si {
                    held[i].push(meas);
                }
                if swept {
                    sweep.push(meas.sample);
                }
            }
            Err(e) => {
                if let Some(i) = si {
                    stats[i].rejected += 1;
                }
                report.notes.push(format!("frame {idx}: {e}"));
            }
        }
    }
    if measurer.is_none() {
        return Err(CalibError::Stream(format!("stream ends before {BACKGROUND_FRAMES} background frames")));
    }

    report.sweep_samples = sweep.len();
    let (corrector, fine_tuned) = if windows.sweep.is_empty() {
        report.notes.push("no sweep segment: pilot corrector used as is".into());
        (pilot.clone(), false)
    } else {
        if sweep.len() < MIN_SWEEP_SAMPLES {
            return Err(CalibError::SweepTooShort(sweep.len()));
        }
        let rows: Vec<[f64; 4]> = sweep.iter().map(|s| s.features()).collect();
        let data = Dataset::from_rows(&rows, sweep.iter().map(|s| s.raw_strength).collect())?;
        (pilot.fine_tune(&data, opts.fine_tune_iterations, opts.fine_tune_mode)?, true)
    };

    let ti = 2;
    let touch: Vec<&HaloSample> =
        held[ti].iter().map(|m| &m.sample).filter(|s| s.pitch >= MIN_PITCH_DEG).collect();
    if touch.len() * 2 <= stats[ti].frames.max(1) {
        return Err(CalibError::CalibrationFailed(format!(
            "touch window: only {} of {} frames usable",
            touch.len(),
            stats[ti].frames
        )));
    }
    let reference_pose = mean_pose(&touch);
    let reference_strength = corrector.predict(&reference_pose)?;
    if !(reference_strength > 0.0) {
        return Err(CalibError::CalibrationFailed(format!(
            "corrector predicts {reference_strength:.3} at the touch pose"
        )));
    }

    let mut anchors = StateAnchors { hover: 0.0, subtle: 0.0, touch: 0.0, pressure: 0.0 };
    let mut dispersion = anchors;
    let mut hover_line_count = 0.0;
    for (i, &state) in CalibrationState::ALL.iter().enumerate() {
        let mut corrected = Vec::with_capacity(held[i].len());
        for m in &held[i] {
            match correct(&m.sample, &corrector, reference_strength) {
                Ok(c) => corrected.push(c),
                Err(_) => stats[i].rejected += 1,
            }
        }
        if corrected.len() * 2 <= stats[i].frames {
            return Err(CalibError::CalibrationFailed(format!(
                "{state} window: {} of {} frames degenerate or unmeasurable",
                stats[i].frames - corrected.len(),
                stats[i].frames
            )));
        }
        let cap = capture_state(&corrected, state)?;
        anchors.set(state, cap.value);
        dispersion.set(state, cap.dispersion);
        if state == CalibrationState::Hover {
            let counts: Vec<f64> = held[i].iter().map(|m| m.line_count as f64).collect();
            hover_line_count = median(&counts);
        }
    }
    if let Some((a, b)) = anchors.ordering_violation() {
        return Err(CalibError::CalibrationFailed(format!(
            "{a} anchor {:.1} is not below {b} anchor {:.1}",
            anchors.get(a),
            anchors.get(b)
        )));
    }
    let target = |s: CalibrationState, default: f64| {
        windows.state.iter().find(|(x, _, _)| *x == s).and_then(|(_, _, t)| *t).unwrap_or(default)
    };
    report.windows = CalibrationState::ALL.iter().copied().zip(stats).collect();
    let profile = CalibrationProfile {
        user_id: opts.user_id.clone(),
        material: opts.material.clone(),
        state_anchors: anchors,
        anchor_dispersion: dispersion,
        corrector,
        reference_strength,
        reference_pose,
        hover_mm: target(CalibrationState::Hover, CALIBRATION_HOVER_MM),
        subtle_mm: target(CalibrationState::Subtle, CALIBRATION_SUBTLE_MM),
        hover_line_count,
        fine_tuned,
        created_at: opts.created_at.clone(),
    };
    profile.validate()?;
    Ok((profile, report))
}

/// Mean position and pitch; yaw averaged on the circle.
fn mean_pose(samples: &[&HaloSample]) -> [f64; 4] {
    let n = samples.len() as f64;
    let (mut x, mut y, mut p, mut s, mut c) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for q in samples {
        x += q.x;
        y += q.y;
        p += q.pitch;
        s += q.yaw.to_radians().sin();
        c += q.yaw.to_radians().cos();
    }
    [x / n, y / n, p / n, s.atan2(c).to_degrees().rem_euclid(360.0)]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(raw: f64, pitch: f64) -> HaloSample {
        HaloSample { frame_index: 0, raw_strength: raw, x: 0.0, y: 0.0, pitch, yaw: 270.0, patch_origin: (0, 0) }
    }

    fn constant(v: f64) -> GbrtModel {
        GbrtModel::constant(v, feature_names(), GbrtConfig::default())
    }

    #[test]
    fn correct_is_a_ratio() {
        let m = constant(4000.0);
        assert_eq!(correct(&sample(4000.0, 45.0), &m, 4000.0).unwrap(), 4000.0);
        assert_eq!(correct(&sample(2000.0, 45.0), &m, 8000.0).unwrap(), 4000.0);
        assert!(matches!(correct(&sample(10.0, 45.0), &constant(0.0), 4000.0), Err(CalibError::DegeneratePose { .. })));
        assert!(matches!(correct(&sample(10.0, 45.0), &constant(39.0), 4000.0), Err(CalibError::DegeneratePose { .. })));
        assert!(matches!(correct(&sample(4000.0, 10.0), &m, 4000.0), Err(CalibError::LowPitch { .. })));
    }

    #[test]
    fn capture_uses_the_median() {
        let c = capture_state(&[7.0; 30], CalibrationState::Touch).unwrap();
        assert_eq!((c.value, c.dispersion, c.frames), (7.0, 0.0, 30));
        let mut w: Vec<f64> = (0..31).map(|i| 100.0 + (i % 5) as f64).collect();
        let before = capture_state(&w, CalibrationState::Hover).unwrap().value;
        w[7] = 1020.0;
        assert_eq!(capture_state(&w, CalibrationState::Hover).unwrap().value, before);
        assert!(matches!(
            capture_state(&[1.0; 29], CalibrationState::Hover),
            Err(CalibError::WindowTooShort { frames: 29, .. })
        ));
        let wild: Vec<f64> = (0..40).map(|i| if i % 2 == 0 { 10.0 } else { 30.0 }).collect();
        assert!(matches!(capture_state(&wild, CalibrationState::Subtle), Err(CalibError::UnstableCapture { .. })));
    }

    #[test]
    fn ordering_names_the_pair() {
        let a = StateAnchors { hover: 1.0, subtle: 3.0, touch: 2.0, pressure: 4.0 };
        assert_eq!(a.ordering_violation(), Some((CalibrationState::Subtle, CalibrationState::Touch)));
        let b = StateAnchors { hover: 1.0, subtle: 2.0, touch: 3.0, pressure: 3.0 };
        assert_eq!(b.ordering_violation(), Some((CalibrationState::Touch, CalibrationState::Pressure)));
        assert!(StateAnchors { pressure: 4.0, ..b }.ordering_violation().is_none());
    }

    #[test]
    fn segment_frames_follow_the_script_clock() {
        let seg = Segment { kind: SegmentKind::Touch, start: 95.0 / 30.0, end: 135.0 / 30.0, target: None };
        assert_eq!(segment_frames(&seg, 30.0), 95..135);
        let seg = Segment { kind: SegmentKind::Touch, start: 0.0, end: 0.5, target: None };
        assert_eq!(segment_frames(&seg, 30.0), 0..15);
    }

    #[test]
    fn yaw_mean_wraps() {
        let mut a = sample(1.0, 40.0);
        a.yaw = 350.0;
        let mut b = sample(1.0, 50.0);
        b.yaw = 10.0;
        let m = mean_pose(&[&a, &b]);
        assert_eq!(m[2], 45.0);
        assert!(m[3] < 1e-9 || (360.0 - m[3]) < 1e-9, "{}", m[3]);
    }

    #[test]
    fn small_pilot_corpus() {
        let cfg = PilotConfig {
            scene: SceneSpec::default().with_size(160, 160),
            users: UserProfile::pilots()[..1].to_vec(),
            pitches: vec![45.0],
            samples_per_pitch: 20,
            reach: 40.0,
            ..PilotConfig::default()
        };
        let d = pilot_corpus(&cfg).unwrap();
        assert_eq!(d.n_rows(), 20);
        assert!(d.targets().iter().all(|&t| t > 1000.0));
        assert_eq!(pilot_corpus(&cfg).unwrap().targets(), d.targets());
    }
}
