//! Ready-made trajectories: taps, the 4x4 target grid, calibration sessions,
//! hover and pressure blocks, typing and pilot sweeps.
//!
//! All scripts are laid out on whole frames so ground-truth contact (hover
//! exactly 0) lands on frame boundaries.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::scene::{FingerPose, SceneSpec};
use super::trajectory::{Keyframe, Script, Segment, SegmentKind};
use super::{MpisimError, Result};

pub const FPS: f64 = 30.0;
/// Frames of empty surface at the start of every session.
pub const BACKGROUND_LEAD: u64 = 60;
pub const HOLD_FRAMES: u64 = 50;
/// Frames trimmed from each end of a hold before it is labelled.
pub const HOLD_MARGIN: u64 = 5;
pub const SWEEP_FRAMES: u64 = 600;
pub const CALIBRATION_HOVER_MM: f64 = 10.0;
pub const CALIBRATION_SUBTLE_MM: f64 = 1.0;
pub const HOVER_TARGETS: [f64; 5] = [5.0, 7.0, 10.0, 12.0, 15.0];
pub const PRESSURE_TARGETS: [f64; 5] = [0.1, 0.25, 0.5, 0.75, 1.0];

/// Builds a script on a frame clock.
#[derive(Debug, Clone)]
pub struct ScriptBuilder {
    fps: f64,
    frame: u64,
    pose: Option<FingerPose>,
    keyframes: Vec<Keyframe>,
    segments: Vec<Segment>,
}

impl ScriptBuilder {
    pub fn new(fps: f64) -> Self {
        Self { fps, frame: 0, pose: None, keyframes: vec![Keyframe { t: 0.0, finger: None }], segments: Vec::new() }
    }

    fn t(&self, frame: u64) -> f64 {
        frame as f64 / self.fps
    }

    pub fn frame(&self) -> u64 {
        self.frame
    }

    pub fn pose(&self) -> Option<FingerPose> {
        self.pose
    }

    fn push(&mut self, finger: Option<FingerPose>) {
        let t = self.t(self.frame);
        match self.keyframes.last_mut() {
            Some(k) if k.t == t => k.finger = finger,
            _ => self.keyframes.push(Keyframe { t, finger }),
        }
        self.pose = finger;
    }

    /// Shows the finger at `pose` from the current frame on.
    pub fn appear(&mut self, pose: FingerPose) -> &mut Self {
        self.push(Some(pose));
        self
    }

    /// Empty surface for `frames`; labelled as background.
    pub fn absent(&mut self, frames: u64) -> &mut Self {
        self.push(None);
        self.label(SegmentKind::Background, self.frame, self.frame + frames, None);
        self.frame += frames;
        self.push(None);
        self
    }

    /// Linear move to `pose` over `frames`.
    pub fn move_to(&mut self, pose: FingerPose, frames: u64) -> &mut Self {
        assert!(self.pose.is_some(), "move_to needs a visible finger");
        assert!(frames > 0);
        self.frame += frames;
        self.push(Some(pose));
        self
    }

    pub fn hold(&mut self, frames: u64) -> &mut Self {
        let p = self.pose;
        self.frame += frames;
        self.push(p);
        self
    }

    /// Holds for `frames` and labels the inner part of the hold.
    pub fn hold_labelled(&mut self, kind: SegmentKind, frames: u64, target: Option<f64>) -> &mut Self {
        let start = self.frame;
        self.hold(frames);
        self.label(kind, start + HOLD_MARGIN, start + frames - HOLD_MARGIN, target);
        self
    }

    pub fn label(&mut self, kind: SegmentKind, from: u64, to: u64, target: Option<f64>) -> &mut Self {
        if to > from {
            self.segments.push(Segment { kind, start: self.t(from), end: self.t(to), target });
        }
        self
    }

    pub fn build(&self) -> Script {
        Script { fps: self.fps, keyframes: self.keyframes.clone(), segments: self.segments.clone() }
    }
}

/// A scene plus a script, the unit `simulate` consumes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub scene: SceneSpec,
    pub script: Script,
    /// Tap targets on the surface, mm, where the script has them.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub targets: Vec<[f64; 2]>,
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self> {
        let s: Scenario = serde_json::from_str(text).map_err(|e| MpisimError::InvalidScript(e.to_string()))?;
        s.scene.validate()?;
        s.script.validate()?;
        Ok(s)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }
}

/// Single tap: hover `from` mm down to contact and back over 9 frames.
pub fn tap(x: f64, y: f64, from: f64, pitch: f64, yaw: f64) -> Script {
    let mut b = ScriptBuilder::new(FPS);
    b.appear(FingerPose::hovering(x, y, from, pitch, yaw))
        .move_to(FingerPose::touching(x, y, pitch, yaw), 4)
        .move_to(FingerPose::hovering(x, y, from, pitch, yaw), 4);
    b.build()
}

/// Targets of the 4x4 grid: 50 mm pitch spanning a 20x20 cm area.
pub fn grid16_targets() -> Vec<[f64; 2]> {
    let c = [-75.0, -25.0, 25.0, 75.0];
    let mut out = Vec::with_capacity(16);
    for &y in c.iter().rev() {
        for &x in &c {
            out.push([x, y]);
        }
    }
    out
}

/// Taps every target once from 20 mm, with per-tap pitch in [35, 55] and yaw
/// in [255, 285] degrees.
pub fn grid16(seed: u64) -> Script {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut b = ScriptBuilder::new(FPS);
    b.absent(BACKGROUND_LEAD);
    let targets = grid16_targets();
    let mut angles = || (rng.gen_range(35.0..=55.0), rng.gen_range(255.0..=285.0));
    let (p0, y0) = angles();
    let [x0, y0_] = targets[0];
    b.appear(FingerPose::hovering(x0, y0_, 20.0, p0, y0)).hold(5);
    for (i, &[x, y]) in targets.iter().enumerate() {
        let (pitch, yaw) = if i == 0 { (p0, y0) } else { angles() };
        b.move_to(FingerPose::hovering(x, y, 20.0, pitch, yaw), 10)
            .move_to(FingerPose::touching(x, y, pitch, yaw), 5)
            .hold(4)
            .move_to(FingerPose::hovering(x, y, 20.0, pitch, yaw), 5);
    }
    b.hold(5);
    b.build()
}

/// Calibration session at the surface center: background, the four held
/// states, then (optionally) a 20 s sweep at 45 degrees over the surface.
pub fn calibration_session(pitch: f64, yaw: f64, with_sweep: bool, seed: u64) -> Script {
    let mut b = ScriptBuilder::new(FPS);
    b.absent(BACKGROUND_LEAD);
    let at = |h: f64| FingerPose::hovering(0.0, 0.0, h, pitch, yaw);
    b.appear(at(30.0))
        .move_to(at(CALIBRATION_HOVER_MM), 15)
        .hold_labelled(SegmentKind::Hover, HOLD_FRAMES, Some(CALIBRATION_HOVER_MM))
        .move_to(at(CALIBRATION_SUBTLE_MM), 10)
        .hold_labelled(SegmentKind::Subtle, HOLD_FRAMES, Some(CALIBRATION_SUBTLE_MM))
        .move_to(at(0.0), 5)
        .hold_labelled(SegmentKind::Touch, HOLD_FRAMES, Some(0.0))
        .move_to(at(0.0).with_pressure(1.0), 10)
        .hold_labelled(SegmentKind::Pressure, HOLD_FRAMES, Some(1.0))
        .move_to(at(0.0), 10)
        .move_to(at(20.0), 10);
    if with_sweep {
        sweep(&mut b, 45.0, SWEEP_FRAMES, 80.0, seed);
        b.move_to(FingerPose::hovering(0.0, 0.0, 20.0, 45.0, 270.0), 10);
    }
    b.hold(5);
    b.build()
}

/// Appends a touching sweep at fixed `pitch`: a new random point within
/// `reach` mm of the center and a new yaw every 15 frames.
pub fn sweep(b: &mut ScriptBuilder, pitch: f64, frames: u64, reach: f64, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5357_4545_5000);
    let mut point = || {
        FingerPose::touching(rng.gen_range(-reach..=reach), rng.gen_range(-reach..=reach), pitch, rng.gen_range(240.0..=300.0))
    };
    let first = point();
    match b.pose() {
        Some(_) => {
            b.move_to(FingerPose { hover: 20.0, ..first }, 10).move_to(first, 5);
        }
        None => {
            b.appear(first);
        }
    }
    let start = b.frame();
    let steps = frames.div_ceil(15);
    for _ in 0..steps {
        b.move_to(point(), 15);
    }
    let end = b.frame();
    b.label(SegmentKind::Sweep, start, end, None);
    b.move_to(FingerPose { hover: 20.0, ..b.pose().unwrap() }, 10);
}

/// Hover blocks: the finger holds each height for `HOLD_FRAMES` at a few
/// positions around the center.
pub fn hover_blocks(pitch: f64, yaw: f64) -> Script {
    let mut b = ScriptBuilder::new(FPS);
    b.absent(BACKGROUND_LEAD);
    let spots = [(0.0, 0.0), (30.0, 20.0), (-30.0, -20.0)];
    b.appear(FingerPose::hovering(0.0, 0.0, 30.0, pitch, yaw)).hold(10);
    for &(x, y) in &spots {
        for &h in &HOVER_TARGETS {
            b.move_to(FingerPose::hovering(x, y, h, pitch, yaw), 15)
                .hold_labelled(SegmentKind::Block, HOLD_FRAMES, Some(h))
                .move_to(FingerPose::hovering(x, y, 30.0, pitch, yaw), 10);
        }
    }
    b.hold(5);
    b.build()
}

/// Pressure blocks: touch, press to each level, hold, lift.
pub fn pressure_blocks(pitch: f64, yaw: f64) -> Script {
    let mut b = ScriptBuilder::new(FPS);
    b.absent(BACKGROUND_LEAD);
    let spots = [(0.0, 0.0), (30.0, 20.0), (-30.0, -20.0)];
    b.appear(FingerPose::hovering(0.0, 0.0, 20.0, pitch, yaw)).hold(10);
    for &(x, y) in &spots {
        for &p in &PRESSURE_TARGETS {
            let touch = FingerPose::touching(x, y, pitch, yaw);
            b.move_to(FingerPose::hovering(x, y, 20.0, pitch, yaw), 10)
                .move_to(touch, 5)
                .move_to(touch.with_pressure(p), 10)
                .hold_labelled(SegmentKind::Block, HOLD_FRAMES, Some(p))
                .move_to(touch, 10)
                .move_to(FingerPose::hovering(x, y, 20.0, pitch, yaw), 5);
        }
    }
    b.hold(5);
    b.build()
}

/// Typing: keys tapped in order with the fingertip lifting `lift` mm between
/// them and starting from `lift` mm above the first key.
pub fn typing(keys: &[[f64; 2]], lift: f64, pitch: f64, yaw: f64) -> Script {
    let mut b = ScriptBuilder::new(FPS);
    b.absent(BACKGROUND_LEAD);
    let Some(&[x0, y0]) = keys.first() else { return b.build() };
    b.appear(FingerPose::hovering(x0, y0, lift, pitch, yaw)).hold(5);
    for (i, &[x, y]) in keys.iter().enumerate() {
        if i > 0 {
            b.move_to(FingerPose::hovering(x, y, lift, pitch, yaw), 5);
        }
        b.move_to(FingerPose::touching(x, y, pitch, yaw), 3)
            .hold(3)
            .move_to(FingerPose::hovering(x, y, lift, pitch, yaw), 3)
            .hold(2);
    }
    b.hold(5);
    b.build()
}

/// Key centers of a compact QWERTY layout, 18 mm pitch, centered on the
/// surface origin. Rows run top to bottom; the space bar sits below.
pub fn keyboard_layout() -> Vec<(char, [f64; 2])> {
    let rows = ["qwertyuiop", "asdfghjkl", "zxcvbnm"];
    let pitch = 18.0;
    let mut out = Vec::new();
    for (r, row) in rows.iter().enumerate() {
        let y = 30.0 - r as f64 * pitch;
        let x0 = -(row.len() as f64 - 1.0) * pitch / 2.0 + r as f64 * 4.0;
        for (i, c) in row.chars().enumerate() {
            out.push((c, [x0 + i as f64 * pitch, y]));
        }
    }
    out.push((' ', [0.0, 30.0 - 3.0 * pitch]));
    out
}

/// Key centers for the characters of `text` (unknown characters skipped).
pub fn key_positions(text: &str) -> Vec<[f64; 2]> {
    let layout = keyboard_layout();
    text.chars()
        .filter_map(|c| layout.iter().find(|(k, _)| *k == c.to_ascii_lowercase()).map(|(_, p)| *p))
        .collect()
}
