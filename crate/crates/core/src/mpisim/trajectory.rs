use serde::{Deserialize, Serialize};

use super::render::{GroundTruthRecord, RenderedFrame, Renderer};
use super::scene::{FingerPose, SceneSpec};
use super::{MpisimError, Result};
use crate::depthio::StreamHeader;

/// A pose at time `t` seconds; `finger: None` removes the finger from view
/// until the next keyframe.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Keyframe {
    pub t: f64,
    pub finger: Option<FingerPose>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SegmentKind {
    Background,
    Hover,
    Subtle,
    Touch,
    Pressure,
    Sweep,
    /// Evaluation block held at a known hover height or pressure level.
    Block,
}

/// A labelled time window `[start, end)` in seconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub kind: SegmentKind,
    pub start: f64,
    pub end: f64,
    /// Held hover (mm) or pressure level for `Block` segments.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<f64>,
}

impl Segment {
    pub fn contains(&self, t: f64) -> bool {
        t >= self.start && t < self.end
    }
}

fn default_fps() -> f64 {
    30.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Script {
    #[serde(default = "default_fps")]
    pub fps: f64,
    pub keyframes: Vec<Keyframe>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub segments: Vec<Segment>,
}

impl Script {
    pub fn new(keyframes: Vec<Keyframe>) -> Self {
        Self { fps: default_fps(), keyframes, segments: Vec::new() }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(MpisimError::InvalidScript(m));
        if self.keyframes.is_empty() {
            return bad("no keyframes".into());
        }
        if !(self.fps > 0.0 && self.fps.is_finite()) {
            return bad(format!("fps {} must be positive", self.fps));
        }
        if self.keyframes[0].t != 0.0 {
            return bad("first keyframe must be at t = 0".into());
        }
        for (i, w) in self.keyframes.windows(2).enumerate() {
            if !(w[1].t > w[0].t) {
                return bad(format!("keyframe {} at t={} does not follow t={}", i + 1, w[1].t, w[0].t));
            }
        }
        for (i, k) in self.keyframes.iter().enumerate() {
            if let Some(p) = &k.finger {
                p.validate().map_err(|e| MpisimError::InvalidScript(format!("keyframe {i}: {e}")))?;
            }
        }
        for s in &self.segments {
            if !(s.end > s.start) {
                return bad(format!("segment {:?} is empty", s.kind));
            }
        }
        Ok(())
    }

    pub fn duration(&self) -> f64 {
        self.keyframes.last().map_or(0.0, |k| k.t)
    }

    pub fn frame_count(&self, fps: f64) -> u64 {
        (self.duration() * fps + 1e-9).floor() as u64 + 1
    }

    /// Pose at time `t`: linear between finger keyframes, stepped across
    /// absent ones. Pressure only survives where the hover is exactly 0.
    pub fn pose_at(&self, t: f64) -> Option<FingerPose> {
        let k = &self.keyframes;
        let i = k.partition_point(|kf| kf.t <= t).saturating_sub(1);
        let a = &k[i];
        let Some(b) = k.get(i + 1) else { return a.finger };
        let (Some(pa), Some(pb)) = (a.finger, b.finger) else { return a.finger };
        let s = ((t - a.t) / (b.t - a.t)).clamp(0.0, 1.0);
        let lerp = |x: f64, y: f64| if x == y { x } else { x + (y - x) * s };
        let hover = lerp(pa.hover, pb.hover);
        Some(FingerPose {
            x: lerp(pa.x, pb.x),
            y: lerp(pa.y, pb.y),
            hover,
            pressure: if hover == 0.0 { lerp(pa.pressure, pb.pressure) } else { 0.0 },
            pitch: lerp(pa.pitch, pb.pitch),
            yaw: lerp(pa.yaw, pb.yaw),
            roll: lerp(pa.roll, pb.roll),
        })
    }

    pub fn segments_of(&self, kind: SegmentKind) -> impl Iterator<Item = &Segment> {
        self.segments.iter().filter(move |s| s.kind == kind)
    }
}

/// Lazily rendered stream for one script.
pub struct Trajectory {
    renderer: Renderer,
    script: Script,
    fps: f64,
    seed: u64,
    next: u64,
    count: u64,
}

impl Trajectory {
    pub fn header(&self) -> StreamHeader {
        let s = self.renderer.scene();
        StreamHeader::new(s.width, s.height, self.fps as f32, s.camera_pose)
    }

    pub fn frame_count(&self) -> u64 {
        self.count
    }

    pub fn renderer(&self) -> &Renderer {
        &self.renderer
    }

    pub fn script(&self) -> &Script {
        &self.script
    }

    pub fn time_of(&self, frame_index: u64) -> f64 {
        frame_index as f64 / self.fps
    }
}

impl Iterator for Trajectory {
    type Item = Result<RenderedFrame>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.next >= self.count {
            return None;
        }
        let i = self.next;
        self.next += 1;
        let t = self.time_of(i);
        let ts = (t * 1e6).round() as u64;
        let pose = self.script.pose_at(t);
        Some(self.renderer.render(pose.as_ref(), i, ts, self.seed))
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let n = (self.count - self.next) as usize;
        (n, Some(n))
    }
}

/// Renders `script` frame by frame at `fps`.
pub fn render_trajectory(scene: &SceneSpec, script: &Script, fps: f64, seed: u64) -> Result<Trajectory> {
    script.validate()?;
    if !(fps > 0.0 && fps.is_finite()) {
        return Err(MpisimError::InvalidScript(format!("fps {fps} must be positive")));
    }
    let renderer = Renderer::new(scene.clone())?;
    let count = script.frame_count(fps);
    Ok(Trajectory { renderer, script: script.clone(), fps, seed, next: 0, count })
}

/// One ground-truth contact: from the first frame at hover 0 to the first
/// frame after it that is not.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContactInterval {
    pub down_frame: u64,
    pub down_us: u64,
    pub up_frame: Option<u64>,
    pub up_us: Option<u64>,
    pub x: f64,
    pub y: f64,
}

pub fn contact_intervals(records: &[GroundTruthRecord]) -> Vec<ContactInterval> {
    let mut out: Vec<ContactInterval> = Vec::new();
    let mut open = false;
    for r in records {
        if r.contact && !open {
            let p = r.pose.expect("contact implies a finger");
            out.push(ContactInterval {
                down_frame: r.frame_index,
                down_us: r.timestamp_us,
                up_frame: None,
                up_us: None,
                x: p.x,
                y: p.y,
            });
            open = true;
        } else if !r.contact && open {
            let last = out.last_mut().unwrap();
            last.up_frame = Some(r.frame_index);
            last.up_us = Some(r.timestamp_us);
            open = false;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tap_script() -> Script {
        let p = |h| Some(FingerPose::hovering(0.0, 0.0, h, 45.0, 270.0));
        Script::new(vec![
            Keyframe { t: 0.0, finger: p(20.0) },
            Keyframe { t: 4.0 / 30.0, finger: p(0.0) },
            Keyframe { t: 8.0 / 30.0, finger: p(20.0) },
        ])
    }

    #[test]
    fn tap_has_one_contact() {
        let scene = SceneSpec::default().with_size(96, 96);
        let traj = render_trajectory(&scene, &tap_script(), 30.0, 1).unwrap();
        assert_eq!(traj.frame_count(), 9);
        let truth: Vec<_> = traj.map(|f| f.unwrap().truth).collect();
        let contacts = contact_intervals(&truth);
        assert_eq!(contacts.len(), 1);
        assert_eq!(contacts[0].down_frame, 4);
        assert_eq!(contacts[0].up_frame, Some(5));
    }

    #[test]
    fn interpolation_and_steps() {
        let s = tap_script();
        assert_eq!(s.pose_at(2.0 / 30.0).unwrap().hover, 10.0);
        let absent = Script::new(vec![
            Keyframe { t: 0.0, finger: None },
            Keyframe { t: 1.0, finger: Some(FingerPose::touching(0.0, 0.0, 45.0, 270.0)) },
        ]);
        assert!(absent.pose_at(0.99).is_none());
        assert!(absent.pose_at(1.0).is_some());
    }

    #[test]
    fn pressure_needs_contact_in_between() {
        let s = Script::new(vec![
            Keyframe { t: 0.0, finger: Some(FingerPose::touching(0.0, 0.0, 45.0, 270.0).with_pressure(1.0)) },
            Keyframe { t: 1.0, finger: Some(FingerPose::hovering(0.0, 0.0, 10.0, 45.0, 270.0)) },
        ]);
        let mid = s.pose_at(0.5).unwrap();
        assert_eq!(mid.pressure, 0.0);
        mid.validate().unwrap();
    }

    #[test]
    fn unordered_keyframes_rejected() {
        let mut s = tap_script();
        s.keyframes.swap(1, 2);
        assert!(s.validate().is_err());
    }

    #[test]
    fn constant_pose_frames_differ_only_by_noise() {
        let mut scene = SceneSpec::default().with_size(64, 64);
        scene.noise_sigma = 0.0;
        let p = Some(FingerPose::touching(0.0, 0.0, 45.0, 270.0));
        let s = Script::new(vec![Keyframe { t: 0.0, finger: p }, Keyframe { t: 0.1, finger: p }]);
        let frames: Vec<_> = render_trajectory(&scene, &s, 30.0, 3).unwrap().map(|f| f.unwrap().frame).collect();
        assert!(frames.windows(2).all(|w| w[0].depth == w[1].depth));
    }
}
