use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::render::Renderer;
use super::scene::{FingerPose, SceneSpec};
use super::{MpisimError, Result};
use crate::depthio::DiffMap;
use crate::geometry::{CameraPose, Rect};
use crate::halocore::{extract_sample, region_of_interest, ExtractConfig, HaloSample};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepAxis {
    Yaw,
    Pitch,
    Z,
}

impl SweepAxis {
    pub fn name(&self) -> &'static str {
        match self {
            SweepAxis::Yaw => "yaw",
            SweepAxis::Pitch => "pitch",
            SweepAxis::Z => "z",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "yaw" => Some(SweepAxis::Yaw),
            "pitch" => Some(SweepAxis::Pitch),
            "z" => Some(SweepAxis::Z),
            _ => None,
        }
    }

    /// Value every curve on this axis is normalized to.
    pub fn reference(&self) -> f64 {
        match self {
            SweepAxis::Z => 0.5,
            _ => 0.0,
        }
    }

    fn apply(&self, base: CameraPose, value: f64) -> CameraPose {
        match self {
            SweepAxis::Yaw => CameraPose { yaw: value, ..base },
            SweepAxis::Pitch => CameraPose { pitch: value, ..base },
            SweepAxis::Z => CameraPose { z_distance: value, ..base },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepState {
    Hover,
    Subtle,
    Touch,
    Pressure,
}

impl SweepState {
    pub const ALL: [SweepState; 4] = [SweepState::Hover, SweepState::Subtle, SweepState::Touch, SweepState::Pressure];

    pub fn name(&self) -> &'static str {
        match self {
            SweepState::Hover => "hover",
            SweepState::Subtle => "subtle",
            SweepState::Touch => "touch",
            SweepState::Pressure => "pressure",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|st| st.name() == s)
    }

    /// Finger held at the surface origin in this state, 45 degrees up and
    /// lying across the plane the camera tilts in for `axis`, so the tilt
    /// never looks down the finger.
    pub fn finger(&self, axis: SweepAxis) -> FingerPose {
        let yaw = if axis == SweepAxis::Pitch { 180.0 } else { 270.0 };
        let base = FingerPose::touching(0.0, 0.0, 45.0, yaw);
        match self {
            SweepState::Hover => FingerPose { hover: 10.0, ..base },
            SweepState::Subtle => FingerPose { hover: 1.0, ..base },
            SweepState::Touch => base,
            SweepState::Pressure => base.with_pressure(1.0),
        }
    }
}

impl fmt::Display for SweepState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sweep {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
}

impl Sweep {
    fn stepped(axis: SweepAxis, from: f64, to: f64, step: f64) -> Self {
        let n = ((to - from) / step).round() as usize;
        let values = (0..=n).map(|i| ((from + i as f64 * step) * 1e6).round() / 1e6).collect();
        Self { axis, values }
    }

    pub fn yaw() -> Self {
        Self::stepped(SweepAxis::Yaw, 0.0, 50.0, 5.0)
    }

    pub fn pitch() -> Self {
        Self::stepped(SweepAxis::Pitch, -45.0, 45.0, 5.0)
    }

    pub fn z() -> Self {
        Self::stepped(SweepAxis::Z, 0.5, 1.0, 0.05)
    }

    pub fn defaults() -> Vec<Self> {
        vec![Self::yaw(), Self::pitch(), Self::z()]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CharacterizationRow {
    pub axis: SweepAxis,
    pub value: f64,
    pub state: SweepState,
    /// Seed-averaged raw strength.
    pub strength: f64,
    pub strength_norm: f64,
}

impl CharacterizationRow {
    pub fn param(&self) -> String {
        format!("{}={}", self.axis.name(), self.value)
    }
}

/// Renders only the pixels the extractor reads and extracts one sample
/// against the noise-free background.
pub fn sample_halo(renderer: &Renderer, finger: &FingerPose, frame_index: u64, seed: u64, cfg: &ExtractConfig) -> Result<HaloSample> {
    let scene = renderer.scene();
    let (w, h) = (scene.width, scene.height);
    // landmarks do not depend on the region, so a 1x1 render yields them cheaply
    let (_, lm) = renderer.render_roi(Some(finger), frame_index, seed, Rect { x0: 0, y0: 0, width: 1, height: 1 })?;
    let lm = lm.expect("a finger yields landmarks");
    let roi = region_of_interest(&lm, cfg, w, h).map_err(|e| MpisimError::Extract(e.to_string()))?;
    let (depth, _) = renderer.render_roi(Some(finger), frame_index, seed, roi)?;
    let mut values = Vec::with_capacity(roi.area());
    for y in roi.y0..roi.y1() {
        for x in roi.x0..roi.x1() {
            let d = depth[(y - roi.y0) * roi.width + (x - roi.x0)];
            let bg = renderer.surface_depth(x, y);
            values.push(if d == 0 || bg <= 0.0 { 0.0 } else { d as f64 - bg });
        }
    }
    let diff = DiffMap::with_roi(w, h, roi, values);
    extract_sample(&diff, &lm, renderer.camera(), cfg).map_err(|e| MpisimError::Extract(e.to_string()))
}

/// Seed-averaged strength for every (axis value, state), each curve
/// normalized to its value at the axis reference (0 degrees, 0.5 m).
pub fn characterize(base: &SceneSpec, sweeps: &[Sweep], seeds: u64) -> Result<Vec<CharacterizationRow>> {
    let cfg = ExtractConfig::default();
    let mut rows = Vec::new();
    for sweep in sweeps {
        let mut values = sweep.values.clone();
        let reference = sweep.axis.reference();
        if !values.contains(&reference) {
            values.insert(0, reference);
        }
        let mut strengths = vec![[0.0f64; 4]; values.len()];
        for (i, &v) in values.iter().enumerate() {
            let scene = base.clone().with_pose(sweep.axis.apply(base.camera_pose, v));
            let renderer = Renderer::new(scene)?;
            for (j, state) in SweepState::ALL.iter().enumerate() {
                let finger = state.finger(sweep.axis);
                let mut sum = 0.0;
                for s in 0..seeds.max(1) {
                    sum += sample_halo(&renderer, &finger, s, s, &cfg)?.raw_strength;
                }
                strengths[i][j] = sum / seeds.max(1) as f64;
            }
        }
        let r = values.iter().position(|&v| v == reference).unwrap();
        for (i, &v) in values.iter().enumerate() {
            if !sweep.values.contains(&v) {
                continue;
            }
            for (j, &state) in SweepState::ALL.iter().enumerate() {
                let norm = if strengths[r][j] > 0.0 { strengths[i][j] / strengths[r][j] } else { 0.0 };
                rows.push(CharacterizationRow { axis: sweep.axis, value: v, state, strength: strengths[i][j], strength_norm: norm });
            }
        }
    }
    Ok(rows)
}

pub fn write_characterization_csv<W: Write>(sink: W, rows: &[CharacterizationRow]) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["param", "state", "strength_norm"])?;
    for r in rows {
        w.write_record([r.param(), r.state.name().to_string(), format!("{:.6}", r.strength_norm)])?;
    }
    w.flush()
}
