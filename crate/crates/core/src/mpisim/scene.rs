use serde::{Deserialize, Serialize};

use super::phasor::{unambiguous_range_mm, DEFAULT_MODULATION_HZ};
use super::{MpisimError, Result};
use crate::geometry::CameraPose;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MaterialRepr", into = "MaterialRepr")]
pub struct MaterialProfile {
    pub name: String,
    pub diffuse_gain: f64,
}

impl MaterialProfile {
    pub const PRESET_NAMES: [&'static str; 5] = ["suede", "paper", "wood", "plastic", "foam"];

    pub fn preset(name: &str) -> Option<Self> {
        let gain = match name {
            "suede" => 1.35,
            "paper" => 1.0,
            "wood" => 0.97,
            "plastic" => 0.93,
            "foam" => 0.7,
            _ => return None,
        };
        Some(Self { name: name.to_string(), diffuse_gain: gain })
    }

    pub fn presets() -> Vec<Self> {
        Self::PRESET_NAMES.iter().map(|n| Self::preset(n).unwrap()).collect()
    }

    pub fn paper() -> Self {
        Self::preset("paper").unwrap()
    }
}

/// Materials appear in scene files either as a preset name or inline.
#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum MaterialRepr {
    Preset(String),
    Custom { name: String, diffuse_gain: f64 },
}

impl TryFrom<MaterialRepr> for MaterialProfile {
    type Error = String;

    fn try_from(r: MaterialRepr) -> std::result::Result<Self, String> {
        match r {
            MaterialRepr::Preset(name) => {
                Self::preset(&name).ok_or_else(|| format!("unknown material preset {name:?}"))
            }
            MaterialRepr::Custom { name, diffuse_gain } if diffuse_gain > 0.0 && diffuse_gain.is_finite() => {
                Ok(Self { name, diffuse_gain })
            }
            MaterialRepr::Custom { name, .. } => Err(format!("material {name:?} needs a positive diffuse_gain")),
        }
    }
}

impl From<MaterialProfile> for MaterialRepr {
    fn from(m: MaterialProfile) -> Self {
        match MaterialProfile::preset(&m.name) {
            Some(p) if p == m => MaterialRepr::Preset(m.name),
            _ => MaterialRepr::Custom { name: m.name, diffuse_gain: m.diffuse_gain },
        }
    }
}

/// Per-user hand traits. Pilot users differ in these; the corrector and
/// calibration absorb the differences.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct UserProfile {
    pub id: String,
    /// Multiplier on halo amplitude (skin, nail, finger pad shape).
    pub halo_gain: f64,
    /// Finger pitch, degrees, at which the halo is strongest.
    pub pitch_peak: f64,
    pub finger_radius: f64,
    /// Fingertip center to distal joint, mm.
    pub dip_length: f64,
}

impl Default for UserProfile {
    fn default() -> Self {
        Self { id: "default".into(), halo_gain: 1.0, pitch_peak: 45.0, finger_radius: 8.0, dip_length: 25.0 }
    }
}

impl UserProfile {
    /// The three users whose sweeps seed the pilot corrector.
    pub fn pilots() -> Vec<Self> {
        vec![
            Self { id: "pilot1".into(), halo_gain: 0.9, pitch_peak: 42.0, finger_radius: 7.5, dip_length: 24.0 },
            Self { id: "pilot2".into(), halo_gain: 1.05, pitch_peak: 47.0, finger_radius: 8.0, dip_length: 25.0 },
            Self { id: "pilot3".into(), halo_gain: 1.15, pitch_peak: 44.0, finger_radius: 8.5, dip_length: 26.5 },
        ]
    }
}

/// Constants of the halo amplitude model. None of these are measured
/// quantities; they are shaped so the simulator reproduces the qualitative
/// behaviour a detector relies on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HaloParams {
    /// Peak multipath amplitude relative to the direct return.
    pub base_amplitude: f64,
    /// Extra one-way path of the surface multipath return, mm.
    pub surface_extra_path: f64,
    /// Halo ellipse semi-axes along and across the finger, px.
    pub semi_along_px: f64,
    pub semi_across_px: f64,
    /// Ellipse center offset ahead of the contact point, px.
    pub forward_offset_px: f64,
    /// Hover at which the halo appears for an ideal camera pose, mm.
    pub onset_mm: f64,
    pub onset_exponent: f64,
    /// Weights of the hover ramp and of the contact-only component, and the
    /// decay length of the latter.
    pub ramp_weight: f64,
    pub contact_weight: f64,
    pub contact_decay_mm: f64,
    pub pressure_gain: f64,
    /// Width of the finger pitch response, degrees.
    pub pitch_width: f64,
    /// Finger-yaw modulation depth and the bearing where it peaks.
    pub finger_yaw_depth: f64,
    pub finger_yaw_peak: f64,
    /// Radial fall-off over the surface: 1 - k (r / radius)^2.
    pub vignette_k: f64,
    pub vignette_radius_mm: f64,
    /// Exponents of the camera-pose quality that scales the onset height.
    pub onset_yaw_exp: f64,
    pub onset_pitch_exp: f64,
    pub onset_z_exp: f64,
    /// Camera-pose attenuation of the whole halo: linear in |sin yaw|,
    /// power laws in cos pitch and in the distance ratio.
    pub view_yaw_slope: f64,
    pub view_pitch_exp: f64,
    pub view_z_exp: f64,
    /// Finger-surface corner interference on the finger underside region:
    /// fades out with hover up to `corner_onset_mm` and with the underside's
    /// rise along the finger over `corner_range_mm`.
    pub corner_amplitude: f64,
    pub corner_onset_mm: f64,
    pub corner_range_mm: f64,
    pub corner_extra_path: f64,
    /// Hover below which finger edges blend with the surface, mm.
    pub averaging_range_mm: f64,
    /// Visible finger length from the tip sphere center, mm.
    pub finger_length: f64,
    /// Reference camera distance for the pose laws, m.
    pub reference_z: f64,
}

impl Default for HaloParams {
    fn default() -> Self {
        Self {
            base_amplitude: 0.8,
            surface_extra_path: 80.0,
            semi_along_px: 12.0,
            semi_across_px: 8.0,
            forward_offset_px: 8.0,
            onset_mm: 20.0,
            onset_exponent: 1.5,
            ramp_weight: 0.65,
            contact_weight: 0.8,
            contact_decay_mm: 0.4,
            pressure_gain: 0.8,
            pitch_width: 22.0,
            finger_yaw_depth: 0.12,
            finger_yaw_peak: 30.0,
            vignette_k: 0.25,
            vignette_radius_mm: 150.0,
            onset_yaw_exp: 2.0,
            onset_pitch_exp: 6.5,
            onset_z_exp: 0.35,
            view_yaw_slope: 0.55,
            view_pitch_exp: 0.5,
            view_z_exp: 0.12,
            corner_amplitude: 3.0,
            corner_onset_mm: 18.0,
            corner_range_mm: 26.0,
            corner_extra_path: 60.0,
            averaging_range_mm: 30.0,
            finger_length: 70.0,
            reference_z: 0.5,
        }
    }
}

fn default_width() -> usize {
    640
}
fn default_height() -> usize {
    576
}
fn default_frequency() -> f64 {
    DEFAULT_MODULATION_HZ
}
fn default_noise() -> f64 {
    2.0
}
fn default_gain() -> f64 {
    1.0
}
fn default_landmark_noise_px() -> f64 {
    0.3
}
fn default_landmark_noise_mm() -> f64 {
    0.4
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    #[serde(default = "default_width")]
    pub width: usize,
    #[serde(default = "default_height")]
    pub height: usize,
    #[serde(default)]
    pub camera_pose: CameraPose,
    pub material: MaterialProfile,
    #[serde(default = "default_frequency")]
    pub modulation_frequency: f64,
    #[serde(default = "default_noise")]
    pub noise_sigma: f64,
    #[serde(default = "default_gain")]
    pub global_mpi_gain: f64,
    #[serde(default)]
    pub user: UserProfile,
    #[serde(default = "default_landmark_noise_px")]
    pub landmark_noise_px: f64,
    #[serde(default = "default_landmark_noise_mm")]
    pub landmark_noise_mm: f64,
    #[serde(default)]
    pub halo: HaloParams,
}

impl Default for SceneSpec {
    fn default() -> Self {
        Self {
            width: default_width(),
            height: default_height(),
            camera_pose: CameraPose::default(),
            material: MaterialProfile::paper(),
            modulation_frequency: DEFAULT_MODULATION_HZ,
            noise_sigma: default_noise(),
            global_mpi_gain: 1.0,
            user: UserProfile::default(),
            landmark_noise_px: default_landmark_noise_px(),
            landmark_noise_mm: default_landmark_noise_mm(),
            halo: HaloParams::default(),
        }
    }
}

impl SceneSpec {
    /// Camera-to-surface distance along the optical axis, mm.
    pub fn surface_z(&self) -> f64 {
        self.camera_pose.z_distance * 1000.0
    }

    pub fn with_size(mut self, width: usize, height: usize) -> Self {
        self.width = width;
        self.height = height;
        self
    }

    pub fn with_material(mut self, material: MaterialProfile) -> Self {
        self.material = material;
        self
    }

    pub fn with_pose(mut self, pose: CameraPose) -> Self {
        self.camera_pose = pose;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(MpisimError::InvalidScene(m));
        if self.width == 0 || self.height == 0 || self.width > u16::MAX as usize || self.height > u16::MAX as usize {
            return bad(format!("frame size {}x{} out of range", self.width, self.height));
        }
        if !self.camera_pose.is_valid() || self.camera_pose.yaw.abs() >= 80.0 || self.camera_pose.pitch.abs() >= 80.0 {
            return bad(format!("invalid camera pose {:?}", self.camera_pose));
        }
        if !(self.modulation_frequency > 0.0 && self.modulation_frequency.is_finite()) {
            return bad("modulation_frequency must be positive".into());
        }
        let range = unambiguous_range_mm(self.modulation_frequency);
        if self.surface_z() >= range {
            return bad(format!("surface at {:.0} mm is beyond the {range:.0} mm unambiguous range", self.surface_z()));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return bad("noise_sigma must be >= 0".into());
        }
        if !(self.global_mpi_gain >= 0.0 && self.global_mpi_gain.is_finite()) {
            return bad("global_mpi_gain must be >= 0".into());
        }
        if self.material.diffuse_gain <= 0.0 {
            return bad("diffuse_gain must be positive".into());
        }
        let u = &self.user;
        if !(u.halo_gain >= 0.0 && u.finger_radius > 0.0 && u.dip_length > 0.0 && u.pitch_peak.is_finite()) {
            return bad(format!("invalid user profile {u:?}"));
        }
        if !(self.landmark_noise_px >= 0.0 && self.landmark_noise_mm >= 0.0) {
            return bad("landmark noise must be >= 0".into());
        }
        Ok(())
    }
}

/// Finger state over the surface. Angles in degrees; `yaw` is the surface
/// bearing of the fingertip-to-fingerdip direction, counter-clockwise from +X.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FingerPose {
    pub x: f64,
    pub y: f64,
    pub hover: f64,
    #[serde(default)]
    pub pressure: f64,
    pub pitch: f64,
    pub yaw: f64,
    #[serde(default)]
    pub roll: f64,
}

impl FingerPose {
    pub fn touching(x: f64, y: f64, pitch: f64, yaw: f64) -> Self {
        Self { x, y, hover: 0.0, pressure: 0.0, pitch, yaw, roll: 0.0 }
    }

    pub fn hovering(x: f64, y: f64, hover: f64, pitch: f64, yaw: f64) -> Self {
        Self { x, y, hover, pressure: 0.0, pitch, yaw, roll: 0.0 }
    }

    pub fn with_pressure(mut self, pressure: f64) -> Self {
        self.pressure = pressure;
        self
    }

    pub fn contact(&self) -> bool {
        self.hover == 0.0
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(MpisimError::InvalidPose(m));
        let finite = [self.x, self.y, self.hover, self.pressure, self.pitch, self.yaw, self.roll];
        if finite.iter().any(|v| !v.is_finite()) {
            return bad("non-finite field".into());
        }
        if self.hover < 0.0 {
            return bad(format!("hover {} < 0", self.hover));
        }
        if !(0.0..=1.0).contains(&self.pressure) {
            return bad(format!("pressure {} outside [0, 1]", self.pressure));
        }
        if self.pressure > 0.0 && self.hover > 0.0 {
            return bad("pressure requires contact".into());
        }
        if !(5.0..=85.0).contains(&self.pitch) {
            return bad(format!("finger pitch {} outside [5, 85]", self.pitch));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preset_ordering() {
        let g = |n| MaterialProfile::preset(n).unwrap().diffuse_gain;
        assert!(g("suede") > g("paper"));
        assert!(g("paper") >= g("wood") && g("wood") >= g("plastic"));
        assert!(g("plastic") > g("foam"));
        assert!(MaterialProfile::preset("glass").is_none());
    }

    #[test]
    fn material_json_forms() {
        let m: MaterialProfile = serde_json::from_str("\"wood\"").unwrap();
        assert_eq!(m, MaterialProfile::preset("wood").unwrap());
        let c: MaterialProfile = serde_json::from_str(r#"{"name":"cork","diffuse_gain":0.8}"#).unwrap();
        assert_eq!(c.diffuse_gain, 0.8);
        assert_eq!(serde_json::to_string(&m).unwrap(), "\"wood\"");
        assert!(serde_json::from_str::<MaterialProfile>("\"glass\"").is_err());
        assert!(serde_json::from_str::<MaterialProfile>(r#"{"name":"x","diffuse_gain":0}"#).is_err());
    }

    #[test]
    fn scene_defaults_fill_in() {
        let s: SceneSpec = serde_json::from_str(r#"{"material":"paper"}"#).unwrap();
        assert_eq!(s, SceneSpec::default());
        s.validate().unwrap();
        assert_eq!(s.surface_z(), 500.0);
    }

    #[test]
    fn scene_range_check() {
        let mut s = SceneSpec::default();
        s.camera_pose.z_distance = 3.5;
        assert!(s.validate().is_err());
    }

    #[test]
    fn pose_validation() {
        assert!(FingerPose::touching(0.0, 0.0, 45.0, 270.0).with_pressure(0.5).validate().is_ok());
        assert!(FingerPose::hovering(0.0, 0.0, 3.0, 45.0, 270.0).with_pressure(0.5).validate().is_err());
        assert!(FingerPose::hovering(0.0, 0.0, -1.0, 45.0, 270.0).validate().is_err());
        assert!(FingerPose::touching(0.0, 0.0, 2.0, 270.0).validate().is_err());
    }
}
