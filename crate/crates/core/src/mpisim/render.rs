use nalgebra::{Point3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::phasor::{phasor_depth_unchecked, two_path_depth, PathComponent};
use super::scene::{FingerPose, SceneSpec};
use super::{MpisimError, Result};
use crate::depthio::{BackgroundModel, DepthFrame};
use crate::geometry::{CameraModel, Rect};
use crate::halocore::{Hand, Landmark, LandmarkFrame};

/// Per-frame simulator truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthRecord {
    pub frame_index: u64,
    pub timestamp_us: u64,
    pub pose: Option<FingerPose>,
    pub contact: bool,
    pub pressure: f64,
    pub tip_px: Option<(f64, f64)>,
    pub dip_px: Option<(f64, f64)>,
}

#[derive(Debug, Clone)]
pub struct RenderedFrame {
    pub frame: DepthFrame,
    pub truth: GroundTruthRecord,
    pub landmarks: Option<LandmarkFrame>,
}

/// Renders depth frames for one scene; the noise-free surface is cached.
#[derive(Debug, Clone)]
pub struct Renderer {
    scene: SceneSpec,
    camera: CameraModel,
    surface: Vec<f64>,
}

/// Everything about the finger that is constant over one frame.
struct FingerGeom {
    pose: FingerPose,
    tip: Point3<f64>,
    end: Point3<f64>,
    dip: Point3<f64>,
    radius: f64,
    sin_pitch: f64,
    tip_px: (f64, f64),
    end_px: (f64, f64),
    radius_px: f64,
    finger_box: Rect,
    halo_center: (f64, f64),
    forward: (f64, f64),
    halo_box: Rect,
    halo_amp: f64,
    corner_gain: f64,
    averaging: bool,
}

const LANDMARK_STREAM: u64 = u64::MAX;

fn rng_for(seed: u64, frame: u64, stream: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&frame.to_le_bytes());
    key[16..24].copy_from_slice(&stream.to_le_bytes());
    key[24..].copy_from_slice(b"halosim1");
    ChaCha8Rng::from_seed(key)
}

fn segment_distance(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (abx, aby) = (b.0 - a.0, b.1 - a.1);
    let (apx, apy) = (p.0 - a.0, p.1 - a.1);
    let len2 = abx * abx + aby * aby;
    let t = if len2 > 0.0 { ((apx * abx + apy * aby) / len2).clamp(0.0, 1.0) } else { 0.0 };
    let (dx, dy) = (apx - t * abx, apy - t * aby);
    (dx * dx + dy * dy).sqrt()
}

impl Renderer {
    pub fn new(scene: SceneSpec) -> Result<Self> {
        scene.validate()?;
        let camera = CameraModel::new(scene.width, scene.height, scene.camera_pose);
        let mut surface = Vec::with_capacity(scene.width * scene.height);
        for v in 0..scene.height {
            for u in 0..scene.width {
                surface.push(camera.surface_depth(u as f64 + 0.5, v as f64 + 0.5).unwrap_or(0.0));
            }
        }
        Ok(Self { scene, camera, surface })
    }

    pub fn scene(&self) -> &SceneSpec {
        &self.scene
    }

    pub fn camera(&self) -> &CameraModel {
        &self.camera
    }

    /// Noise-free surface depth at a pixel; 0 where the ray misses the plane.
    pub fn surface_depth(&self, x: usize, y: usize) -> f64 {
        self.surface[y * self.scene.width + x]
    }

    /// Background equal to the exact expected surface depth, standing in for
    /// a long average of empty frames.
    pub fn ideal_background(&self) -> BackgroundModel {
        BackgroundModel {
            width: self.scene.width,
            height: self.scene.height,
            mean_depth: self.surface.clone(),
            valid_mask: self.surface.iter().map(|&d| d > 0.0).collect(),
            frames_used: 0,
        }
    }

    fn pose_factors(&self) -> (f64, f64) {
        let h = &self.scene.halo;
        let p = &self.scene.camera_pose;
        let cy = p.yaw.to_radians().cos().max(0.0);
        let cp = p.pitch.to_radians().cos().max(0.0);
        let zr = h.reference_z / p.z_distance;
        let quality = cy.powf(h.onset_yaw_exp) * cp.powf(h.onset_pitch_exp) * zr.powf(h.onset_z_exp);
        let view = (1.0 - h.view_yaw_slope * p.yaw.to_radians().sin().abs()).max(0.0)
            * cp.powf(h.view_pitch_exp)
            * zr.powf(h.view_z_exp);
        (quality, view)
    }

    /// Hover dependence of the surface halo: `ramp_weight + contact_weight`
    /// at contact, 0 from the pose-dependent onset height up.
    pub fn hover_response(&self, hover: f64) -> f64 {
        let h = &self.scene.halo;
        let (quality, _) = self.pose_factors();
        let onset = h.onset_mm * quality;
        let ramp = if hover < onset { (1.0 - hover / onset).powf(h.onset_exponent) } else { 0.0 };
        let contact = if hover < 20.0 * h.contact_decay_mm { (-hover / h.contact_decay_mm).exp() } else { 0.0 };
        h.ramp_weight * ramp + h.contact_weight * contact
    }

    /// Gain shared by the surface halo and the underside interference.
    fn common_gain(&self, finger: &FingerPose) -> f64 {
        let h = &self.scene.halo;
        let (_, view) = self.pose_factors();
        let pitch = ((finger.pitch - self.scene.user.pitch_peak) / h.pitch_width).powi(2);
        let r = finger.x.hypot(finger.y) / h.vignette_radius_mm;
        let vignette = (1.0 - h.vignette_k * r * r).max(0.5);
        let yaw = 1.0 + h.finger_yaw_depth * (finger.yaw - h.finger_yaw_peak).to_radians().cos();
        self.scene.material.diffuse_gain
            * self.scene.global_mpi_gain
            * self.scene.user.halo_gain
            * view
            * (-pitch).exp()
            * vignette
            * yaw
            * (1.0 + h.pressure_gain * finger.pressure)
    }

    /// Peak amplitude of the surface multipath return for `finger`.
    pub fn halo_amplitude(&self, finger: &FingerPose) -> f64 {
        self.scene.halo.base_amplitude * self.common_gain(finger) * self.hover_response(finger.hover)
    }

    fn finger_geom(&self, pose: &FingerPose) -> Result<FingerGeom> {
        pose.validate()?;
        let cam = &self.camera;
        let h = &self.scene.halo;
        let user = &self.scene.user;
        let (pitch, yaw) = (pose.pitch.to_radians(), pose.yaw.to_radians());
        let axis = Vector3::new(pitch.cos() * yaw.cos(), pitch.cos() * yaw.sin(), pitch.sin());
        let radius = user.finger_radius;
        // pressing flattens the pad a little
        let tip = Point3::new(pose.x, pose.y, pose.hover + radius - 1.5 * pose.pressure);
        let end = tip + axis * h.finger_length;
        let dip = tip + axis * user.dip_length;

        let outside = || MpisimError::FingerOutsideFrame { x: pose.x, y: pose.y };
        let proj = |p: &Point3<f64>| -> Result<(f64, f64, f64)> {
            cam.project(p).filter(|&(u, v, _)| cam.in_frame(u, v)).ok_or_else(outside)
        };
        let (tu, tv, tz) = proj(&tip)?;
        proj(&dip)?;
        let (eu, ev, ez) = cam.project(&end).ok_or_else(outside)?;
        let radius_px = cam.focal_px * radius / tz.min(ez);

        let margin = radius_px + 2.0;
        let finger_box = Rect::clipped(
            (tu.min(eu) - margin).floor() as i64,
            (tv.min(ev) - margin).floor() as i64,
            (tu.max(eu) + margin).ceil() as i64 + 1,
            (tv.max(ev) + margin).ceil() as i64 + 1,
            cam.width,
            cam.height,
        );

        let contact = Point3::new(pose.x, pose.y, 0.0);
        let (cu, cv, _) = cam.project(&contact).ok_or_else(outside)?;
        let ahead = contact + Vector3::new(-yaw.cos(), -yaw.sin(), 0.0) * 5.0;
        let (au, av, _) = cam.project(&ahead).ok_or_else(outside)?;
        let norm = (au - cu).hypot(av - cv).max(1e-9);
        let forward = ((au - cu) / norm, (av - cv) / norm);
        let halo_center = (cu + forward.0 * h.forward_offset_px, cv + forward.1 * h.forward_offset_px);
        let reach = h.semi_along_px.max(h.semi_across_px) + 1.0;
        let halo_box = Rect::clipped(
            (halo_center.0 - reach).floor() as i64,
            (halo_center.1 - reach).floor() as i64,
            (halo_center.0 + reach).ceil() as i64 + 1,
            (halo_center.1 + reach).ceil() as i64 + 1,
            cam.width,
            cam.height,
        );

        let (quality, _) = self.pose_factors();
        Ok(FingerGeom {
            pose: *pose,
            tip,
            end,
            dip,
            radius,
            sin_pitch: pitch.sin(),
            tip_px: (tu, tv),
            end_px: (eu, ev),
            radius_px,
            finger_box,
            halo_center,
            forward,
            halo_box,
            halo_amp: self.halo_amplitude(pose),
            corner_gain: h.corner_amplitude * self.common_gain(pose) * (1.0 - pose.hover / (h.corner_onset_mm * quality)).max(0.0),
            averaging: pose.hover <= h.averaging_range_mm,
        })
    }

    /// Ray/capsule intersection; returns camera depth and axial position.
    fn hit_finger(&self, g: &FingerGeom, u: f64, v: f64) -> Option<(f64, f64)> {
        let ro = self.camera.center();
        let rd = self.camera.ray_world(u, v);
        let rr = rd.dot(&rd);
        let r2 = g.radius * g.radius;
        let ba = g.end - g.tip;
        let oa = ro - g.tip;
        let baba = ba.dot(&ba);
        let bard = ba.dot(&rd);
        let baoa = ba.dot(&oa);
        let mut best: Option<(f64, f64)> = None;
        let mut keep = |t: f64, s: f64| {
            if t > 0.0 && best.map_or(true, |(bt, _)| t < bt) {
                best = Some((t, s));
            }
        };

        let a = baba * rr - bard * bard;
        if a > 1e-12 {
            let b = baba * rd.dot(&oa) - baoa * bard;
            let c = baba * oa.dot(&oa) - baoa * baoa - r2 * baba;
            let h = b * b - a * c;
            if h < 0.0 {
                // missing the infinite cylinder misses the capsule too
                return None;
            }
            let t = (-b - h.sqrt()) / a;
            let y = baoa + t * bard;
            if y > 0.0 && y < baba {
                keep(t, y / baba.sqrt());
            }
        }
        for (center, s) in [(g.tip, 0.0), (g.end, baba.sqrt())] {
            let oc = ro - center;
            let b = rd.dot(&oc);
            let h = b * b - rr * (oc.dot(&oc) - r2);
            if h >= 0.0 {
                keep((-b - h.sqrt()) / rr, s);
            }
        }
        best
    }

    fn halo_weight(&self, g: &FingerGeom, u: f64, v: f64) -> f64 {
        let h = &self.scene.halo;
        let (dx, dy) = (u - g.halo_center.0, v - g.halo_center.1);
        let along = (dx * g.forward.0 + dy * g.forward.1) / h.semi_along_px;
        let across = (-dx * g.forward.1 + dy * g.forward.0) / h.semi_across_px;
        (1.0 - along * along - across * across).max(0.0)
    }

    /// Pushes the components one sub-ray contributes, scaled by `weight`;
    /// returns whether the sub-ray hit the finger.
    fn sample_components(&self, g: &FingerGeom, u: f64, v: f64, surface: f64, weight: f64, out: &mut Vec<PathComponent>) -> bool {
        let h = &self.scene.halo;
        match self.hit_finger(g, u, v).filter(|&(t, _)| surface <= 0.0 || t < surface) {
            Some((t, s)) => {
                out.push(PathComponent::new(weight, t));
                let rise = s * g.sin_pitch;
                let gap = g.pose.hover + rise;
                let a = g.corner_gain * (1.0 - rise / h.corner_range_mm).max(0.0);
                if a > 0.0 {
                    out.push(PathComponent::new(weight * a, t + h.corner_extra_path + 2.0 * gap));
                }
                true
            }
            None if surface > 0.0 => {
                out.push(PathComponent::new(weight, surface));
                let a = g.halo_amp * self.halo_weight(g, u, v);
                if a > 0.0 {
                    out.push(PathComponent::new(weight * a, surface + h.surface_extra_path));
                }
                false
            }
            None => false,
        }
    }

    /// Noise-free measured depth at pixel `(x, y)`; 0 for no return.
    fn pixel_depth(&self, g: Option<&FingerGeom>, x: usize, y: usize, scratch: &mut Vec<PathComponent>) -> f64 {
        let surface = self.surface_depth(x, y);
        let Some(g) = g else { return surface };
        let f = self.scene.modulation_frequency;
        let (u, v) = (x as f64 + 0.5, y as f64 + 0.5);

        if g.finger_box.contains(x, y) {
            let d = segment_distance((u, v), g.tip_px, g.end_px);
            if d < g.radius_px + 1.5 {
                scratch.clear();
                if d < g.radius_px - 1.5 {
                    self.sample_components(g, u, v, surface, 1.0, scratch);
                } else {
                    let mut finger_hits = 0;
                    for (ou, ov) in [(-0.25, -0.25), (0.25, -0.25), (-0.25, 0.25), (0.25, 0.25)] {
                        if self.sample_components(g, u + ou, v + ov, surface, 0.25, scratch) {
                            finger_hits += 1;
                        }
                    }
                    if !g.averaging {
                        // far from the surface, edge pixels snap to the majority return
                        scratch.clear();
                        if finger_hits >= 2 {
                            self.sample_components(g, u, v, surface, 1.0, scratch);
                            if scratch.is_empty() {
                                return surface;
                            }
                        } else {
                            return self.surface_with_halo(g, u, v, surface);
                        }
                    }
                }
                if scratch.is_empty() {
                    return 0.0;
                }
                return phasor_depth_unchecked(scratch, f);
            }
        }
        self.surface_with_halo(g, u, v, surface)
    }

    fn surface_with_halo(&self, g: &FingerGeom, u: f64, v: f64, surface: f64) -> f64 {
        if surface <= 0.0 || g.halo_amp <= 0.0 || !g.halo_box.contains(u as usize, v as usize) {
            return surface;
        }
        let a = g.halo_amp * self.halo_weight(g, u, v);
        two_path_depth(surface, a, self.scene.halo.surface_extra_path, self.scene.modulation_frequency)
    }

    fn landmarks(&self, g: &FingerGeom, frame_index: u64, seed: u64) -> Result<LandmarkFrame> {
        let mut rng = rng_for(seed, frame_index, LANDMARK_STREAM);
        let (spx, smm) = (self.scene.landmark_noise_px, self.scene.landmark_noise_mm);
        let cam = &self.camera;
        let mut mark = |p: &Point3<f64>| -> Result<Landmark> {
            let (u, v, z) = cam.project(p).ok_or(MpisimError::FingerOutsideFrame { x: p.x, y: p.y })?;
            let nu: f64 = rng.sample(StandardNormal);
            let nv: f64 = rng.sample(StandardNormal);
            let nz: f64 = rng.sample(StandardNormal);
            let u = (u + spx * nu).clamp(0.0, cam.width as f64 - 1e-6);
            let v = (v + spx * nv).clamp(0.0, cam.height as f64 - 1e-6);
            Ok(Landmark { u, v, depth: z + smm * nz })
        };
        let tip = mark(&g.tip)?;
        let dip = mark(&g.dip)?;
        Ok(LandmarkFrame { frame_index, tip, dip, hand: Hand::Right })
    }

    /// Renders `roi` of a frame into a row-major buffer of `roi.area()` values.
    /// Values match a full-frame render at the same pixels bit for bit.
    pub fn render_roi(
        &self,
        finger: Option<&FingerPose>,
        frame_index: u64,
        seed: u64,
        roi: Rect,
    ) -> Result<(Vec<u16>, Option<LandmarkFrame>)> {
        let geom = finger.map(|p| self.finger_geom(p)).transpose()?;
        let roi = Rect::clipped(roi.x0 as i64, roi.y0 as i64, roi.x1() as i64, roi.y1() as i64, self.scene.width, self.scene.height);
        let sigma = self.scene.noise_sigma;
        let mut out = Vec::with_capacity(roi.area());
        let mut scratch = Vec::with_capacity(16);
        for y in roi.y0..roi.y1() {
            let mut rng = rng_for(seed, frame_index, y as u64);
            for x in 0..roi.x1() {
                let noise: f64 = if sigma > 0.0 { rng.sample(StandardNormal) } else { 0.0 };
                if x < roi.x0 {
                    continue;
                }
                let d = self.pixel_depth(geom.as_ref(), x, y, &mut scratch);
                out.push(if d <= 0.0 { 0 } else { (d + sigma * noise).round().clamp(1.0, u16::MAX as f64) as u16 });
            }
        }
        let landmarks = geom.as_ref().map(|g| self.landmarks(g, frame_index, seed)).transpose()?;
        Ok((out, landmarks))
    }

    pub fn render(&self, finger: Option<&FingerPose>, frame_index: u64, timestamp_us: u64, seed: u64) -> Result<RenderedFrame> {
        let full = Rect::full(self.scene.width, self.scene.height);
        let (depth, landmarks) = self.render_roi(finger, frame_index, seed, full)?;
        let frame = DepthFrame { width: full.width, height: full.height, timestamp_us, frame_index, depth, ir: None };
        let geom = finger.map(|p| self.finger_geom(p)).transpose()?;
        let truth = GroundTruthRecord {
            frame_index,
            timestamp_us,
            pose: finger.copied(),
            contact: finger.is_some_and(|p| p.contact()),
            pressure: finger.map_or(0.0, |p| p.pressure),
            tip_px: geom.as_ref().map(|g| g.tip_px),
            dip_px: geom.as_ref().and_then(|g| self.camera.project(&g.dip).map(|(u, v, _)| (u, v))),
        };
        Ok(RenderedFrame { frame, truth, landmarks })
    }
}

/// One-off render of frame 0.
pub fn render_frame(scene: &SceneSpec, finger: &FingerPose, seed: u64) -> Result<RenderedFrame> {
    Renderer::new(scene.clone())?.render(Some(finger), 0, 0, seed)
}
