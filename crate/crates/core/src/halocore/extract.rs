use serde::{Deserialize, Serialize};

use super::reveal::{label_of, HaloMap, DEFAULT_THRESHOLD, LABEL_HALO};
use super::{HalocoreError, LandmarkFrame, Result};
use crate::depthio::DiffMap;
use crate::geometry::{CameraModel, Rect};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExtractConfig {
    pub threshold: f64,
    pub patch_width: usize,
    pub patch_height: usize,
    /// Patch center distance ahead of the fingertip, px.
    pub patch_offset: f64,
}

impl Default for ExtractConfig {
    fn default() -> Self {
        Self { threshold: DEFAULT_THRESHOLD, patch_width: 30, patch_height: 20, patch_offset: 8.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HaloSample {
    pub frame_index: u64,
    /// Sum of above-threshold diffs in the patch, mm.
    pub raw_strength: f64,
    /// Fingertip position on the surface, mm.
    pub x: f64,
    pub y: f64,
    /// Finger pitch over the surface, degrees in [0, 90].
    pub pitch: f64,
    /// Image bearing of fingertip to fingerdip, degrees in [0, 360).
    pub yaw: f64,
    pub patch_origin: (usize, usize),
}

impl HaloSample {
    /// Corrector input row `[x, y, pitch, yaw]`.
    pub fn features(&self) -> [f64; 4] {
        [self.x, self.y, self.pitch, self.yaw]
    }
}

pub const FEATURE_NAMES: [&str; 4] = ["x", "y", "pitch", "yaw"];

fn check(lm: &LandmarkFrame, width: usize, height: usize) -> Result<(f64, f64)> {
    if !lm.in_bounds(width, height) {
        return Err(HalocoreError::OutOfBounds { frame_index: lm.frame_index });
    }
    let (du, dv) = (lm.dip.u - lm.tip.u, lm.dip.v - lm.tip.v);
    if du.hypot(dv) < 1e-6 {
        return Err(HalocoreError::DegenerateLandmarks { frame_index: lm.frame_index });
    }
    Ok((du, dv))
}

/// Unit image direction from the fingerdip toward the fingertip.
fn forward(lm: &LandmarkFrame) -> (f64, f64) {
    let (du, dv) = (lm.tip.u - lm.dip.u, lm.tip.v - lm.dip.v);
    let n = du.hypot(dv);
    (du / n, dv / n)
}

/// The extraction patch (clipped to the frame) for a landmark pair.
pub fn patch_rect(lm: &LandmarkFrame, cfg: &ExtractConfig, width: usize, height: usize) -> Result<Rect> {
    check(lm, width, height)?;
    let (fu, fv) = forward(lm);
    let cu = lm.tip.u + fu * cfg.patch_offset;
    let cv = lm.tip.v + fv * cfg.patch_offset;
    let x0 = (cu - cfg.patch_width as f64 / 2.0).round() as i64;
    let y0 = (cv - cfg.patch_height as f64 / 2.0).round() as i64;
    Ok(Rect::clipped(x0, y0, x0 + cfg.patch_width as i64, y0 + cfg.patch_height as i64, width, height))
}

/// Pixels the pipeline needs from a frame: the patch plus the tip-dip segment.
pub fn region_of_interest(lm: &LandmarkFrame, cfg: &ExtractConfig, width: usize, height: usize) -> Result<Rect> {
    let patch = patch_rect(lm, cfg, width, height)?;
    let seg = Rect::clipped(
        lm.tip.u.min(lm.dip.u).floor() as i64,
        lm.tip.v.min(lm.dip.v).floor() as i64,
        lm.tip.u.max(lm.dip.u).floor() as i64 + 1,
        lm.tip.v.max(lm.dip.v).floor() as i64 + 1,
        width,
        height,
    );
    Ok(patch.union(&seg))
}

/// Sum of diffs above `threshold` inside `patch`.
pub fn patch_strength(diff: &DiffMap, patch: Rect, threshold: f64) -> f64 {
    let mut sum = 0.0;
    for y in patch.y0..patch.y1() {
        for x in patch.x0..patch.x1() {
            let d = diff.get(x, y);
            if d > threshold {
                sum += d;
            }
        }
    }
    sum
}

/// Builds the corrector sample for one frame. Position comes from the
/// fingertip landmark back-projected to 3D and dropped onto the surface
/// plane; pitch from the 3D tip-to-dip rise over its planar run; yaw from
/// the image bearing of tip to dip (image up is positive).
pub fn extract_sample(diff: &DiffMap, lm: &LandmarkFrame, cam: &CameraModel, cfg: &ExtractConfig) -> Result<HaloSample> {
    let (du, dv) = check(lm, diff.width, diff.height)?;
    let patch = patch_rect(lm, cfg, diff.width, diff.height)?;
    let raw_strength = patch_strength(diff, patch, cfg.threshold);

    let tip = cam.backproject(lm.tip.u, lm.tip.v, lm.tip.depth);
    let dip = cam.backproject(lm.dip.u, lm.dip.v, lm.dip.depth);
    let run = (dip.x - tip.x).hypot(dip.y - tip.y);
    let pitch = (dip.z - tip.z).atan2(run).to_degrees().clamp(0.0, 90.0);
    let yaw = (-dv).atan2(du).to_degrees().rem_euclid(360.0);
    // rem_euclid may round a tiny negative up to 360
    let yaw = if yaw >= 360.0 { 0.0 } else { yaw };

    Ok(HaloSample {
        frame_index: lm.frame_index,
        raw_strength,
        x: tip.x,
        y: tip.y,
        pitch,
        yaw,
        patch_origin: (patch.x0, patch.y0),
    })
}

/// Halo pixels on the rasterized fingertip-fingerdip segment.
pub fn count_line_pixels(map: &HaloMap, lm: &LandmarkFrame) -> Result<usize> {
    check(lm, map.width, map.height)?;
    let (x0, y0) = (lm.tip.u.floor() as i64, lm.tip.v.floor() as i64);
    let (x1, y1) = (lm.dip.u.floor() as i64, lm.dip.v.floor() as i64);
    Ok(bresenham(x0, y0, x1, y1)
        .filter(|&(x, y)| map.at(x as usize, y as usize) == LABEL_HALO)
        .count())
}

/// [`count_line_pixels`] read straight from a diff, without building the
/// full label map.
pub fn count_line_pixels_in(diff: &DiffMap, lm: &LandmarkFrame, threshold: f64) -> Result<usize> {
    check(lm, diff.width, diff.height)?;
    let (x0, y0) = (lm.tip.u.floor() as i64, lm.tip.v.floor() as i64);
    let (x1, y1) = (lm.dip.u.floor() as i64, lm.dip.v.floor() as i64);
    Ok(bresenham(x0, y0, x1, y1)
        .filter(|&(x, y)| label_of(diff.get(x as usize, y as usize), threshold) == LABEL_HALO)
        .count())
}

/// Integer raster of the segment, endpoints included.
pub fn bresenham(x0: i64, y0: i64, x1: i64, y1: i64) -> impl Iterator<Item = (i64, i64)> {
    let dx = (x1 - x0).abs();
    let dy = -(y1 - y0).abs();
    let sx = if x0 < x1 { 1 } else { -1 };
    let sy = if y0 < y1 { 1 } else { -1 };
    let mut err = dx + dy;
    let (mut x, mut y) = (x0, y0);
    let mut done = false;
    std::iter::from_fn(move || {
        if done {
            return None;
        }
        let p = (x, y);
        if x == x1 && y == y1 {
            done = true;
        } else {
            let e2 = 2 * err;
            if e2 >= dy {
                err += dy;
                x += sx;
            }
            if e2 <= dx {
                err += dx;
                y += sy;
            }
        }
        Some(p)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::CameraPose;
    use crate::halocore::{Hand, Landmark};

    fn lm(tip: (f64, f64), dip: (f64, f64)) -> LandmarkFrame {
        LandmarkFrame {
            frame_index: 0,
            tip: Landmark { u: tip.0, v: tip.1, depth: 492.0 },
            dip: Landmark { u: dip.0, v: dip.1, depth: 474.0 },
            hand: Hand::Right,
        }
    }

    #[test]
    fn three_halo_pixels_sum() {
        let mut diff = DiffMap::zeros(64, 64);
        // finger points up the image; the patch sits above the tip
        let l = lm((32.0, 32.0), (32.0, 50.0));
        let patch = patch_rect(&l, &ExtractConfig::default(), 64, 64).unwrap();
        assert_eq!(patch, Rect { x0: 17, y0: 14, width: 30, height: 20 });
        diff.set(20, 20, 9.0);
        diff.set(21, 20, 10.0);
        diff.set(30, 25, 12.0);
        diff.set(31, 25, 7.0);
        diff.set(32, 25, -30.0);
        diff.set(5, 5, 50.0);
        let cam = CameraModel::new(64, 64, CameraPose::default());
        let s = extract_sample(&diff, &l, &cam, &ExtractConfig::default()).unwrap();
        assert_eq!(s.raw_strength, 31.0);
        assert_eq!(s.patch_origin, (17, 14));
    }

    #[test]
    fn angles_for_a_level_camera() {
        let cam = CameraModel::new(64, 64, CameraPose::default());
        // a 45 degree finger: 10 mm rise over a 10 mm run
        let tip = (32.0, 32.0, 490.0);
        let (u, v) = (32.0, 32.0 + 504.0 * 10.0 / 480.0);
        let l = LandmarkFrame {
            frame_index: 0,
            tip: Landmark { u: tip.0, v: tip.1, depth: tip.2 },
            dip: Landmark { u, v, depth: 480.0 },
            hand: Hand::Right,
        };
        let s = extract_sample(&DiffMap::zeros(64, 64), &l, &cam, &ExtractConfig::default()).unwrap();
        assert!((s.pitch - 45.0).abs() < 1e-9, "{}", s.pitch);
        assert!((s.yaw - 270.0).abs() < 1e-9);
        assert!(s.x.abs() < 1e-9 && s.y.abs() < 1e-9);
        assert_eq!(s.raw_strength, 0.0);
    }

    #[test]
    fn degenerate_and_out_of_bounds() {
        let cam = CameraModel::new(64, 64, CameraPose::default());
        let d = DiffMap::zeros(64, 64);
        let cfg = ExtractConfig::default();
        assert!(matches!(
            extract_sample(&d, &lm((10.0, 10.0), (10.0, 10.0)), &cam, &cfg),
            Err(HalocoreError::DegenerateLandmarks { .. })
        ));
        assert!(matches!(
            extract_sample(&d, &lm((70.0, 10.0), (10.0, 10.0)), &cam, &cfg),
            Err(HalocoreError::OutOfBounds { .. })
        ));
    }

    #[test]
    fn line_counts() {
        let l = lm((2.0, 3.0), (12.0, 8.0));
        let empty = HaloMap { width: 16, height: 16, labels: vec![0; 256] };
        assert_eq!(count_line_pixels(&empty, &l).unwrap(), 0);
        let full = HaloMap { width: 16, height: 16, labels: vec![LABEL_HALO; 256] };
        assert_eq!(count_line_pixels(&full, &l).unwrap(), 11);
    }

    #[test]
    fn line_count_from_diff_matches_label_map() {
        let l = lm((2.0, 3.0), (12.0, 8.0));
        let mut diff = DiffMap::zeros(16, 16);
        for (i, (x, y)) in bresenham(2, 3, 12, 8).enumerate() {
            diff.set(x as usize, y as usize, [9.0, 8.0, -4.0, 20.0][i % 4]);
        }
        let n = count_line_pixels_in(&diff, &l, 8.0).unwrap();
        assert_eq!(n, count_line_pixels(&super::super::reveal(&diff, 8.0), &l).unwrap());
        assert_eq!(n, 5);
    }

    #[test]
    fn bresenham_endpoints_and_length() {
        let pts: Vec<_> = bresenham(0, 0, 3, -7).collect();
        assert_eq!(pts.first(), Some(&(0, 0)));
        assert_eq!(pts.last(), Some(&(3, -7)));
        assert_eq!(pts.len(), 8);
        assert_eq!(bresenham(4, 4, 4, 4).count(), 1);
    }
}
