//! Pinhole camera over a planar surface.
//!
//! World frame: the surface is the plane `Z = 0` with `Z` pointing toward the
//! camera, `X` to the image right and `Y` to the image top. All lengths are
//! millimeters. Camera frame: `x` right, `y` down, `z` along the optical
//! axis; depth values are camera-frame `z`.

use nalgebra::{Point3, Rotation3, Vector3};
use serde::{Deserialize, Serialize};

/// Focal length in pixels of the narrow-FOV unbinned depth mode. Streams do
/// not carry intrinsics; every frame size shares this focal length with the
/// principal point at the frame center.
pub const DEFAULT_FOCAL_PX: f64 = 504.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraPose {
    /// Distance from the camera center to the surface along the optical axis, meters.
    pub z_distance: f64,
    /// Sideways tilt of the optical axis, degrees.
    pub yaw: f64,
    /// Forward tilt of the optical axis, degrees.
    pub pitch: f64,
}

impl Default for CameraPose {
    fn default() -> Self {
        Self { z_distance: 0.5, yaw: 0.0, pitch: 0.0 }
    }
}

impl CameraPose {
    pub fn is_valid(&self) -> bool {
        self.z_distance > 0.0 && self.z_distance.is_finite() && self.yaw.is_finite() && self.pitch.is_finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Rect {
    pub x0: usize,
    pub y0: usize,
    pub width: usize,
    pub height: usize,
}

impl Rect {
    pub fn full(width: usize, height: usize) -> Self {
        Self { x0: 0, y0: 0, width, height }
    }

    pub fn x1(&self) -> usize {
        self.x0 + self.width
    }

    pub fn y1(&self) -> usize {
        self.y0 + self.height
    }

    pub fn area(&self) -> usize {
        self.width * self.height
    }

    pub fn contains(&self, x: usize, y: usize) -> bool {
        x >= self.x0 && x < self.x1() && y >= self.y0 && y < self.y1()
    }

    /// Rectangle spanning `[x0, x1) x [y0, y1)` in signed coordinates,
    /// clipped to a `width x height` frame.
    pub fn clipped(x0: i64, y0: i64, x1: i64, y1: i64, width: usize, height: usize) -> Self {
        let cx0 = x0.clamp(0, width as i64) as usize;
        let cy0 = y0.clamp(0, height as i64) as usize;
        let cx1 = x1.clamp(0, width as i64) as usize;
        let cy1 = y1.clamp(0, height as i64) as usize;
        Self { x0: cx0, y0: cy0, width: cx1.saturating_sub(cx0), height: cy1.saturating_sub(cy0) }
    }

    pub fn union(&self, other: &Rect) -> Rect {
        if self.area() == 0 {
            return *other;
        }
        if other.area() == 0 {
            return *self;
        }
        let x0 = self.x0.min(other.x0);
        let y0 = self.y0.min(other.y0);
        Rect { x0, y0, width: self.x1().max(other.x1()) - x0, height: self.y1().max(other.y1()) - y0 }
    }
}

#[derive(Debug, Clone)]
pub struct CameraModel {
    pub width: usize,
    pub height: usize,
    pub focal_px: f64,
    pub cx: f64,
    pub cy: f64,
    pub pose: CameraPose,
    cam_to_world: Rotation3<f64>,
    center: Point3<f64>,
}

impl CameraModel {
    pub fn new(width: usize, height: usize, pose: CameraPose) -> Self {
        Self::with_focal(width, height, pose, DEFAULT_FOCAL_PX)
    }

    pub fn with_focal(width: usize, height: usize, pose: CameraPose, focal_px: f64) -> Self {
        // camera x = world X, camera y = world -Y, camera z = world -Z
        let base = Rotation3::from_matrix_unchecked(nalgebra::Matrix3::new(
            1.0, 0.0, 0.0, //
            0.0, -1.0, 0.0, //
            0.0, 0.0, -1.0,
        ));
        let tilt = Rotation3::from_axis_angle(&Vector3::x_axis(), pose.pitch.to_radians())
            * Rotation3::from_axis_angle(&Vector3::y_axis(), pose.yaw.to_radians());
        let cam_to_world = base * tilt;
        let axis = cam_to_world * Vector3::z();
        let center = Point3::origin() - axis * (pose.z_distance * 1000.0);
        Self {
            width,
            height,
            focal_px,
            cx: width as f64 / 2.0,
            cy: height as f64 / 2.0,
            pose,
            cam_to_world,
            center,
        }
    }

    pub fn center(&self) -> Point3<f64> {
        self.center
    }

    /// Camera-frame ray through continuous image coordinates, scaled so `z == 1`.
    #[inline]
    pub fn ray_camera(&self, u: f64, v: f64) -> Vector3<f64> {
        Vector3::new((u - self.cx) / self.focal_px, (v - self.cy) / self.focal_px, 1.0)
    }

    /// World-frame ray through `(u, v)`; advancing by `t` moves `t` mm in depth.
    #[inline]
    pub fn ray_world(&self, u: f64, v: f64) -> Vector3<f64> {
        self.cam_to_world * self.ray_camera(u, v)
    }

    /// Depth of the surface plane seen through `(u, v)`, if the ray hits it.
    pub fn surface_depth(&self, u: f64, v: f64) -> Option<f64> {
        let d = self.ray_world(u, v);
        if d.z >= 0.0 {
            return None;
        }
        let t = -self.center.z / d.z;
        (t > 0.0).then_some(t)
    }

    /// Camera-frame coordinates of a world point.
    pub fn world_to_camera(&self, p: &Point3<f64>) -> Vector3<f64> {
        self.cam_to_world.inverse() * (p - self.center)
    }

    /// `(u, v, depth)` of a world point, or `None` behind the camera.
    pub fn project(&self, p: &Point3<f64>) -> Option<(f64, f64, f64)> {
        let c = self.world_to_camera(p);
        if c.z <= 0.0 {
            return None;
        }
        Some((self.focal_px * c.x / c.z + self.cx, self.focal_px * c.y / c.z + self.cy, c.z))
    }

    /// Camera-frame point at image position `(u, v)` and the given depth.
    pub fn backproject_camera(&self, u: f64, v: f64, depth: f64) -> Vector3<f64> {
        self.ray_camera(u, v) * depth
    }

    pub fn backproject(&self, u: f64, v: f64, depth: f64) -> Point3<f64> {
        self.center + self.cam_to_world * self.backproject_camera(u, v, depth)
    }

    pub fn in_frame(&self, u: f64, v: f64) -> bool {
        u >= 0.0 && v >= 0.0 && u < self.width as f64 && v < self.height as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn level_camera_sees_plane_at_distance() {
        let cam = CameraModel::new(64, 48, CameraPose::default());
        let d = cam.surface_depth(32.0, 24.0).unwrap();
        assert!((d - 500.0).abs() < 1e-9);
        // plane depth is constant for a level camera
        assert!((cam.surface_depth(0.5, 0.5).unwrap() - 500.0).abs() < 1e-9);
    }

    #[test]
    fn project_backproject_roundtrip() {
        let pose = CameraPose { z_distance: 0.7, yaw: 20.0, pitch: -15.0 };
        let cam = CameraModel::new(320, 288, pose);
        let p = Point3::new(12.0, -30.0, 8.0);
        let (u, v, z) = cam.project(&p).unwrap();
        let q = cam.backproject(u, v, z);
        assert!((p - q).norm() < 1e-9);
    }

    #[test]
    fn image_up_is_world_plus_y() {
        let cam = CameraModel::new(100, 100, CameraPose::default());
        let (_, v_up, _) = cam.project(&Point3::new(0.0, 10.0, 0.0)).unwrap();
        let (u_right, _, _) = cam.project(&Point3::new(10.0, 0.0, 0.0)).unwrap();
        assert!(v_up < 50.0);
        assert!(u_right > 50.0);
    }

    #[test]
    fn tilted_optical_axis_still_hits_origin() {
        let cam = CameraModel::new(100, 100, CameraPose { z_distance: 0.5, yaw: 30.0, pitch: 10.0 });
        let (u, v, z) = cam.project(&Point3::origin()).unwrap();
        assert!((u - 50.0).abs() < 1e-9 && (v - 50.0).abs() < 1e-9);
        assert!((z - 500.0).abs() < 1e-9);
    }

    #[test]
    fn rect_clip_and_union() {
        let r = Rect::clipped(-5, -5, 10, 3, 8, 8);
        assert_eq!(r, Rect { x0: 0, y0: 0, width: 8, height: 3 });
        let u = r.union(&Rect { x0: 6, y0: 6, width: 2, height: 2 });
        assert_eq!(u, Rect { x0: 0, y0: 0, width: 8, height: 8 });
    }
}
