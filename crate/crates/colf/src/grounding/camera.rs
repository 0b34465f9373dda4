//! Pinhole camera model and extrinsics for a robot-mounted, forward-facing
//! camera. Camera frame: x right, y down, z forward (optical axis).

use crate::env::CameraPreset;

pub const FULL_WIDTH: usize = 1280;
pub const FULL_HEIGHT: usize = 720;
pub const WORKING_WIDTH: usize = 224;
pub const WORKING_HEIGHT: usize = 224;
pub const HFOV: f64 = 1.5;
pub const VFOV: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraModel {
    pub width: usize,
    pub height: usize,
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    /// Mount height above the robot base frame (m).
    pub mount_height: f64,
}

impl CameraModel {
    pub fn from_fov(width: usize, height: usize, hfov: f64, vfov: f64, mount_height: f64) -> Self {
        let w = width as f64;
        let h = height as f64;
        Self {
            width,
            height,
            fx: (w / 2.0) / (hfov / 2.0).tan(),
            fy: (h / 2.0) / (vfov / 2.0).tan(),
            cx: w / 2.0,
            cy: h / 2.0,
            mount_height,
        }
    }

    /// Full sensor resolution (1280x720).
    pub fn full(preset: CameraPreset) -> Self {
        Self::from_fov(FULL_WIDTH, FULL_HEIGHT, HFOV, VFOV, preset.height())
    }

    /// Resized working resolution (224x224), same fields of view.
    pub fn working(preset: CameraPreset) -> Self {
        Self::from_fov(WORKING_WIDTH, WORKING_HEIGHT, HFOV, VFOV, preset.height())
    }

    /// Project a camera-frame point to pixel coordinates. `None` behind the
    /// image plane.
    pub fn project(&self, p: [f64; 3]) -> Option<[f64; 2]> {
        if p[2] <= 1e-9 {
            return None;
        }
        Some([self.cx + self.fx * p[0] / p[2], self.cy + self.fy * p[1] / p[2]])
    }

    /// Camera-frame point for a pixel at the given z-depth.
    pub fn backproject(&self, u: f64, v: f64, depth: f64) -> [f64; 3] {
        [depth * (u - self.cx) / self.fx, depth * (v - self.cy) / self.fy, depth]
    }

    pub fn in_bounds(&self, u: f64, v: f64) -> bool {
        u >= 0.0 && v >= 0.0 && u < self.width as f64 && v < self.height as f64
    }
}

/// World pose of the camera, derived from the carrying robot's planar pose.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extrinsics {
    pub center: [f64; 3],
    pub x_axis: [f64; 3],
    pub y_axis: [f64; 3],
    pub z_axis: [f64; 3],
}

impl Extrinsics {
    /// Forward-facing mount: optical axis along the robot heading,
    /// image-right to the robot's right, image-down toward the ground.
    pub fn from_robot(pos: [f64; 2], yaw: f64, mount_height: f64) -> Self {
        let (s, c) = yaw.sin_cos();
        Self {
            center: [pos[0], pos[1], mount_height],
            x_axis: [s, -c, 0.0],
            y_axis: [0.0, 0.0, -1.0],
            z_axis: [c, s, 0.0],
        }
    }

    pub fn world_to_cam(&self, p: [f64; 3]) -> [f64; 3] {
        let d = [p[0] - self.center[0], p[1] - self.center[1], p[2] - self.center[2]];
        [dot(d, self.x_axis), dot(d, self.y_axis), dot(d, self.z_axis)]
    }

    pub fn cam_to_world(&self, p: [f64; 3]) -> [f64; 3] {
        [
            self.center[0] + p[0] * self.x_axis[0] + p[1] * self.y_axis[0] + p[2] * self.z_axis[0],
            self.center[1] + p[0] * self.x_axis[1] + p[1] * self.y_axis[1] + p[2] * self.z_axis[1],
            self.center[2] + p[0] * self.x_axis[2] + p[1] * self.y_axis[2] + p[2] * self.z_axis[2],
        ]
    }

    /// World-frame direction of the ray through pixel (u, v), scaled so a
    /// ray parameter t equals the camera z-depth.
    pub fn pixel_ray(&self, cam: &CameraModel, u: f64, v: f64) -> [f64; 3] {
        let d = [(u - cam.cx) / cam.fx, (v - cam.cy) / cam.fy, 1.0];
        [
            d[0] * self.x_axis[0] + d[1] * self.y_axis[0] + d[2] * self.z_axis[0],
            d[0] * self.x_axis[1] + d[1] * self.y_axis[1] + d[2] * self.z_axis[1],
            d[0] * self.x_axis[2] + d[1] * self.y_axis[2] + d[2] * self.z_axis[2],
        ]
    }
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn intrinsics_identities() {
        let cam = CameraModel::full(CameraPreset::Sim);
        assert_eq!(cam.fx, 640.0 / 0.75f64.tan());
        assert_eq!(cam.fy, 360.0 / 0.5f64.tan());
        assert_eq!(cam.cx, 640.0);
        assert_eq!(cam.cy, 360.0);
        assert_eq!(cam.mount_height, 0.40);
        assert_eq!(CameraModel::full(CameraPreset::Real).mount_height, 0.55);

        let w = CameraModel::working(CameraPreset::Sim);
        assert_eq!(w.fx, 112.0 / 0.75f64.tan());
        assert!((w.fx - 120.22).abs() < 0.01);
        assert_eq!(w.cx, 112.0);
        assert_eq!(w.cy, 112.0);
    }

    #[test]
    fn principal_point_is_optical_axis() {
        let cam = CameraModel::working(CameraPreset::Sim);
        let p = cam.backproject(cam.cx, cam.cy, 2.5);
        assert_eq!(p, [0.0, 0.0, 2.5]);
    }

    #[test]
    fn project_backproject_round_trip() {
        let cam = CameraModel::working(CameraPreset::Sim);
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..500 {
            let z = rng.random_range(0.2..8.0);
            let p = [
                rng.random_range(-0.8..0.8) * z,
                rng.random_range(-0.5..0.5) * z,
                z,
            ];
            let px = cam.project(p).unwrap();
            let q = cam.backproject(px[0], px[1], z);
            for k in 0..3 {
                assert!((p[k] - q[k]).abs() <= 1e-6);
            }
        }
    }

    #[test]
    fn extrinsics_round_trip_and_orientation() {
        let ext = Extrinsics::from_robot([1.0, -2.0], 0.7, 0.40);
        // Point 3 m ahead of the robot at camera height lies on the axis.
        let ahead = [1.0 + 3.0 * 0.7f64.cos(), -2.0 + 3.0 * 0.7f64.sin(), 0.40];
        let c = ext.world_to_cam(ahead);
        assert!(c[0].abs() < 1e-12 && c[1].abs() < 1e-12);
        assert!((c[2] - 3.0).abs() < 1e-12);
        // Ground is image-down (positive y).
        let ground = [1.0 + 0.7f64.cos(), -2.0 + 0.7f64.sin(), 0.0];
        assert!(ext.world_to_cam(ground)[1] > 0.0);

        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let p = [
                rng.random_range(-3.0..3.0),
                rng.random_range(-3.0..3.0),
                rng.random_range(0.0..1.0),
            ];
            let q = ext.cam_to_world(ext.world_to_cam(p));
            for k in 0..3 {
                assert!((p[k] - q[k]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn pixel_ray_parameter_is_depth() {
        let cam = CameraModel::working(CameraPreset::Sim);
        let ext = Extrinsics::from_robot([0.3, 0.8], -1.1, 0.40);
        let (u, v) = (37.0, 181.0);
        let dir = ext.pixel_ray(&cam, u, v);
        let t = 2.7;
        let p = [
            ext.center[0] + t * dir[0],
            ext.center[1] + t * dir[1],
            ext.center[2] + t * dir[2],
        ];
        let c = ext.world_to_cam(p);
        assert!((c[2] - t).abs() < 1e-9);
        let px = cam.project(c).unwrap();
        assert!((px[0] - u).abs() < 1e-6 && (px[1] - v).abs() < 1e-6);
    }
}
