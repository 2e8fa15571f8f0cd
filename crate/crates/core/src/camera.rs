use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::{vec3, Vec3};

/// A pinhole camera. Camera space is x right, y up, z toward the viewer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Camera {
    pub position: [f64; 3],
    pub look_at: [f64; 3],
    pub up: [f64; 3],
    /// Vertical field of view in radians.
    pub vfov: f64,
    pub width: usize,
    pub height: usize,
}

/// Orthonormal world-space frame of a camera.
#[derive(Debug, Clone, Copy)]
pub struct CameraFrame {
    pub origin: Vec3,
    pub right: Vec3,
    pub up: Vec3,
    /// Unit vector from the eye toward the look-at point.
    pub forward: Vec3,
    tan_half: f64,
    aspect: f64,
    width: usize,
    height: usize,
}

impl Camera {
    /// Looks at the origin from `distance` along +z.
    pub fn front(distance: f64, vfov: f64, width: usize, height: usize) -> Self {
        Self {
            position: [0.0, 0.0, distance],
            look_at: [0.0; 3],
            up: [0.0, 1.0, 0.0],
            vfov,
            width,
            height,
        }
    }

    /// Camera on a sphere of `distance` at the given azimuth (about +y,
    /// zero on +z) and elevation.
    pub fn orbit(distance: f64, azimuth: f64, elevation: f64, vfov: f64, width: usize, height: usize) -> Self {
        let (se, ce) = elevation.sin_cos();
        let (sa, ca) = azimuth.sin_cos();
        Self {
            position: [distance * ce * sa, distance * se, distance * ce * ca],
            look_at: [0.0; 3],
            up: [0.0, 1.0, 0.0],
            vfov,
            width,
            height,
        }
    }

    pub fn position(&self) -> Vec3 {
        Vec3::from(self.position)
    }

    pub fn validate(&self) -> Result<()> {
        let pos = self.position();
        let target = Vec3::from(self.look_at);
        let up = Vec3::from(self.up);
        if self.width == 0 || self.height == 0 {
            return Err(Error::InvalidCamera("zero resolution".into()));
        }
        if !(self.vfov > 0.0 && self.vfov < std::f64::consts::PI) {
            return Err(Error::InvalidCamera(format!("vfov {} outside (0, pi)", self.vfov)));
        }
        let view = target - pos;
        if view.norm() < 1e-12 {
            return Err(Error::InvalidCamera("position equals look_at".into()));
        }
        if up.norm() < 1e-12 || view.normalize().cross(&up.normalize()).norm() < 1e-9 {
            return Err(Error::InvalidCamera("up parallel to view direction".into()));
        }
        Ok(())
    }

    pub fn frame(&self) -> Result<CameraFrame> {
        self.validate()?;
        let origin = self.position();
        let forward = (Vec3::from(self.look_at) - origin).normalize();
        let right = forward.cross(&Vec3::from(self.up)).normalize();
        let up = right.cross(&forward);
        Ok(CameraFrame {
            origin,
            right,
            up,
            forward,
            tan_half: (self.vfov * 0.5).tan(),
            aspect: self.width as f64 / self.height as f64,
            width: self.width,
            height: self.height,
        })
    }
}

impl CameraFrame {
    /// Unit direction of the primary ray through the center of pixel `(x, y)`.
    #[inline]
    pub fn ray_dir(&self, x: usize, y: usize) -> Vec3 {
        let sx = (2.0 * (x as f64 + 0.5) / self.width as f64 - 1.0) * self.aspect * self.tan_half;
        let sy = (1.0 - 2.0 * (y as f64 + 0.5) / self.height as f64) * self.tan_half;
        (self.forward + self.right * sx + self.up * sy).normalize()
    }

    #[inline]
    pub fn world_to_camera(&self, v: &Vec3) -> Vec3 {
        vec3(v.dot(&self.right), v.dot(&self.up), -v.dot(&self.forward))
    }

    #[inline]
    pub fn camera_to_world(&self, v: &Vec3) -> Vec3 {
        self.right * v.x + self.up * v.y - self.forward * v.z
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn center_ray_points_at_target() {
        let cam = Camera::front(4.0, 0.8, 64, 64);
        let f = cam.frame().unwrap();
        // Even resolution: average the four central pixels.
        let d = (f.ray_dir(31, 31) + f.ray_dir(32, 32) + f.ray_dir(31, 32) + f.ray_dir(32, 31)).normalize();
        assert!((d - vec3(0.0, 0.0, -1.0)).norm() < 1e-12);
        // Top-left pixel looks up and to the left.
        let tl = f.ray_dir(0, 0);
        assert!(tl.x < 0.0 && tl.y > 0.0);
    }

    #[test]
    fn camera_space_roundtrip() {
        let cam = Camera::orbit(4.0, 0.7, 0.3, 0.8, 8, 8);
        let f = cam.frame().unwrap();
        let v = vec3(0.3, -0.2, 0.9);
        assert!((f.camera_to_world(&f.world_to_camera(&v)) - v).norm() < 1e-12);
        // The direction back toward the eye is +z in camera space.
        let to_eye = -f.forward;
        assert!((f.world_to_camera(&to_eye) - vec3(0.0, 0.0, 1.0)).norm() < 1e-12);
    }

    #[test]
    fn rejects_degenerate_cameras() {
        let mut cam = Camera::front(4.0, 0.8, 8, 8);
        cam.up = [0.0, 0.0, 1.0];
        assert!(cam.validate().is_err());
        let mut cam = Camera::front(4.0, 0.8, 8, 8);
        cam.look_at = cam.position;
        assert!(cam.validate().is_err());
        let cam = Camera::front(4.0, 3.2, 8, 8);
        assert!(cam.validate().is_err());
    }
}
