//! Light-rig geometry: point lights placed on the camera's sphere, indexed by
//! azimuth `theta` about the origin→camera axis and off-axis angle `phi`.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, FRAC_PI_6, TAU};

use serde::{Deserialize, Serialize};

use crate::camera::Camera;
use crate::error::{Error, Result};
use crate::math::Vec3;

pub const DEFAULT_RIG_RADIUS: f64 = 4.0;
pub const DEFAULT_LIGHT_INTENSITY: [f64; 3] = [16.0, 16.0, 16.0];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LightPose {
    pub theta: f64,
    pub phi: f64,
}

impl LightPose {
    pub fn new(theta: f64, phi: f64) -> Self {
        Self { theta, phi }
    }

    pub fn is_valid(&self) -> bool {
        (0.0..TAU).contains(&self.theta) && (0.0..=FRAC_PI_2).contains(&self.phi)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LightRig {
    pub poses: Vec<LightPose>,
    pub radius: f64,
    /// RGB radiant intensity of every light.
    pub intensity: [f64; 3],
}

/// Wraps an angle into `[0, 2π)`.
pub fn wrap_angle(theta: f64) -> f64 {
    let t = theta.rem_euclid(TAU);
    // rem_euclid can round up to TAU for tiny negative inputs.
    if t >= TAU {
        0.0
    } else {
        t
    }
}

/// The nine-light rig: eight lights alternating between π/6 and π/3 off the
/// camera axis at π/4 azimuth steps, plus one light at the camera.
pub fn light_rig_default() -> LightRig {
    const PHI_STEPS: [f64; 9] = [1.0, 2.0, 1.0, 2.0, 1.0, 2.0, 1.0, 2.0, 0.0];
    let poses = PHI_STEPS
        .iter()
        .enumerate()
        .map(|(i, &k)| LightPose::new(wrap_angle(i as f64 * FRAC_PI_4), k * FRAC_PI_6))
        .collect();
    LightRig {
        poses,
        radius: DEFAULT_RIG_RADIUS,
        intensity: DEFAULT_LIGHT_INTENSITY,
    }
}

impl LightRig {
    pub fn len(&self) -> usize {
        self.poses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.poses.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        if self.poses.is_empty() {
            return Err(Error::InvalidArgument("light rig has no poses".into()));
        }
        if let Some(p) = self.poses.iter().find(|p| !p.is_valid()) {
            return Err(Error::InvalidArgument(format!(
                "pose (theta={}, phi={}) out of range",
                p.theta, p.phi
            )));
        }
        if !(self.radius > 0.0) {
            return Err(Error::InvalidArgument("rig radius must be positive".into()));
        }
        Ok(())
    }

    /// Same radius and intensity with a different pose list.
    pub fn with_poses(&self, poses: Vec<LightPose>) -> LightRig {
        LightRig {
            poses,
            radius: self.radius,
            intensity: self.intensity,
        }
    }

    pub fn subset(&self, indices: &[usize]) -> Result<LightRig> {
        let poses = indices
            .iter()
            .map(|&i| {
                self.poses.get(i).copied().ok_or_else(|| {
                    Error::InvalidArgument(format!("light index {i} out of range (L = {})", self.len()))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(self.with_poses(poses))
    }

    pub fn position(&self, index: usize, camera: &Camera) -> Result<Vec3> {
        let pose = self.poses.get(index).ok_or_else(|| {
            Error::InvalidArgument(format!("light index {index} out of range (L = {})", self.len()))
        })?;
        pose_position(*pose, self.radius, camera)
    }
}

/// World position of the light at `rig.poses[index]`.
pub fn light_position(rig: &LightRig, index: usize, camera: &Camera) -> Result<Vec3> {
    rig.position(index, camera)
}

/// World position of a single pose on a sphere of `radius`.
pub fn pose_position(pose: LightPose, radius: f64, camera: &Camera) -> Result<Vec3> {
    let c = camera.position();
    if c.norm() < 1e-12 {
        return Err(Error::DegenerateBasis);
    }
    let c = c.normalize();
    let cross = Vec3::from(camera.up).cross(&c);
    if cross.norm() < 1e-9 {
        return Err(Error::DegenerateBasis);
    }
    let u = cross.normalize();
    let v = c.cross(&u);
    let (sp, cp) = pose.phi.sin_cos();
    let (st, ct) = pose.theta.sin_cos();
    Ok((c * cp + (u * ct + v * st) * sp) * radius)
}
