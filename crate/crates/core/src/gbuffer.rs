use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::ImagePlane;
use crate::math::{vec3, Vec3};
use crate::rig::LightPose;

/// Per-pixel geometry and material maps. Normals are camera-space unit
/// vectors; `depth` is the hit distance along the primary ray (0 on miss)
/// and is carried so that light directions can be recomputed from files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GBuffer {
    pub normal: ImagePlane,
    pub albedo: ImagePlane,
    pub roughness: ImagePlane,
    pub metallic: ImagePlane,
    pub alpha: ImagePlane,
    pub depth: ImagePlane,
}

impl GBuffer {
    pub fn zeros(width: usize, height: usize) -> Self {
        Self {
            normal: ImagePlane::zeros(width, height, 3),
            albedo: ImagePlane::zeros(width, height, 3),
            roughness: ImagePlane::zeros(width, height, 1),
            metallic: ImagePlane::zeros(width, height, 1),
            alpha: ImagePlane::zeros(width, height, 1),
            depth: ImagePlane::zeros(width, height, 1),
        }
    }

    pub fn width(&self) -> usize {
        self.alpha.width()
    }

    pub fn height(&self) -> usize {
        self.alpha.height()
    }

    pub fn pixel_count(&self) -> usize {
        self.alpha.pixel_count()
    }

    #[inline]
    pub fn is_foreground(&self, index: usize) -> bool {
        self.alpha.data()[index] > 0.5
    }

    pub fn mask(&self) -> Vec<bool> {
        self.alpha.data().iter().map(|&a| a > 0.5).collect()
    }

    #[inline]
    pub fn normal_at(&self, index: usize) -> Vec3 {
        let n = self.normal.rgb_at(index);
        vec3(n[0], n[1], n[2])
    }

    pub fn set_normal(&mut self, index: usize, n: &Vec3) {
        let d = &mut self.normal.data_mut()[index * 3..index * 3 + 3];
        d[0] = n.x as f32;
        d[1] = n.y as f32;
        d[2] = n.z as f32;
    }

    pub fn set_albedo(&mut self, index: usize, a: [f64; 3]) {
        let d = &mut self.albedo.data_mut()[index * 3..index * 3 + 3];
        for c in 0..3 {
            d[c] = a[c].clamp(0.0, 1.0) as f32;
        }
    }

    /// Checks the structural invariants: matching sizes, binary alpha,
    /// unit front-facing normals and unit-interval materials on the mask.
    pub fn validate(&self) -> Result<()> {
        let maps = [
            ("normal", &self.normal, 3),
            ("albedo", &self.albedo, 3),
            ("roughness", &self.roughness, 1),
            ("metallic", &self.metallic, 1),
            ("alpha", &self.alpha, 1),
            ("depth", &self.depth, 1),
        ];
        for (name, map, ch) in maps {
            if !map.same_size(&self.alpha) || map.channels() != ch {
                return Err(Error::DimensionMismatch(format!("{name} map shape")));
            }
        }
        for i in 0..self.pixel_count() {
            let a = self.alpha.data()[i];
            if a != 0.0 && a != 1.0 {
                return Err(Error::InvalidImage(format!("alpha {a} at pixel {i} is not binary")));
            }
            if a == 0.0 {
                continue;
            }
            let n = self.normal_at(i);
            if (n.norm() - 1.0).abs() > 1e-5 || n.z < 0.0 {
                return Err(Error::InvalidImage(format!("normal {n:?} at pixel {i}")));
            }
            let unit = |v: f64| (0.0..=1.0).contains(&v);
            let alb = self.albedo.rgb_at(i);
            if !alb.iter().all(|&v| unit(v))
                || !unit(self.roughness.scalar_at(i))
                || !unit(self.metallic.scalar_at(i))
            {
                return Err(Error::InvalidImage(format!("material out of [0,1] at pixel {i}")));
            }
        }
        Ok(())
    }
}

/// L single-light observations of one view plus the input image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiLightSet {
    pub images: Vec<ImagePlane>,
    pub poses: Vec<LightPose>,
    pub input: ImagePlane,
    pub alpha: ImagePlane,
    /// Hit distance along each primary ray, when known.
    pub depth: Option<ImagePlane>,
}

impl MultiLightSet {
    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        if self.images.len() != self.poses.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} images but {} poses",
                self.images.len(),
                self.poses.len()
            )));
        }
        for (i, img) in self.images.iter().enumerate() {
            if !img.same_size(&self.input) || img.channels() != 3 {
                return Err(Error::DimensionMismatch(format!("light image {i} shape")));
            }
        }
        if !self.alpha.same_size(&self.input) {
            return Err(Error::DimensionMismatch("alpha shape".into()));
        }
        if let Some(d) = &self.depth {
            if !d.same_size(&self.input) {
                return Err(Error::DimensionMismatch("depth shape".into()));
            }
        }
        Ok(())
    }

    /// Keeps only the listed lights, in the listed order.
    pub fn subset(&self, indices: &[usize]) -> Result<MultiLightSet> {
        let mut images = Vec::with_capacity(indices.len());
        let mut poses = Vec::with_capacity(indices.len());
        for &i in indices {
            if i >= self.len() {
                return Err(Error::InvalidArgument(format!(
                    "light index {i} out of range (L = {})",
                    self.len()
                )));
            }
            images.push(self.images[i].clone());
            poses.push(self.poses[i]);
        }
        Ok(MultiLightSet {
            images,
            poses,
            input: self.input.clone(),
            alpha: self.alpha.clone(),
            depth: self.depth.clone(),
        })
    }
}

/// Maps a unit normal to RGB in `[0, 1]`.
#[inline]
pub fn encode_normal(n: &Vec3) -> [f64; 3] {
    [(n.x + 1.0) * 0.5, (n.y + 1.0) * 0.5, (n.z + 1.0) * 0.5]
}

/// Inverse of [`encode_normal`], renormalized to unit length.
pub fn decode_normal(rgb: [f64; 3]) -> Result<Vec3> {
    let v = vec3(rgb[0] * 2.0 - 1.0, rgb[1] * 2.0 - 1.0, rgb[2] * 2.0 - 1.0);
    let len = v.norm();
    if !(len > 1e-12) {
        return Err(Error::ZeroNormal);
    }
    Ok(v / len)
}
