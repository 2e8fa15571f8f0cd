use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A linear-radiometric image with 1 or 3 interleaved channels, stored
/// row-major with the top row first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImagePlane {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<f32>,
}

impl ImagePlane {
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<f32>) -> Result<Self> {
        if channels != 1 && channels != 3 {
            return Err(Error::InvalidImage(format!(
                "channel count {channels} not in {{1, 3}}"
            )));
        }
        if data.len() != width * height * channels {
            return Err(Error::InvalidImage(format!(
                "data length {} != {width}x{height}x{channels}",
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidImage(format!("non-finite value at index {i}")));
        }
        Ok(Self {
            width,
            height,
            channels,
            data,
        })
    }

    pub fn zeros(width: usize, height: usize, channels: usize) -> Self {
        assert!(channels == 1 || channels == 3, "channel count must be 1 or 3");
        Self {
            width,
            height,
            channels,
            data: vec![0.0; width * height * channels],
        }
    }

    pub fn filled(width: usize, height: usize, value: &[f32]) -> Self {
        let mut img = Self::zeros(width, height, value.len());
        for px in img.data.chunks_exact_mut(value.len()) {
            px.copy_from_slice(value);
        }
        img
    }

    /// Builds an image by evaluating `f(x, y)` for every pixel.
    pub fn from_fn(
        width: usize,
        height: usize,
        channels: usize,
        mut f: impl FnMut(usize, usize) -> [f32; 3],
    ) -> Self {
        let mut img = Self::zeros(width, height, channels);
        for y in 0..height {
            for x in 0..width {
                let v = f(x, y);
                img.pixel_mut(x, y).copy_from_slice(&v[..channels]);
            }
        }
        img
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    pub fn same_shape(&self, other: &ImagePlane) -> bool {
        self.width == other.width && self.height == other.height && self.channels == other.channels
    }

    pub fn same_size(&self, other: &ImagePlane) -> bool {
        self.width == other.width && self.height == other.height
    }

    #[inline]
    pub fn pixel(&self, x: usize, y: usize) -> &[f32] {
        let i = (y * self.width + x) * self.channels;
        &self.data[i..i + self.channels]
    }

    #[inline]
    pub fn pixel_mut(&mut self, x: usize, y: usize) -> &mut [f32] {
        let i = (y * self.width + x) * self.channels;
        &mut self.data[i..i + self.channels]
    }

    /// The pixel at a flat index, widened to RGB (grayscale is replicated).
    #[inline]
    pub fn rgb_at(&self, index: usize) -> [f64; 3] {
        let i = index * self.channels;
        if self.channels == 3 {
            [
                self.data[i] as f64,
                self.data[i + 1] as f64,
                self.data[i + 2] as f64,
            ]
        } else {
            let v = self.data[i] as f64;
            [v, v, v]
        }
    }

    #[inline]
    pub fn scalar_at(&self, index: usize) -> f64 {
        self.data[index * self.channels] as f64
    }

    pub fn map(&self, f: impl Fn(f32) -> f32) -> ImagePlane {
        ImagePlane {
            width: self.width,
            height: self.height,
            channels: self.channels,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Bilinear lookup at continuous pixel coordinates (pixel centers at
    /// integer + 0.5), clamping to the border.
    pub fn sample_bilinear(&self, fx: f64, fy: f64, out: &mut [f32]) {
        let x = (fx - 0.5).clamp(0.0, (self.width - 1) as f64);
        let y = (fy - 0.5).clamp(0.0, (self.height - 1) as f64);
        let x0 = x.floor() as usize;
        let y0 = y.floor() as usize;
        let x1 = (x0 + 1).min(self.width - 1);
        let y1 = (y0 + 1).min(self.height - 1);
        let tx = x - x0 as f64;
        let ty = y - y0 as f64;
        for c in 0..self.channels {
            let p00 = self.pixel(x0, y0)[c] as f64;
            let p10 = self.pixel(x1, y0)[c] as f64;
            let p01 = self.pixel(x0, y1)[c] as f64;
            let p11 = self.pixel(x1, y1)[c] as f64;
            let top = p00 + (p10 - p00) * tx;
            let bottom = p01 + (p11 - p01) * tx;
            out[c] = (top + (bottom - top) * ty) as f32;
        }
    }

    /// Bilinear resize with pixel-center alignment.
    pub fn resize_bilinear(&self, width: usize, height: usize) -> ImagePlane {
        let sx = self.width as f64 / width as f64;
        let sy = self.height as f64 / height as f64;
        let mut out = ImagePlane::zeros(width, height, self.channels);
        let mut buf = [0f32; 3];
        for y in 0..height {
            for x in 0..width {
                let fx = (x as f64 + 0.5) * sx;
                let fy = (y as f64 + 0.5) * sy;
                self.sample_bilinear(fx, fy, &mut buf);
                out.pixel_mut(x, y).copy_from_slice(&buf[..self.channels]);
            }
        }
        out
    }

    pub fn max_abs_diff(&self, other: &ImagePlane) -> f32 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f32::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_shapes_and_values() {
        assert!(ImagePlane::new(2, 2, 2, vec![0.0; 8]).is_err());
        assert!(ImagePlane::new(2, 2, 3, vec![0.0; 11]).is_err());
        assert!(ImagePlane::new(1, 1, 1, vec![f32::NAN]).is_err());
        assert!(ImagePlane::new(2, 1, 3, vec![0.5; 6]).is_ok());
    }

    #[test]
    fn identity_resize_is_exact() {
        let img = ImagePlane::from_fn(7, 5, 3, |x, y| [x as f32, y as f32, (x * y) as f32]);
        assert_eq!(img.resize_bilinear(7, 5), img);
    }

    #[test]
    fn resize_preserves_constants() {
        let img = ImagePlane::filled(16, 16, &[0.25, 0.5, 0.75]);
        let down = img.resize_bilinear(5, 5).resize_bilinear(16, 16);
        assert!(down.max_abs_diff(&img) < 1e-7);
    }
}
