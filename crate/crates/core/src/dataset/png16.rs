//! 16-bit PNG storage for values in `[0, 1]`. Values are clamped and
//! quantized to `round(v · 65535)`.

use std::path::Path;

use image::{DynamicImage, ImageBuffer, Luma, Rgb};

use crate::error::{Error, Result};
use crate::gbuffer::{decode_normal, encode_normal};
use crate::image::ImagePlane;
use crate::math::vec3;

pub const PNG_MAX: f64 = 65535.0;

#[inline]
pub fn quantize(v: f64) -> u16 {
    (v.clamp(0.0, 1.0) * PNG_MAX).round() as u16
}

#[inline]
pub fn dequantize(q: u16) -> f64 {
    q as f64 / PNG_MAX
}

fn save(img: DynamicImage, path: &Path) -> Result<()> {
    img.save_with_format(path, image::ImageFormat::Png)
        .map_err(|e| Error::format(path, e.to_string()))
}

/// Writes a 1- or 3-channel image; channel values outside `[0, 1]` clip.
pub fn write_png16(img: &ImagePlane, path: &Path) -> Result<()> {
    let (w, h) = (img.width() as u32, img.height() as u32);
    let data: Vec<u16> = img.data().iter().map(|&v| quantize(v as f64)).collect();
    let dynamic = match img.channels() {
        1 => DynamicImage::ImageLuma16(ImageBuffer::<Luma<u16>, _>::from_raw(w, h, data).expect("buffer size matches")),
        3 => DynamicImage::ImageRgb16(ImageBuffer::<Rgb<u16>, _>::from_raw(w, h, data).expect("buffer size matches")),
        c => return Err(Error::InvalidImage(format!("PNG output needs 1 or 3 channels, not {c}"))),
    };
    save(dynamic, path)
}

/// Writes an already display-encoded 3-channel image as 8-bit RGB.
pub fn write_png8(img: &ImagePlane, path: &Path) -> Result<()> {
    if img.channels() != 3 {
        return Err(Error::InvalidImage(format!("8-bit PNG output needs 3 channels, not {}", img.channels())));
    }
    let (w, h) = (img.width() as u32, img.height() as u32);
    let data: Vec<u8> = img.data().iter().map(|&v| (v.clamp(0.0, 1.0) * 255.0).round() as u8).collect();
    save(
        DynamicImage::ImageRgb8(ImageBuffer::<Rgb<u8>, _>::from_raw(w, h, data).expect("buffer size matches")),
        path,
    )
}

/// Reads a PNG as `channels` (1 or 3) channels of `[0, 1]` values.
pub fn read_png16(path: &Path, channels: usize) -> Result<ImagePlane> {
    let dynamic = image::open(path).map_err(|e| match e {
        image::ImageError::IoError(io) => Error::io(path, io),
        other => Error::format(path, other.to_string()),
    })?;
    let (w, h) = (dynamic.width() as usize, dynamic.height() as usize);
    let raw: Vec<u16> = match channels {
        1 => dynamic.into_luma16().into_raw(),
        3 => dynamic.into_rgb16().into_raw(),
        c => return Err(Error::InvalidArgument(format!("cannot read PNG as {c} channels"))),
    };
    ImagePlane::new(w, h, channels, raw.into_iter().map(|q| dequantize(q) as f32).collect())
}

/// Normal map through [`encode_normal`]. Background pixels (zero vectors)
/// store mid-gray.
pub fn write_normal_png(normal: &ImagePlane, path: &Path) -> Result<()> {
    let encoded = ImagePlane::from_fn(normal.width(), normal.height(), 3, |x, y| {
        let n = normal.pixel(x, y);
        encode_normal(&vec3(n[0] as f64, n[1] as f64, n[2] as f64)).map(|v| v as f32)
    });
    write_png16(&encoded, path)
}

/// Decodes and renormalizes a normal map; pixels where `alpha` is not set
/// come back as zero vectors.
pub fn read_normal_png(path: &Path, alpha: &ImagePlane) -> Result<ImagePlane> {
    let encoded = read_png16(path, 3)?;
    if !encoded.same_size(alpha) {
        return Err(Error::DimensionMismatch(format!("{}: normal map size differs from alpha", path.display())));
    }
    let mut out = ImagePlane::zeros(encoded.width(), encoded.height(), 3);
    for i in 0..encoded.pixel_count() {
        if alpha.data()[i] <= 0.5 {
            continue;
        }
        let n = decode_normal(encoded.rgb_at(i)).map_err(|_| Error::format(path, format!("zero normal at pixel {i}")))?;
        out.data_mut()[i * 3..i * 3 + 3].copy_from_slice(&[n.x as f32, n.y as f32, n.z as f32]);
    }
    Ok(out)
}
