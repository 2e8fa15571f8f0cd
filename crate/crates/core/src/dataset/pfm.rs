//! Portable float map codec. Header `PF\n<w> <h>\n-1.0\n` for 3 channels
//! (`Pf` for 1), then little-endian f32 rows from bottom to top. Reading
//! also accepts a positive (big-endian) scale token.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::image::ImagePlane;

fn pfm_err(offset: usize, message: impl Into<String>) -> Error {
    Error::Pfm {
        offset,
        message: message.into(),
    }
}

pub fn encode_pfm(img: &ImagePlane) -> Result<Vec<u8>> {
    let magic = match img.channels() {
        3 => "PF",
        1 => "Pf",
        c => return Err(Error::InvalidImage(format!("PFM stores 1 or 3 channels, not {c}"))),
    };
    if let Some(v) = img.data().iter().find(|v| !v.is_finite()) {
        return Err(Error::InvalidImage(format!("non-finite value {v}")));
    }
    let header = format!("{magic}\n{} {}\n-1.0\n", img.width(), img.height());
    let row = img.width() * img.channels();
    let mut out = Vec::with_capacity(header.len() + img.data().len() * 4);
    out.extend_from_slice(header.as_bytes());
    for y in (0..img.height()).rev() {
        for v in &img.data()[y * row..(y + 1) * row] {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

/// Whitespace-delimited header token starting at `*pos`; consumes exactly
/// one trailing whitespace byte.
fn token<'a>(bytes: &'a [u8], pos: &mut usize, what: &str) -> Result<&'a str> {
    while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    let start = *pos;
    while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    if start == *pos {
        return Err(pfm_err(start, format!("missing {what}")));
    }
    if *pos >= bytes.len() {
        return Err(pfm_err(*pos, format!("header ends inside {what}")));
    }
    let text = std::str::from_utf8(&bytes[start..*pos]).map_err(|_| pfm_err(start, format!("non-ASCII {what}")))?;
    *pos += 1;
    Ok(text)
}

pub fn decode_pfm(bytes: &[u8]) -> Result<ImagePlane> {
    let mut pos = 0;
    let channels = match token(bytes, &mut pos, "magic")? {
        "PF" => 3,
        "Pf" => 1,
        other => return Err(pfm_err(0, format!("bad magic {other:?}"))),
    };
    let dims_at = pos;
    let parse_dim = |t: &str, at: usize| t.parse::<usize>().map_err(|_| pfm_err(at, format!("bad dimension {t:?}")));
    let w_at = pos;
    let w = parse_dim(token(bytes, &mut pos, "width")?, w_at)?;
    let h_at = pos;
    let h = parse_dim(token(bytes, &mut pos, "height")?, h_at)?;
    if w == 0 || h == 0 {
        return Err(pfm_err(dims_at, "zero dimension"));
    }
    let scale_at = pos;
    let scale_text = token(bytes, &mut pos, "scale")?;
    let scale: f32 = scale_text
        .parse()
        .map_err(|_| pfm_err(scale_at, format!("bad scale {scale_text:?}")))?;
    if scale == 0.0 || !scale.is_finite() {
        return Err(pfm_err(scale_at, "scale must be nonzero and finite"));
    }
    let little = scale < 0.0;
    let count = w
        .checked_mul(h)
        .and_then(|n| n.checked_mul(channels))
        .ok_or_else(|| pfm_err(dims_at, "dimensions overflow"))?;
    let need = count * 4;
    let payload = &bytes[pos..];
    if payload.len() < need {
        return Err(pfm_err(bytes.len(), format!("truncated payload: {} of {need} bytes", payload.len())));
    }
    if payload.len() > need {
        return Err(pfm_err(pos + need, format!("{} trailing bytes", payload.len() - need)));
    }
    let row = w * channels;
    let mut data = vec![0f32; count];
    for (k, chunk) in payload.chunks_exact(4).enumerate() {
        let raw = [chunk[0], chunk[1], chunk[2], chunk[3]];
        let v = if little {
            f32::from_le_bytes(raw)
        } else {
            f32::from_be_bytes(raw)
        };
        let (file_row, col) = (k / row, k % row);
        data[(h - 1 - file_row) * row + col] = v;
    }
    ImagePlane::new(w, h, channels, data)
}

pub fn write_pfm(img: &ImagePlane, path: &Path) -> Result<()> {
    let bytes = encode_pfm(img)?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn read_pfm(path: &Path) -> Result<ImagePlane> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_pfm(&bytes).map_err(|e| match e {
        Error::Pfm { offset, message } => Error::format(path, format!("pfm parse error at byte {offset}: {message}")),
        other => other,
    })
}
