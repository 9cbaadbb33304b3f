//! File formats: PFD1 depth files, label and image PNGs, depth previews.
//!
//! PFD1 layout (little-endian):
//!
//! ```text
//! b"PFD1" | u32 width | u32 height | f32 depth[w*h] | u8 provenance[w*h]
//! ```
//!
//! Rows are stored top to bottom. A pixel is valid when its provenance code
//! is non-zero; invalid pixels must store depth 0.

use std::path::Path;

use image::{DynamicImage, GrayImage, ImageBuffer as PngBuffer, Luma, Rgb, RgbImage};

use crate::error::{Error, Location, Result};
use crate::raster::{DepthMap, Grid, ImageBuffer, LabelMap, Provenance};

pub const PFD1_MAGIC: &[u8; 4] = b"PFD1";
const HEADER_LEN: usize = 12;

pub fn encode_pfd1(map: &DepthMap) -> Vec<u8> {
    let n = map.len();
    let mut out = Vec::with_capacity(HEADER_LEN + 5 * n);
    out.extend_from_slice(PFD1_MAGIC);
    out.extend_from_slice(&(map.width() as u32).to_le_bytes());
    out.extend_from_slice(&(map.height() as u32).to_le_bytes());
    for v in map.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out.extend(map.provenance_plane().iter().map(|p| p.code()));
    out
}

pub fn decode_pfd1(bytes: &[u8]) -> Result<DepthMap> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::parse(
            Location::Byte(bytes.len()),
            "truncated PFD1 header",
        ));
    }
    if &bytes[..4] != PFD1_MAGIC {
        return Err(Error::parse(Location::Byte(0), "bad magic, expected \"PFD1\""));
    }
    let width = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let height = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    if width == 0 || height == 0 {
        return Err(Error::parse(Location::Byte(4), "zero image dimension"));
    }
    let n = width
        .checked_mul(height)
        .ok_or_else(|| Error::parse(Location::Byte(4), "image dimensions overflow"))?;
    let expected = HEADER_LEN + 5 * n;
    if bytes.len() != expected {
        return Err(Error::parse(
            Location::Byte(bytes.len().min(expected)),
            format!("PFD1 body is {} bytes, expected {expected}", bytes.len()),
        ));
    }
    let prov_start = HEADER_LEN + 4 * n;
    let values: Vec<f32> = bytes[HEADER_LEN..prov_start]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let mut provenance = Vec::with_capacity(n);
    for (i, &code) in bytes[prov_start..].iter().enumerate() {
        let p = Provenance::from_code(code).ok_or_else(|| {
            Error::parse(
                Location::Byte(prov_start + i),
                format!("unknown provenance code {code}"),
            )
        })?;
        let v = values[i];
        let consistent = if p == Provenance::None {
            v == 0.0
        } else {
            v.is_finite() && v > 0.0
        };
        if !consistent {
            return Err(Error::parse(
                Location::Byte(HEADER_LEN + 4 * i),
                format!("depth {v} inconsistent with provenance {}", p.name()),
            ));
        }
        provenance.push(p);
    }
    DepthMap::from_parts(width, height, values, provenance)
}

pub fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn read_pfd1(path: &Path) -> Result<DepthMap> {
    decode_pfd1(&read_bytes(path)?).map_err(|e| with_file(e, path))
}

pub fn write_pfd1(path: &Path, map: &DepthMap) -> Result<()> {
    write_bytes(path, &encode_pfd1(map))
}

fn with_file(err: Error, path: &Path) -> Error {
    match err {
        Error::Parse { location, message } => Error::Parse {
            location: Location::File(format!("{} ({location})", path.display())),
            message,
        },
        other => other,
    }
}

fn load_png(path: &Path) -> Result<DynamicImage> {
    let bytes = read_bytes(path)?;
    image::load_from_memory_with_format(&bytes, image::ImageFormat::Png).map_err(|e| {
        Error::parse(Location::File(path.display().to_string()), format!("PNG: {e}"))
    })
}

/// Reads an 8- or 16-bit single-channel PNG of class IDs.
pub fn read_label_png(path: &Path) -> Result<LabelMap> {
    let img = load_png(path)?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    let data: Vec<u16> = match img {
        DynamicImage::ImageLuma8(buf) => buf.into_raw().into_iter().map(u16::from).collect(),
        DynamicImage::ImageLuma16(buf) => buf.into_raw(),
        other => {
            return Err(Error::parse(
                Location::File(path.display().to_string()),
                format!("label PNG must be single-channel, got {:?}", other.color()),
            ))
        }
    };
    Grid::from_vec(w, h, data)
}

/// Writes class IDs as 8-bit PNG when they fit, 16-bit otherwise.
pub fn write_label_png(path: &Path, labels: &LabelMap) -> Result<()> {
    let (w, h) = (labels.width() as u32, labels.height() as u32);
    let result = if labels.as_slice().iter().all(|&v| v <= u8::MAX as u16) {
        let raw: Vec<u8> = labels.as_slice().iter().map(|&v| v as u8).collect();
        GrayImage::from_raw(w, h, raw).expect("sized buffer").save(path)
    } else {
        PngBuffer::<Luma<u16>, _>::from_raw(w, h, labels.as_slice().to_vec())
            .expect("sized buffer")
            .save(path)
    };
    result.map_err(|e| Error::Io {
        path: path.display().to_string(),
        source: std::io::Error::other(e.to_string()),
    })
}

/// Reads an 8-bit PNG as intensities `v / 255`. Gray stays single-channel,
/// everything else is converted to RGB.
pub fn read_image_png(path: &Path) -> Result<ImageBuffer> {
    let img = load_png(path)?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    match img {
        DynamicImage::ImageLuma8(buf) => ImageBuffer::new(
            w,
            h,
            1,
            buf.into_raw().into_iter().map(|v| v as f32 / 255.0).collect(),
        ),
        DynamicImage::ImageRgb8(_) | DynamicImage::ImageRgba8(_) | DynamicImage::ImageLumaA8(_) => {
            let rgb = img.to_rgb8();
            ImageBuffer::new(
                w,
                h,
                3,
                rgb.into_raw().into_iter().map(|v| v as f32 / 255.0).collect(),
            )
        }
        other => Err(Error::parse(
            Location::File(path.display().to_string()),
            format!("expected an 8-bit PNG, got {:?}", other.color()),
        )),
    }
}

fn quantize(v: f32) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

pub fn write_image_png(path: &Path, img: &ImageBuffer) -> Result<()> {
    let (w, h) = (img.width() as u32, img.height() as u32);
    let raw: Vec<u8> = img.data().iter().map(|&v| quantize(v)).collect();
    let result = if img.channels() == 1 {
        GrayImage::from_raw(w, h, raw).expect("sized buffer").save(path)
    } else {
        RgbImage::from_raw(w, h, raw).expect("sized buffer").save(path)
    };
    result.map_err(|e| Error::Io {
        path: path.display().to_string(),
        source: std::io::Error::other(e.to_string()),
    })
}

/// Lossy 8-bit color preview of a depth map: near is warm, far is cool,
/// invalid pixels are black. Scaled by inverse depth over the valid range.
pub fn depth_preview(map: &DepthMap) -> RgbImage {
    let (w, h) = (map.width() as u32, map.height() as u32);
    let mut lo = f32::INFINITY;
    let mut hi = 0.0f32;
    for i in 0..map.len() {
        if let Some(d) = map.depth_at(i) {
            lo = lo.min(1.0 / d);
            hi = hi.max(1.0 / d);
        }
    }
    let span = if hi > lo { hi - lo } else { 1.0 };
    PngBuffer::from_fn(w, h, |x, y| match map.get(x as usize, y as usize) {
        None => Rgb([0, 0, 0]),
        Some(d) => {
            let t = ((1.0 / d - lo) / span).clamp(0.0, 1.0);
            // blue -> green -> red ramp
            let r = (2.0 * t - 1.0).clamp(0.0, 1.0);
            let g = 1.0 - (2.0 * t - 1.0).abs();
            let b = (1.0 - 2.0 * t).clamp(0.0, 1.0);
            Rgb([quantize(r), quantize(g), quantize(b)])
        }
    })
}

pub fn write_depth_preview(path: &Path, map: &DepthMap) -> Result<()> {
    depth_preview(map).save(path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        source: std::io::Error::other(e.to_string()),
    })
}
