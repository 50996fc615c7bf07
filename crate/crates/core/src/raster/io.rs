use std::fs;
use std::path::{Path, PathBuf};

use image::{DynamicImage, GrayImage, ImageBuffer, ImageFormat, Luma, Rgb, RgbImage};
use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::{BinaryMask, DepthMap, NormalMap, RasterError};

/// Stored luminance strictly above this value is foreground.
pub const MASK_THRESHOLD: u8 = 127;

fn image_err(path: &Path) -> impl FnOnce(image::ImageError) -> RasterError + '_ {
    move |source| RasterError::Image {
        path: path.display().to_string(),
        source,
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> RasterError + '_ {
    move |source| RasterError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn open_image(path: &Path) -> Result<DynamicImage, RasterError> {
    // Read first so a missing file surfaces as an io error rather than a decode error.
    let bytes = fs::read(path).map_err(io_err(path))?;
    let img = image::load_from_memory(&bytes).map_err(image_err(path))?;
    if img.width() == 0 || img.height() == 0 {
        return Err(RasterError::ZeroDimension {
            width: img.width() as usize,
            height: img.height() as usize,
        });
    }
    Ok(img)
}

/// Threshold an 8-bit luminance image into a mask.
pub fn mask_from_luma(img: &GrayImage) -> Result<BinaryMask, RasterError> {
    let data = img.as_raw().iter().map(|&v| v > MASK_THRESHOLD).collect();
    BinaryMask::new(img.width() as usize, img.height() as usize, data)
}

/// Canonical encoding: foreground 255, background 0.
pub fn mask_to_luma(mask: &BinaryMask) -> GrayImage {
    let data = mask.data().iter().map(|&v| if v { 255 } else { 0 }).collect();
    GrayImage::from_raw(mask.width() as u32, mask.height() as u32, data)
        .expect("mask buffer matches its dimensions")
}

/// Load a mask from an 8-bit grayscale or RGB(A) image.
pub fn load_mask(path: impl AsRef<Path>) -> Result<BinaryMask, RasterError> {
    let path = path.as_ref();
    let img = open_image(path)?;
    let luma = match img {
        DynamicImage::ImageLuma8(g) => g,
        DynamicImage::ImageLumaA8(_) | DynamicImage::ImageRgb8(_) | DynamicImage::ImageRgba8(_) => {
            img.to_luma8()
        }
        other => {
            return Err(RasterError::UnsupportedBitDepth(format!(
                "{:?} in {}",
                other.color(),
                path.display()
            )))
        }
    };
    mask_from_luma(&luma)
}

pub fn save_mask(mask: &BinaryMask, path: impl AsRef<Path>) -> Result<(), RasterError> {
    let path = path.as_ref();
    mask_to_luma(mask)
        .save_with_format(path, ImageFormat::Png)
        .map_err(image_err(path))
}

/// JSON sidecar stored next to a 16-bit depth image.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DepthSidecar {
    /// Scene units per 16-bit tick.
    pub depth_scale: f64,
    pub width: usize,
    pub height: usize,
}

/// `depth.png` -> `depth.json`.
pub fn sidecar_path(image_path: &Path) -> PathBuf {
    image_path.with_extension("json")
}

/// Write depth as a 16-bit PNG plus its JSON sidecar. Tick 0 is invalid.
pub fn save_depth(depth: &DepthMap, path: impl AsRef<Path>, scale: f64) -> Result<(), RasterError> {
    let path = path.as_ref();
    if !(scale.is_finite() && scale > 0.0) {
        return Err(RasterError::InvalidScale(scale));
    }
    let mut ticks = Vec::with_capacity(depth.data().len());
    for (index, &d) in depth.data().iter().enumerate() {
        if d == 0.0 {
            ticks.push(0u16);
            continue;
        }
        let t = (d / scale).round();
        if !(1.0..=u16::MAX as f64).contains(&t) {
            return Err(RasterError::DepthOutOfRange {
                index,
                value: d,
                scale,
            });
        }
        ticks.push(t as u16);
    }
    let img: ImageBuffer<Luma<u16>, Vec<u16>> =
        ImageBuffer::from_raw(depth.width() as u32, depth.height() as u32, ticks)
            .expect("depth buffer matches its dimensions");
    img.save_with_format(path, ImageFormat::Png)
        .map_err(image_err(path))?;
    let sidecar = DepthSidecar {
        depth_scale: scale,
        width: depth.width(),
        height: depth.height(),
    };
    let side = sidecar_path(path);
    let text = serde_json::to_string_pretty(&sidecar).map_err(|source| RasterError::Json {
        path: side.display().to_string(),
        source,
    })?;
    fs::write(&side, text).map_err(io_err(&side))
}

pub fn load_depth(path: impl AsRef<Path>) -> Result<DepthMap, RasterError> {
    let path = path.as_ref();
    let side = sidecar_path(path);
    let text = fs::read_to_string(&side).map_err(io_err(&side))?;
    let sidecar: DepthSidecar = serde_json::from_str(&text).map_err(|source| RasterError::Json {
        path: side.display().to_string(),
        source,
    })?;
    if !(sidecar.depth_scale.is_finite() && sidecar.depth_scale > 0.0) {
        return Err(RasterError::InvalidScale(sidecar.depth_scale));
    }
    let img = match open_image(path)? {
        DynamicImage::ImageLuma16(g) => g,
        other => {
            return Err(RasterError::UnsupportedBitDepth(format!(
                "depth must be 16-bit grayscale, got {:?}",
                other.color()
            )))
        }
    };
    let dims = (img.width() as usize, img.height() as usize);
    if dims != (sidecar.width, sidecar.height) {
        return Err(RasterError::SidecarMismatch {
            sidecar: (sidecar.width, sidecar.height),
            image: dims,
        });
    }
    let data = img
        .as_raw()
        .iter()
        .map(|&t| t as f64 * sidecar.depth_scale)
        .collect();
    DepthMap::new(dims.0, dims.1, data)
}

/// `c = round_half_up((n_c + 1) * 127.5)`; the zero vector maps to `(0,0,0)`.
pub fn encode_normal(n: Vector3<f64>) -> [u8; 3] {
    if n == Vector3::zeros() {
        return [0, 0, 0];
    }
    let q = |c: f64| ((c + 1.0) * 127.5 + 0.5).floor().clamp(0.0, 255.0) as u8;
    [q(n.x), q(n.y), q(n.z)]
}

/// Inverse of [`encode_normal`]. Returns `Ok(None)` for the invalid sentinel
/// and `Err(norm)` when the decoded vector is too short to be a unit normal.
pub fn decode_normal(c: [u8; 3]) -> Result<Option<Vector3<f64>>, f64> {
    if c == [0, 0, 0] {
        return Ok(None);
    }
    let v = Vector3::new(
        c[0] as f64 / 127.5 - 1.0,
        c[1] as f64 / 127.5 - 1.0,
        c[2] as f64 / 127.5 - 1.0,
    );
    let norm = v.norm();
    if norm < 0.5 {
        return Err(norm);
    }
    Ok(Some(v / norm))
}

pub fn encode_normal_map(n: &NormalMap) -> RgbImage {
    let mut raw = Vec::with_capacity(n.data().len() * 3);
    for v in n.data() {
        raw.extend_from_slice(&encode_normal(*v));
    }
    RgbImage::from_raw(n.width() as u32, n.height() as u32, raw)
        .expect("normal buffer matches its dimensions")
}

pub fn decode_normal_map(img: &RgbImage) -> Result<NormalMap, RasterError> {
    let width = img.width() as usize;
    let mut data = Vec::with_capacity(width * img.height() as usize);
    for (i, px) in img.pixels().enumerate() {
        let Rgb(c) = *px;
        match decode_normal(c) {
            Ok(v) => data.push(v.unwrap_or_else(Vector3::zeros)),
            Err(norm) => {
                return Err(RasterError::CorruptNormal {
                    x: i % width,
                    y: i / width,
                    norm,
                })
            }
        }
    }
    NormalMap::new(width, img.height() as usize, data)
}

pub fn save_normal_map(n: &NormalMap, path: impl AsRef<Path>) -> Result<(), RasterError> {
    let path = path.as_ref();
    encode_normal_map(n)
        .save_with_format(path, ImageFormat::Png)
        .map_err(image_err(path))
}

pub fn load_normal_map(path: impl AsRef<Path>) -> Result<NormalMap, RasterError> {
    let path = path.as_ref();
    let img = match open_image(path)? {
        DynamicImage::ImageRgb8(rgb) => rgb,
        img @ DynamicImage::ImageRgba8(_) => img.to_rgb8(),
        other => {
            return Err(RasterError::UnsupportedBitDepth(format!(
                "normal map must be 8-bit RGB, got {:?}",
                other.color()
            )))
        }
    };
    decode_normal_map(&img)
}
