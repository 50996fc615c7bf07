//! Pixel grids shared by every stage of the pipeline.
//!
//! All grids are row-major with the origin at the top-left corner; `x` is the
//! column and `y` the row. Each map type validates its dimensions and pixel
//! invariants at construction and is immutable afterwards, apart from the
//! explicit `set` helpers on [`BinaryMask`].

mod io;

pub use io::{
    decode_normal, decode_normal_map, encode_normal, encode_normal_map, load_depth, load_mask,
    load_normal_map, mask_from_luma, mask_to_luma, sidecar_path, save_depth, save_mask,
    save_normal_map, DepthSidecar,
};

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance on `|n| - 1` accepted for a valid normal-map pixel.
pub const UNIT_TOLERANCE: f64 = 1e-4;

#[derive(Debug, Error)]
pub enum RasterError {
    #[error("grid dimensions must be at least 1x1, got {width}x{height}")]
    ZeroDimension { width: usize, height: usize },
    #[error("expected {expected} pixels, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("dimension mismatch: {left:?} vs {right:?}")]
    DimensionMismatch {
        left: (usize, usize),
        right: (usize, usize),
    },
    #[error("depth at pixel {index} is {value}; depth must be finite and >= 0")]
    InvalidDepth { index: usize, value: f64 },
    #[error("normal at pixel {index} has length {norm}, expected unit length or the zero sentinel")]
    NonUnitNormal { index: usize, norm: f64 },
    #[error("corrupt normal at ({x}, {y}): decoded length {norm} < 0.5")]
    CorruptNormal { x: usize, y: usize, norm: f64 },
    #[error("unsupported image format: {0}")]
    UnsupportedBitDepth(String),
    #[error("depth {value} at pixel {index} does not fit a 16-bit tick with scale {scale}")]
    DepthOutOfRange { index: usize, value: f64, scale: f64 },
    #[error("invalid depth scale {0}")]
    InvalidScale(f64),
    #[error("sidecar says {sidecar:?} but image is {image:?}")]
    SidecarMismatch {
        sidecar: (usize, usize),
        image: (usize, usize),
    },
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("image error on {path}: {source}")]
    Image {
        path: String,
        #[source]
        source: image::ImageError,
    },
    #[error("json error on {path}: {source}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },
}

fn check_dims(width: usize, height: usize, len: usize) -> Result<(), RasterError> {
    if width == 0 || height == 0 {
        return Err(RasterError::ZeroDimension { width, height });
    }
    let expected = width * height;
    if len != expected {
        return Err(RasterError::LengthMismatch {
            expected,
            actual: len,
        });
    }
    Ok(())
}

/// Pixel position: `x` is the column, `y` the row.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PixelCoord {
    pub x: usize,
    pub y: usize,
}

impl PixelCoord {
    pub const fn new(x: usize, y: usize) -> Self {
        Self { x, y }
    }

    #[inline]
    pub fn index(self, width: usize) -> usize {
        self.y * width + self.x
    }

    #[inline]
    pub fn from_index(index: usize, width: usize) -> Self {
        Self {
            x: index % width,
            y: index / width,
        }
    }
}

/// Binary foreground mask. Foreground marks a manipulable region.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    data: Vec<bool>,
}

impl BinaryMask {
    pub fn new(width: usize, height: usize, data: Vec<bool>) -> Result<Self, RasterError> {
        check_dims(width, height, data.len())?;
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn empty(width: usize, height: usize) -> Result<Self, RasterError> {
        Self::new(width, height, vec![false; width * height])
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> bool,
    ) -> Result<Self, RasterError> {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self::new(width, height, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn data(&self) -> &[bool] {
        &self.data
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize) -> bool {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn get(&self, p: PixelCoord) -> bool {
        self.contains(p) && self.data[p.index(self.width)]
    }

    pub fn set(&mut self, x: usize, y: usize, value: bool) {
        self.data[y * self.width + x] = value;
    }

    #[inline]
    pub fn contains(&self, p: PixelCoord) -> bool {
        p.x < self.width && p.y < self.height
    }

    /// Number of foreground pixels.
    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&v| v).count()
    }

    pub fn is_blank(&self) -> bool {
        !self.data.iter().any(|&v| v)
    }

    /// Foreground pixels in row-major order.
    pub fn foreground(&self) -> impl Iterator<Item = PixelCoord> + '_ {
        let width = self.width;
        self.data
            .iter()
            .enumerate()
            .filter(|(_, &v)| v)
            .map(move |(i, _)| PixelCoord::from_index(i, width))
    }

    /// Inclusive bounding box `(min, max)` of the foreground.
    pub fn bounding_box(&self) -> Option<(PixelCoord, PixelCoord)> {
        let mut it = self.foreground();
        let first = it.next()?;
        let (mut min, mut max) = (first, first);
        for p in it {
            min.x = min.x.min(p.x);
            min.y = min.y.min(p.y);
            max.x = max.x.max(p.x);
            max.y = max.y.max(p.y);
        }
        Some((min, max))
    }

    pub fn ensure_same_dims(&self, other: (usize, usize)) -> Result<(), RasterError> {
        if self.dims() != other {
            return Err(RasterError::DimensionMismatch {
                left: self.dims(),
                right: other,
            });
        }
        Ok(())
    }

    /// Morphological dilation with a `(2r+1)x(2r+1)` square element.
    pub fn dilate(&self, radius: usize) -> BinaryMask {
        self.morph(radius, true)
    }

    /// Morphological erosion with a `(2r+1)x(2r+1)` square element.
    /// Pixels outside the image count as background.
    pub fn erode(&self, radius: usize) -> BinaryMask {
        self.morph(radius, false)
    }

    fn morph(&self, radius: usize, dilate: bool) -> BinaryMask {
        if radius == 0 {
            return self.clone();
        }
        let (w, h) = (self.width as isize, self.height as isize);
        let r = radius as isize;
        let mut data = Vec::with_capacity(self.data.len());
        for y in 0..h {
            for x in 0..w {
                let mut hit = !dilate;
                'window: for dy in -r..=r {
                    for dx in -r..=r {
                        let (nx, ny) = (x + dx, y + dy);
                        let inside = nx >= 0 && ny >= 0 && nx < w && ny < h;
                        let v = inside && self.data[(ny * w + nx) as usize];
                        if dilate && v {
                            hit = true;
                            break 'window;
                        }
                        if !dilate && !v {
                            hit = false;
                            break 'window;
                        }
                    }
                }
                data.push(hit);
            }
        }
        BinaryMask {
            width: self.width,
            height: self.height,
            data,
        }
    }
}

/// Per-pixel depth in scene units. `0` marks an invalid pixel.
#[derive(Clone, Debug, PartialEq)]
pub struct DepthMap {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl DepthMap {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self, RasterError> {
        check_dims(width, height, data.len())?;
        if let Some((index, &value)) = data
            .iter()
            .enumerate()
            .find(|(_, v)| !v.is_finite() || **v < 0.0)
        {
            return Err(RasterError::InvalidDepth { index, value });
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> f64,
    ) -> Result<Self, RasterError> {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self::new(width, height, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn is_valid(&self, x: usize, y: usize) -> bool {
        self.at(x, y) > 0.0
    }

    pub fn valid_count(&self) -> usize {
        self.data.iter().filter(|&&d| d > 0.0).count()
    }
}

/// Raw three-channel grid with no unit-length requirement.
///
/// The exact zero vector is the invalid sentinel. Gradients are defined on
/// this type so they can be checked on arbitrary channel fields.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    width: usize,
    height: usize,
    data: Vec<Vector3<f64>>,
}

impl VectorField {
    pub fn new(width: usize, height: usize, data: Vec<Vector3<f64>>) -> Result<Self, RasterError> {
        check_dims(width, height, data.len())?;
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> Vector3<f64>,
    ) -> Result<Self, RasterError> {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self::new(width, height, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn data(&self) -> &[Vector3<f64>] {
        &self.data
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize) -> Vector3<f64> {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn is_valid(&self, x: usize, y: usize) -> bool {
        self.at(x, y) != Vector3::zeros()
    }
}

/// Per-pixel unit surface normal in the camera frame; `(0,0,0)` is invalid.
#[derive(Clone, Debug, PartialEq)]
pub struct NormalMap(VectorField);

impl NormalMap {
    pub fn new(width: usize, height: usize, data: Vec<Vector3<f64>>) -> Result<Self, RasterError> {
        NormalMap::try_from(VectorField::new(width, height, data)?)
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        f: impl FnMut(usize, usize) -> Vector3<f64>,
    ) -> Result<Self, RasterError> {
        NormalMap::try_from(VectorField::from_fn(width, height, f)?)
    }

    /// All pixels set to the invalid sentinel.
    pub fn invalid(width: usize, height: usize) -> Result<Self, RasterError> {
        Self::new(width, height, vec![Vector3::zeros(); width * height])
    }

    pub fn width(&self) -> usize {
        self.0.width
    }

    pub fn height(&self) -> usize {
        self.0.height
    }

    pub fn dims(&self) -> (usize, usize) {
        self.0.dims()
    }

    pub fn data(&self) -> &[Vector3<f64>] {
        &self.0.data
    }

    pub fn as_field(&self) -> &VectorField {
        &self.0
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize) -> Vector3<f64> {
        self.0.at(x, y)
    }

    #[inline]
    pub fn is_valid(&self, x: usize, y: usize) -> bool {
        self.0.is_valid(x, y)
    }

    /// The normal at `p`, or `None` if `p` is out of bounds or invalid.
    pub fn valid_at(&self, p: PixelCoord) -> Option<Vector3<f64>> {
        if p.x >= self.width() || p.y >= self.height() {
            return None;
        }
        let n = self.at(p.x, p.y);
        (n != Vector3::zeros()).then_some(n)
    }

    pub fn valid_count(&self) -> usize {
        self.data().iter().filter(|n| **n != Vector3::zeros()).count()
    }
}

impl TryFrom<VectorField> for NormalMap {
    type Error = RasterError;

    fn try_from(field: VectorField) -> Result<Self, RasterError> {
        for (index, n) in field.data.iter().enumerate() {
            if *n == Vector3::zeros() {
                continue;
            }
            let norm = n.norm();
            if !norm.is_finite() || (norm - 1.0).abs() > UNIT_TOLERANCE {
                return Err(RasterError::NonUnitNormal { index, norm });
            }
        }
        Ok(NormalMap(field))
    }
}
