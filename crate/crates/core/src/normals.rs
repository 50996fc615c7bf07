//! Normal maps from depth, normal-map smoothing, and per-channel gradients.

use nalgebra::{Vector2, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::raster::{DepthMap, NormalMap, RasterError, VectorField};

/// Default Gaussian standard deviation, in pixels.
pub const DEFAULT_BLUR_SIGMA: f64 = 1.0;
/// Default kernel radius; the window is `(2r+1)x(2r+1)`.
pub const DEFAULT_BLUR_RADIUS: usize = 2;

/// Gradient magnitude assigned to pixels whose stencil touches an invalid pixel.
pub const INVALID_GRADIENT: f64 = f64::MAX;

#[derive(Debug, Error)]
pub enum NormalsError {
    #[error("depth map has no valid pixel")]
    NoValidDepth,
    #[error("blur sigma must be finite and > 0, got {0}")]
    InvalidSigma(f64),
    #[error("focal lengths must be finite and > 0, got fx={fx}, fy={fy}")]
    InvalidIntrinsics { fx: f64, fy: f64 },
    #[error(transparent)]
    Raster(#[from] RasterError),
}

/// Pinhole intrinsics in pixels. Camera looks along `+z`, `x` right, `y` down.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
}

impl CameraIntrinsics {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64) -> Result<Self, NormalsError> {
        let k = Self { fx, fy, cx, cy };
        k.validate()?;
        Ok(k)
    }

    pub fn validate(&self) -> Result<(), NormalsError> {
        let ok = |f: f64| f.is_finite() && f > 0.0;
        if !(ok(self.fx) && ok(self.fy) && self.cx.is_finite() && self.cy.is_finite()) {
            return Err(NormalsError::InvalidIntrinsics {
                fx: self.fx,
                fy: self.fy,
            });
        }
        Ok(())
    }

    /// Ray through pixel `(u, v)` scaled so its `z` component is 1.
    #[inline]
    pub fn ray(&self, u: f64, v: f64) -> Vector3<f64> {
        Vector3::new((u - self.cx) / self.fx, (v - self.cy) / self.fy, 1.0)
    }

    /// `depth * K^-1 (u, v, 1)`.
    #[inline]
    pub fn back_project(&self, u: f64, v: f64, depth: f64) -> Vector3<f64> {
        self.ray(u, v) * depth
    }

    /// Pixel coordinates of a camera-frame point with `z > 0`.
    #[inline]
    pub fn project(&self, p: &Vector3<f64>) -> (f64, f64) {
        (
            self.fx * p.x / p.z + self.cx,
            self.fy * p.y / p.z + self.cy,
        )
    }
}

/// Normals from the cross product of back-projected 4-neighbors.
///
/// A pixel gets a normal only if it is interior and its full 3x3 neighborhood
/// has valid depth. Normals are oriented toward the camera (`nz < 0`).
pub fn normals_from_depth(
    depth: &DepthMap,
    k: &CameraIntrinsics,
) -> Result<NormalMap, NormalsError> {
    k.validate()?;
    if depth.valid_count() == 0 {
        return Err(NormalsError::NoValidDepth);
    }
    let (w, h) = depth.dims();
    let point = |x: usize, y: usize| k.back_project(x as f64, y as f64, depth.at(x, y));
    let mut out = vec![Vector3::zeros(); w * h];
    for y in 1..h.saturating_sub(1) {
        for x in 1..w.saturating_sub(1) {
            let neighborhood_valid = (y - 1..=y + 1)
                .all(|yy| (x - 1..=x + 1).all(|xx| depth.is_valid(xx, yy)));
            if !neighborhood_valid {
                continue;
            }
            let du = point(x + 1, y) - point(x - 1, y);
            let dv = point(x, y + 1) - point(x, y - 1);
            let c = du.cross(&dv);
            let norm = c.norm();
            if !(norm > 0.0 && norm.is_finite()) {
                continue;
            }
            let mut n = c / norm;
            if n.z > 0.0 {
                n = -n;
            }
            out[y * w + x] = n;
        }
    }
    Ok(NormalMap::new(w, h, out)?)
}

/// Normalized 1-D Gaussian weights for offsets `-radius..=radius`.
pub fn gaussian_kernel(sigma: f64, radius: usize) -> Result<Vec<f64>, NormalsError> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(NormalsError::InvalidSigma(sigma));
    }
    let r = radius as isize;
    let raw: Vec<f64> = (-r..=r)
        .map(|i| (-((i * i) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = raw.iter().sum();
    Ok(raw.into_iter().map(|v| v / sum).collect())
}

/// Per-channel Gaussian smoothing of a normal map.
///
/// Borders replicate the edge pixel. Invalid pixels contribute no weight and
/// the remaining weights are renormalized; they also stay invalid in the
/// output. Every valid output pixel is rescaled to unit length.
pub fn gaussian_blur(n: &NormalMap, sigma: f64, radius: usize) -> Result<NormalMap, NormalsError> {
    let kernel = gaussian_kernel(sigma, radius)?;
    let (w, h) = n.dims();
    let r = radius as isize;
    let clamp = |v: isize, hi: usize| v.clamp(0, hi as isize - 1) as usize;
    let mut out = vec![Vector3::zeros(); w * h];
    for y in 0..h {
        for x in 0..w {
            let center = n.at(x, y);
            if center == Vector3::zeros() {
                continue;
            }
            let mut acc = Vector3::zeros();
            let mut weight = 0.0;
            for (ky, dy) in (-r..=r).enumerate() {
                let yy = clamp(y as isize + dy, h);
                for (kx, dx) in (-r..=r).enumerate() {
                    let xx = clamp(x as isize + dx, w);
                    let v = n.at(xx, yy);
                    if v == Vector3::zeros() {
                        continue;
                    }
                    let wgt = kernel[ky] * kernel[kx];
                    acc += v * wgt;
                    weight += wgt;
                }
            }
            let mean = acc / weight;
            let norm = mean.norm();
            out[y * w + x] = if norm > 1e-12 { mean / norm } else { center };
        }
    }
    Ok(NormalMap::new(w, h, out)?)
}

/// Spatial gradients of the three channels plus their combined magnitude.
#[derive(Clone, Debug, PartialEq)]
pub struct GradientField {
    width: usize,
    height: usize,
    /// `[d/dx, d/dy]` for each of the x, y, z channels.
    channels: Vec<[Vector2<f64>; 3]>,
    magnitude: Vec<f64>,
    touches_invalid: Vec<bool>,
}

impl GradientField {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn magnitude(&self, x: usize, y: usize) -> f64 {
        self.magnitude[y * self.width + x]
    }

    pub fn magnitudes(&self) -> &[f64] {
        &self.magnitude
    }

    #[inline]
    pub fn channel_gradients(&self, x: usize, y: usize) -> [Vector2<f64>; 3] {
        self.channels[y * self.width + x]
    }

    /// True if the difference stencil at this pixel reads an invalid pixel.
    #[inline]
    pub fn touches_invalid(&self, x: usize, y: usize) -> bool {
        self.touches_invalid[y * self.width + x]
    }
}

pub fn gradients(n: &NormalMap) -> GradientField {
    field_gradients(n.as_field())
}

/// Central differences, one-sided at borders, zero along a length-1 axis.
pub fn field_gradients(f: &VectorField) -> GradientField {
    let (w, h) = f.dims();
    let mut channels = Vec::with_capacity(w * h);
    let mut magnitude = Vec::with_capacity(w * h);
    let mut touches_invalid = Vec::with_capacity(w * h);

    // Returns (lo, hi, divisor) for the difference along one axis.
    let stencil = |i: usize, len: usize| -> Option<(usize, usize, f64)> {
        match len {
            1 => None,
            _ if i == 0 => Some((0, 1, 1.0)),
            _ if i == len - 1 => Some((len - 2, len - 1, 1.0)),
            _ => Some((i - 1, i + 1, 2.0)),
        }
    };

    for y in 0..h {
        for x in 0..w {
            let mut invalid = !f.is_valid(x, y);
            let gx = stencil(x, w).map(|(lo, hi, div)| {
                invalid |= !f.is_valid(lo, y) || !f.is_valid(hi, y);
                (f.at(hi, y) - f.at(lo, y)) / div
            });
            let gy = stencil(y, h).map(|(lo, hi, div)| {
                invalid |= !f.is_valid(x, lo) || !f.is_valid(x, hi);
                (f.at(x, hi) - f.at(x, lo)) / div
            });
            let gx = gx.unwrap_or_else(Vector3::zeros);
            let gy = gy.unwrap_or_else(Vector3::zeros);
            channels.push([
                Vector2::new(gx.x, gy.x),
                Vector2::new(gx.y, gy.y),
                Vector2::new(gx.z, gy.z),
            ]);
            magnitude.push(if invalid {
                INVALID_GRADIENT
            } else {
                (gx.norm_squared() + gy.norm_squared()).sqrt()
            });
            touches_invalid.push(invalid);
        }
    }
    GradientField {
        width: w,
        height: h,
        channels,
        magnitude,
        touches_invalid,
    }
}
