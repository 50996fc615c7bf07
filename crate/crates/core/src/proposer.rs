//! Contact-point and manipulation-direction proposal from a normal map and
//! a part mask.
//!
//! The normal map is smoothed and differentiated; pixels with a large normal
//! gradient (creases, handles, silhouettes) are removed from the part mask.
//! The mask centroid is used when it survives the filtering. Otherwise the
//! direction is the most frequent surviving normal, and the contact is drawn
//! from a box around the centroid, or from anywhere in the filtered mask.

use std::collections::HashMap;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::normals::{self, NormalsError, DEFAULT_BLUR_RADIUS, DEFAULT_BLUR_SIGMA};
use crate::raster::{BinaryMask, NormalMap, PixelCoord, RasterError};
use crate::seed;

#[derive(Debug, Error)]
pub enum ProposeError {
    #[error("part mask is empty")]
    EmptyMask,
    #[error("no valid flat normal inside the part mask")]
    NoProposal,
    #[error("invalid proposer config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Raster(#[from] RasterError),
    #[error(transparent)]
    Normals(#[from] NormalsError),
}

/// How the box around an invalid centroid is tested before sampling in it.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoxRule {
    /// Sample in the box if it holds at least one valid pixel.
    #[default]
    AnyValid,
    /// Sample in the box only if every pixel of it is valid.
    AllValid,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProposerConfig {
    /// Gradient-magnitude threshold above which a pixel is an edge.
    pub filter_value: f64,
    pub blur_sigma: f64,
    pub blur_radius: usize,
    pub rng_seed: u64,
    /// Decimal places kept per component when counting normals.
    pub normal_quantization: u32,
    pub box_rule: BoxRule,
}

impl Default for ProposerConfig {
    fn default() -> Self {
        Self {
            filter_value: 0.1,
            blur_sigma: DEFAULT_BLUR_SIGMA,
            blur_radius: DEFAULT_BLUR_RADIUS,
            rng_seed: 0,
            normal_quantization: 2,
            box_rule: BoxRule::AnyValid,
        }
    }
}

impl ProposerConfig {
    pub fn validate(&self) -> Result<(), ProposeError> {
        if self.filter_value.is_nan() || self.filter_value <= 0.0 {
            return Err(ProposeError::InvalidConfig(format!(
                "filter_value must be > 0, got {}",
                self.filter_value
            )));
        }
        if !(self.blur_sigma.is_finite() && self.blur_sigma > 0.0) {
            return Err(ProposeError::InvalidConfig(format!(
                "blur_sigma must be > 0, got {}",
                self.blur_sigma
            )));
        }
        if self.normal_quantization > 12 {
            return Err(ProposeError::InvalidConfig(format!(
                "normal_quantization must be <= 12, got {}",
                self.normal_quantization
            )));
        }
        Ok(())
    }
}

/// Which branch produced the contact point.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fallback {
    Centroid,
    BboxRandom,
    MaskRandom,
}

impl Fallback {
    pub fn as_str(self) -> &'static str {
        match self {
            Fallback::Centroid => "centroid",
            Fallback::BboxRandom => "bbox_random",
            Fallback::MaskRandom => "mask_random",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AffordanceProposal {
    pub contact: PixelCoord,
    /// Unit surface normal in the camera frame.
    pub direction: Vector3<f64>,
    pub used_fallback: Fallback,
    /// Normals that survived edge filtering inside the part mask.
    pub masked_normals: NormalMap,
}

/// JSON form of a proposal.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProposalRecord {
    pub contact_px: [usize; 2],
    pub direction: [f64; 3],
    pub fallback: Fallback,
    pub seed: u64,
}

impl AffordanceProposal {
    pub fn record(&self, seed: u64) -> ProposalRecord {
        ProposalRecord {
            contact_px: [self.contact.x, self.contact.y],
            direction: [self.direction.x, self.direction.y, self.direction.z],
            fallback: self.used_fallback,
            seed,
        }
    }
}

/// Pixels whose gradient exceeds the filter value, plus every pixel whose
/// stencil reads an invalid normal (regardless of the threshold).
pub fn edge_mask(g: &normals::GradientField, cfg: &ProposerConfig) -> BinaryMask {
    let (w, h) = g.dims();
    BinaryMask::from_fn(w, h, |x, y| {
        g.touches_invalid(x, y) || g.magnitude(x, y) > cfg.filter_value
    })
    .expect("gradient field has valid dimensions")
}

/// Keep `n` where the pixel is in the part and not an edge; zero elsewhere.
pub fn masked_normals(
    n: &NormalMap,
    edge: &BinaryMask,
    part: &BinaryMask,
) -> Result<NormalMap, ProposeError> {
    edge.ensure_same_dims(n.dims())?;
    part.ensure_same_dims(n.dims())?;
    let data = n
        .data()
        .iter()
        .zip(edge.data().iter().zip(part.data()))
        .map(|(v, (&e, &p))| if p && !e { *v } else { Vector3::zeros() })
        .collect();
    Ok(NormalMap::new(n.width(), n.height(), data)?)
}

/// Mean foreground position, each coordinate rounded half-up.
pub fn centroid(m: &BinaryMask) -> Result<PixelCoord, ProposeError> {
    let (mut sx, mut sy, mut count) = (0u128, 0u128, 0u128);
    for p in m.foreground() {
        sx += p.x as u128;
        sy += p.y as u128;
        count += 1;
    }
    if count == 0 {
        return Err(ProposeError::EmptyMask);
    }
    // floor(sum / count + 1/2) without floating point.
    let round = |s: u128| ((2 * s + count) / (2 * count)) as usize;
    Ok(PixelCoord::new(round(sx), round(sy)))
}

fn quantize(v: &Vector3<f64>, decimals: u32) -> [i64; 3] {
    let scale = 10f64.powi(decimals as i32);
    [
        (v.x * scale).round() as i64,
        (v.y * scale).round() as i64,
        (v.z * scale).round() as i64,
    ]
}

/// Most frequent valid normal after quantization.
///
/// Ties go to the class seen first in row-major order. The returned vector is
/// the unquantized value of that class's first pixel.
pub fn mode_normal(n: &NormalMap, decimals: u32) -> Option<Vector3<f64>> {
    let mut classes: HashMap<[i64; 3], (usize, usize)> = HashMap::new();
    for (i, v) in n.data().iter().enumerate() {
        if *v == Vector3::zeros() {
            continue;
        }
        classes.entry(quantize(v, decimals)).or_insert((0, i)).0 += 1;
    }
    classes
        .values()
        .max_by(|a, b| a.0.cmp(&b.0).then(b.1.cmp(&a.1)))
        .map(|&(_, first)| n.data()[first])
}

/// Pixel rectangle `[x0, x1] x [y0, y1]` (inclusive, signed, unclipped).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SearchBox {
    pub x0: isize,
    pub y0: isize,
    pub x1: isize,
    pub y1: isize,
}

impl SearchBox {
    /// Box centered at `c` with a third of the mask's bounding-box size
    /// (rounded up). Even sizes extend one pixel further up and left.
    pub fn around(c: PixelCoord, mask: &BinaryMask) -> Option<SearchBox> {
        let (min, max) = mask.bounding_box()?;
        let bw = (max.x - min.x + 1).div_ceil(3) as isize;
        let bh = (max.y - min.y + 1).div_ceil(3) as isize;
        let x0 = c.x as isize - bw / 2;
        let y0 = c.y as isize - bh / 2;
        Some(SearchBox {
            x0,
            y0,
            x1: x0 + bw - 1,
            y1: y0 + bh - 1,
        })
    }

    /// Intersection with a `width x height` image; `None` if empty.
    pub fn clipped(self, width: usize, height: usize) -> Option<SearchBox> {
        let b = SearchBox {
            x0: self.x0.max(0),
            y0: self.y0.max(0),
            x1: self.x1.min(width as isize - 1),
            y1: self.y1.min(height as isize - 1),
        };
        (b.x0 <= b.x1 && b.y0 <= b.y1).then_some(b)
    }

    /// Row-major pixel indices inside the box.
    pub fn indices(self, width: usize) -> impl Iterator<Item = usize> {
        (self.y0..=self.y1).flat_map(move |y| {
            (self.x0..=self.x1).map(move |x| y as usize * width + x as usize)
        })
    }
}

fn sample(seed: u64, candidates: &[usize], width: usize) -> Option<PixelCoord> {
    seed::pick(
        seed::mix(seed, seed::tag::PROPOSER),
        candidates,
        seed::hash_indices(candidates),
    )
    .map(|i| PixelCoord::from_index(i, width))
}

/// Run the full proposal cascade on `n_map` restricted to `part`.
pub fn propose(
    n_map: &NormalMap,
    part: &BinaryMask,
    cfg: &ProposerConfig,
) -> Result<AffordanceProposal, ProposeError> {
    cfg.validate()?;
    part.ensure_same_dims(n_map.dims())?;
    if part.is_blank() {
        return Err(ProposeError::EmptyMask);
    }
    let (w, h) = n_map.dims();

    let blurred = normals::gaussian_blur(n_map, cfg.blur_sigma, cfg.blur_radius)?;
    let grads = normals::gradients(&blurred);
    let edges = edge_mask(&grads, cfg);
    let masked = masked_normals(n_map, &edges, part)?;
    if masked.valid_count() == 0 {
        return Err(ProposeError::NoProposal);
    }

    let c = centroid(part)?;
    if let Some(direction) = masked.valid_at(c) {
        return Ok(AffordanceProposal {
            contact: c,
            direction,
            used_fallback: Fallback::Centroid,
            masked_normals: masked,
        });
    }

    let direction = mode_normal(&masked, cfg.normal_quantization).ok_or(ProposeError::NoProposal)?;
    let valid = |i: usize| masked.data()[i] != Vector3::zeros();

    let in_box = SearchBox::around(c, part)
        .and_then(|b| b.clipped(w, h))
        .and_then(|b| {
            let all: Vec<usize> = b.indices(w).collect();
            let ok: Vec<usize> = all.iter().copied().filter(|&i| valid(i)).collect();
            let accept = match cfg.box_rule {
                BoxRule::AllValid => ok.len() == all.len(),
                BoxRule::AnyValid => !ok.is_empty(),
            };
            accept.then_some(ok)
        });

    let (candidates, used_fallback) = match in_box {
        Some(ok) => (ok, Fallback::BboxRandom),
        None => (
            (0..w * h).filter(|&i| valid(i) && part.data()[i]).collect(),
            Fallback::MaskRandom,
        ),
    };
    let contact = sample(cfg.rng_seed, &candidates, w).ok_or(ProposeError::NoProposal)?;
    Ok(AffordanceProposal {
        contact,
        direction,
        used_fallback,
        masked_normals: masked,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rect(w: usize, h: usize, x0: usize, x1: usize, y0: usize, y1: usize) -> BinaryMask {
        BinaryMask::from_fn(w, h, |x, y| (x0..=x1).contains(&x) && (y0..=y1).contains(&y)).unwrap()
    }

    #[test]
    fn centroid_examples() {
        let single = BinaryMask::from_fn(10, 10, |x, y| (x, y) == (3, 7)).unwrap();
        assert_eq!(centroid(&single).unwrap(), PixelCoord::new(3, 7));
        assert_eq!(centroid(&rect(10, 8, 2, 6, 0, 4)).unwrap(), PixelCoord::new(4, 2));
        // Mean x = 0.5 rounds up.
        let pair = BinaryMask::from_fn(2, 1, |_, _| true).unwrap();
        assert_eq!(centroid(&pair).unwrap(), PixelCoord::new(1, 0));
        assert!(matches!(
            centroid(&BinaryMask::empty(3, 3).unwrap()),
            Err(ProposeError::EmptyMask)
        ));
    }

    #[test]
    fn masked_normals_empty_edges_and_full_edges() {
        let n = NormalMap::from_fn(6, 6, |_, _| -Vector3::z()).unwrap();
        let part = rect(6, 6, 1, 3, 2, 4);
        let none = BinaryMask::empty(6, 6).unwrap();
        let m = masked_normals(&n, &none, &part).unwrap();
        for y in 0..6 {
            for x in 0..6 {
                assert_eq!(m.is_valid(x, y), part.at(x, y));
            }
        }
        let m = masked_normals(&n, &part, &part).unwrap();
        assert_eq!(m.valid_count(), 0);
        let wrong = BinaryMask::empty(5, 6).unwrap();
        assert!(masked_normals(&n, &wrong, &part).is_err());
    }

    #[test]
    fn edge_mask_infinite_threshold_keeps_only_invalid_stencils() {
        let n = NormalMap::from_fn(5, 5, |x, y| {
            if (x, y) == (0, 0) {
                Vector3::zeros()
            } else if x < 3 {
                -Vector3::z()
            } else {
                Vector3::x()
            }
        })
        .unwrap();
        let g = normals::gradients(&n);
        let cfg = ProposerConfig {
            filter_value: f64::INFINITY,
            ..Default::default()
        };
        let e = edge_mask(&g, &cfg);
        let expected: Vec<_> = [(0, 0), (1, 0), (0, 1)].map(|(x, y)| PixelCoord::new(x, y)).into();
        assert_eq!(e.foreground().collect::<Vec<_>>(), expected);
        let cfg = ProposerConfig::default();
        let e = edge_mask(&g, &cfg);
        assert!(e.at(2, 3) && e.at(3, 3) && !e.at(1, 3) && !e.at(4, 3));
    }

    #[test]
    fn mode_ties_go_to_first_in_row_major_order() {
        let a = Vector3::new(0.0, 0.0, -1.0);
        let b = Vector3::new(0.6, 0.0, -0.8);
        let n = NormalMap::new(4, 1, vec![b, a, a, b]).unwrap();
        assert_eq!(mode_normal(&n, 2), Some(b));
        let n = NormalMap::new(4, 1, vec![b, a, a, Vector3::zeros()]).unwrap();
        assert_eq!(mode_normal(&n, 2), Some(a));
        assert_eq!(mode_normal(&NormalMap::invalid(2, 2).unwrap(), 2), None);
    }

    #[test]
    fn mode_quantization_merges_near_equal_normals() {
        let a = Vector3::new(0.0, 0.0, -1.0);
        let a2 = Vector3::new(0.001, 0.0, -1.0).normalize();
        let b = Vector3::new(0.6, 0.0, -0.8);
        let n = NormalMap::new(3, 1, vec![b, a, a2]).unwrap();
        assert_eq!(mode_normal(&n, 2), Some(a));
        assert_eq!(mode_normal(&n, 4), Some(b));
    }

    #[test]
    fn search_box_is_centered_and_clipped() {
        let m = rect(20, 20, 3, 11, 5, 10);
        // bbox 9x6 -> box 3x2.
        let b = SearchBox::around(PixelCoord::new(7, 8), &m).unwrap();
        assert_eq!(b, SearchBox { x0: 6, y0: 7, x1: 8, y1: 8 });
        let b = SearchBox { x0: -2, y0: 18, x1: 1, y1: 22 }.clipped(20, 20).unwrap();
        assert_eq!(b, SearchBox { x0: 0, y0: 18, x1: 1, y1: 19 });
        assert_eq!(SearchBox { x0: 25, y0: 0, x1: 26, y1: 1 }.clipped(20, 20), None);
    }

    #[test]
    fn flat_part_takes_centroid() {
        let n = NormalMap::from_fn(20, 16, |_, _| -Vector3::z()).unwrap();
        let part = rect(20, 16, 4, 12, 3, 9);
        let p = propose(&n, &part, &ProposerConfig::default()).unwrap();
        assert_eq!(p.contact, PixelCoord::new(8, 6));
        assert_eq!(p.direction, -Vector3::z());
        assert_eq!(p.used_fallback, Fallback::Centroid);
    }

    #[test]
    fn part_over_invalid_normals_is_no_proposal() {
        let n = NormalMap::from_fn(8, 8, |x, _| if x < 4 { -Vector3::z() } else { Vector3::zeros() })
            .unwrap();
        // Column 3 survives blurring but its stencil reads column 4.
        let part = rect(8, 8, 3, 7, 0, 7);
        assert!(matches!(
            propose(&n, &part, &ProposerConfig::default()),
            Err(ProposeError::NoProposal)
        ));
    }

    #[test]
    fn config_validation() {
        let bad = ProposerConfig {
            filter_value: 0.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let n = NormalMap::from_fn(4, 4, |_, _| -Vector3::z()).unwrap();
        let part = BinaryMask::from_fn(4, 4, |_, _| true).unwrap();
        assert!(propose(&n, &part, &bad).is_err());
        assert!(matches!(
            propose(&n, &BinaryMask::empty(4, 4).unwrap(), &ProposerConfig::default()),
            Err(ProposeError::EmptyMask)
        ));
    }
}
