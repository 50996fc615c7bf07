//! Segmentation scores, largest-region selection, and the false-positive gate.

use std::collections::{BTreeMap, VecDeque};
use std::fmt::Write as _;

use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::raster::{BinaryMask, RasterError};

/// Predictions with a false-positive-over-union ratio above this are skipped.
pub const FPR_UNION_GATE: f64 = 0.5;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("no mask pairs to aggregate")]
    Empty,
    #[error(transparent)]
    Raster(#[from] RasterError),
}

/// Pixel-count comparison of a predicted mask against ground truth.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, serde::Deserialize)]
pub struct MaskPairScore {
    pub iou: f64,
    pub f1: f64,
    pub fpr_union: f64,
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
}

impl MaskPairScore {
    /// Scores from raw counts. Both masks empty scores as a perfect match.
    pub fn from_counts(tp: u64, fp: u64, fn_: u64, tn: u64) -> Self {
        let union = tp + fp + fn_;
        if union == 0 {
            return Self {
                iou: 1.0,
                f1: 1.0,
                fpr_union: 0.0,
                tp,
                fp,
                fn_,
                tn,
            };
        }
        Self {
            iou: tp as f64 / union as f64,
            f1: (2 * tp) as f64 / (2 * tp + fp + fn_) as f64,
            fpr_union: fp as f64 / union as f64,
            tp,
            fp,
            fn_,
            tn,
        }
    }
}

pub fn score_pair(pred: &BinaryMask, gt: &BinaryMask) -> Result<MaskPairScore, MetricsError> {
    pred.ensure_same_dims(gt.dims())?;
    let (mut tp, mut fp, mut fn_, mut tn) = (0u64, 0u64, 0u64, 0u64);
    for (&p, &g) in pred.data().iter().zip(gt.data()) {
        match (p, g) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => tn += 1,
        }
    }
    Ok(MaskPairScore::from_counts(tp, fp, fn_, tn))
}

/// True if manipulation should proceed (`fpr_union <= 0.5`).
pub fn gate(score: &MaskPairScore) -> bool {
    score.fpr_union <= FPR_UNION_GATE
}

/// 4-connected component labels (`0` = background, components numbered
/// from 1 in order of their first row-major pixel) and component sizes.
pub fn connected_components(m: &BinaryMask) -> (Vec<u32>, Vec<usize>) {
    let (w, h) = m.dims();
    let mut labels = vec![0u32; w * h];
    let mut sizes = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..w * h {
        if !m.data()[start] || labels[start] != 0 {
            continue;
        }
        let label = sizes.len() as u32 + 1;
        labels[start] = label;
        queue.push_back(start);
        let mut size = 0;
        while let Some(i) = queue.pop_front() {
            size += 1;
            let (x, y) = (i % w, i / w);
            let mut visit = |j: usize| {
                if m.data()[j] && labels[j] == 0 {
                    labels[j] = label;
                    queue.push_back(j);
                }
            };
            if x > 0 {
                visit(i - 1);
            }
            if x + 1 < w {
                visit(i + 1);
            }
            if y > 0 {
                visit(i - w);
            }
            if y + 1 < h {
                visit(i + w);
            }
        }
        sizes.push(size);
    }
    (labels, sizes)
}

/// Keep only the largest 4-connected component. Ties go to the component
/// whose first pixel comes earliest in row-major order.
pub fn largest_region(m: &BinaryMask) -> BinaryMask {
    let (labels, sizes) = connected_components(m);
    let Some(best) = sizes
        .iter()
        .enumerate()
        .fold(None::<(usize, usize)>, |acc, (i, &s)| match acc {
            Some((_, bs)) if bs >= s => acc,
            _ => Some((i, s)),
        })
        .map(|(i, _)| i as u32 + 1)
    else {
        return m.clone();
    };
    let data = labels.iter().map(|&l| l == best).collect();
    BinaryMask::new(m.width(), m.height(), data).expect("same dimensions as input")
}

fn one_decimal<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_f64((v * 10.0).round() / 10.0)
}

/// Mean scores over a group of mask pairs, in percent.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CategorySummary {
    pub category: String,
    pub pairs: usize,
    #[serde(serialize_with = "one_decimal")]
    pub miou: f64,
    #[serde(serialize_with = "one_decimal")]
    pub f1: f64,
}

/// Per-category and overall means. mIoU is averaged per image, not pooled.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MetricsReport {
    pub categories: Vec<CategorySummary>,
    pub overall: CategorySummary,
}

fn summarize<'a>(category: &str, scores: impl Iterator<Item = &'a MaskPairScore>) -> CategorySummary {
    let (mut n, mut iou, mut f1) = (0usize, 0.0, 0.0);
    for s in scores {
        n += 1;
        iou += s.iou;
        f1 += s.f1;
    }
    CategorySummary {
        category: category.to_string(),
        pairs: n,
        miou: 100.0 * iou / n as f64,
        f1: 100.0 * f1 / n as f64,
    }
}

pub fn aggregate(scores: &[(String, MaskPairScore)]) -> Result<MetricsReport, MetricsError> {
    if scores.is_empty() {
        return Err(MetricsError::Empty);
    }
    let mut groups: BTreeMap<&str, Vec<&MaskPairScore>> = BTreeMap::new();
    for (cat, s) in scores {
        groups.entry(cat.as_str()).or_default().push(s);
    }
    let categories = groups
        .iter()
        .map(|(cat, ss)| summarize(cat, ss.iter().copied()))
        .collect();
    Ok(MetricsReport {
        categories,
        overall: summarize("overall", scores.iter().map(|(_, s)| s)),
    })
}

impl MetricsReport {
    /// Aligned text table with one row per category and an overall row.
    pub fn to_table(&self, method: &str) -> String {
        let rows: Vec<&CategorySummary> =
            self.categories.iter().chain(std::iter::once(&self.overall)).collect();
        let cat_w = rows.iter().map(|r| r.category.len()).max().unwrap_or(0).max(8);
        let method_w = method.len().max(6);
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<method_w$}  {:<cat_w$}  {:>6}  {:>6}",
            "Method", "Category", "mIoU", "F1"
        );
        for r in rows {
            let _ = writeln!(
                out,
                "{:<method_w$}  {:<cat_w$}  {:>6.1}  {:>6.1}",
                method, r.category, r.miou, r.f1
            );
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square(w: usize, x0: usize, y0: usize, side: usize) -> BinaryMask {
        BinaryMask::from_fn(w, w, |x, y| {
            (x0..x0 + side).contains(&x) && (y0..y0 + side).contains(&y)
        })
        .unwrap()
    }

    #[test]
    fn identical_masks_score_perfectly() {
        let m = square(20, 3, 4, 6);
        let s = score_pair(&m, &m).unwrap();
        assert_eq!((s.iou, s.f1, s.fpr_union), (1.0, 1.0, 0.0));
    }

    #[test]
    fn shifted_square() {
        let gt = square(30, 5, 5, 10);
        let pred = square(30, 10, 5, 10);
        let s = score_pair(&pred, &gt).unwrap();
        assert_eq!((s.tp, s.fp, s.fn_), (50, 50, 50));
        assert_eq!(s.iou, 1.0 / 3.0);
        assert_eq!(s.f1, 0.5);
        assert_eq!(s.fpr_union, 1.0 / 3.0);
    }

    #[test]
    fn disjoint_masks() {
        let gt = square(30, 0, 0, 4);
        let pred = square(30, 10, 10, 3);
        let s = score_pair(&pred, &gt).unwrap();
        assert_eq!((s.iou, s.f1), (0.0, 0.0));
        assert_eq!(s.fpr_union, 9.0 / 25.0);
    }

    #[test]
    fn degenerate_cases() {
        let e = BinaryMask::empty(5, 5).unwrap();
        let s = score_pair(&e, &e).unwrap();
        assert_eq!((s.iou, s.f1, s.fpr_union), (1.0, 1.0, 0.0));
        let s = score_pair(&square(5, 0, 0, 2), &e).unwrap();
        assert_eq!((s.iou, s.fpr_union), (0.0, 1.0));
        assert!(score_pair(&e, &BinaryMask::empty(4, 5).unwrap()).is_err());
    }

    #[test]
    fn gate_boundary_is_strict() {
        let at = |fpr_union| MaskPairScore {
            fpr_union,
            ..MaskPairScore::from_counts(1, 0, 0, 0)
        };
        assert!(gate(&at(0.0)));
        assert!(gate(&at(0.5)));
        assert!(!gate(&at(0.51)));
        // Exactly half false positives from pixel counts.
        assert!(gate(&MaskPairScore::from_counts(10, 10, 0, 0)));
        assert!(!gate(&MaskPairScore::from_counts(10, 11, 0, 0)));
    }

    #[test]
    fn largest_region_keeps_biggest_blob() {
        let m = BinaryMask::from_fn(20, 20, |x, y| {
            ((1..7).contains(&x) && (1..6).contains(&y)) || ((10..14).contains(&x) && (10..13).contains(&y))
        })
        .unwrap();
        assert_eq!(m.count(), 42);
        let l = largest_region(&m);
        assert_eq!(l.count(), 30);
        assert!(l.at(1, 1) && !l.at(10, 10));
    }

    #[test]
    fn largest_region_tie_prefers_earliest() {
        let m = BinaryMask::from_fn(10, 10, |x, y| (x, y) == (8, 1) || (x, y) == (1, 5)).unwrap();
        let l = largest_region(&m);
        assert_eq!(l.foreground().collect::<Vec<_>>().len(), 1);
        assert!(l.at(8, 1));
    }

    #[test]
    fn diagonal_pixels_are_separate_components() {
        let m = BinaryMask::from_fn(3, 3, |x, y| x == y).unwrap();
        let (_, sizes) = connected_components(&m);
        assert_eq!(sizes, vec![1, 1, 1]);
        let e = BinaryMask::empty(3, 3).unwrap();
        assert_eq!(largest_region(&e), e);
    }

    #[test]
    fn aggregate_means() {
        let one = MaskPairScore::from_counts(5, 0, 0, 0);
        let r = aggregate(&[("a".into(), one)]).unwrap();
        assert_eq!(r.overall.miou, 100.0);
        let third = MaskPairScore::from_counts(1, 1, 1, 0);
        let two_thirds = MaskPairScore::from_counts(2, 1, 0, 0);
        let r = aggregate(&[("a".into(), third), ("b".into(), two_thirds)]).unwrap();
        assert!((r.overall.miou - 50.0).abs() < 1e-12);
        assert_eq!(r.categories.len(), 2);
        assert!(matches!(aggregate(&[]), Err(MetricsError::Empty)));
    }

    #[test]
    fn report_json_rounds_to_one_decimal() {
        let third = MaskPairScore::from_counts(1, 1, 1, 0);
        let r = aggregate(&[("door".into(), third)]).unwrap();
        let v = serde_json::to_value(&r).unwrap();
        assert_eq!(v["overall"]["miou"], 33.3);
        assert!(r.to_table("oracle").contains("  33.3"));
    }
}
