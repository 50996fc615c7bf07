use std::collections::VecDeque;

use manipkit_core::metrics::{self, MaskPairScore};
use manipkit_core::raster::BinaryMask;
use manipkit_core::seed;
use proptest::prelude::*;
use rand::Rng;

fn random_mask(rng: &mut impl Rng, w: usize, h: usize, p: f64) -> BinaryMask {
    BinaryMask::from_fn(w, h, |_, _| rng.random_bool(p)).unwrap()
}

/// Per-pixel counting oracle.
fn count_oracle(pred: &BinaryMask, gt: &BinaryMask) -> (u64, u64, u64, u64) {
    let (mut tp, mut fp, mut fn_, mut tn) = (0, 0, 0, 0);
    for y in 0..pred.height() {
        for x in 0..pred.width() {
            match (pred.at(x, y), gt.at(x, y)) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, true) => fn_ += 1,
                (false, false) => tn += 1,
            }
        }
    }
    (tp, fp, fn_, tn)
}

#[test]
fn score_pair_matches_counting_oracle() {
    let mut rng = seed::rng(42);
    for i in 0..1000 {
        let p = [0.05, 0.3, 0.5, 0.8][i % 4];
        let pred = random_mask(&mut rng, 64, 64, p);
        let gt = random_mask(&mut rng, 64, 64, 0.4);
        let s = metrics::score_pair(&pred, &gt).unwrap();
        let (tp, fp, fn_, tn) = count_oracle(&pred, &gt);
        assert_eq!((s.tp, s.fp, s.fn_, s.tn), (tp, fp, fn_, tn));
        let u = (tp + fp + fn_) as f64;
        let d = (2 * tp + fp + fn_) as f64;
        assert!((s.iou - tp as f64 / u).abs() <= 1e-12);
        assert!((s.f1 - 2.0 * tp as f64 / d).abs() <= 1e-12);
        assert!((s.fpr_union - fp as f64 / u).abs() <= 1e-12);
    }
}

#[test]
fn shifted_square_fixture() {
    let gt = BinaryMask::from_fn(30, 20, |x, y| (5..15).contains(&x) && (5..15).contains(&y)).unwrap();
    let pred = BinaryMask::from_fn(30, 20, |x, y| (10..20).contains(&x) && (5..15).contains(&y)).unwrap();
    let s = metrics::score_pair(&pred, &gt).unwrap();
    assert_eq!((s.tp, s.fp, s.fn_), (50, 50, 50));
    assert_eq!(s.iou, 1.0 / 3.0);
    assert_eq!(s.f1, 0.5);
    assert_eq!(s.fpr_union, 1.0 / 3.0);
}

/// BFS flood fill: every 4-connected component as a pixel list.
fn flood_components(m: &BinaryMask) -> Vec<Vec<usize>> {
    let (w, h) = m.dims();
    let mut seen = vec![false; w * h];
    let mut out = Vec::new();
    for start in 0..w * h {
        if !m.data()[start] || seen[start] {
            continue;
        }
        let mut comp = Vec::new();
        let mut queue = VecDeque::from([start]);
        seen[start] = true;
        while let Some(i) = queue.pop_front() {
            comp.push(i);
            let (x, y) = (i % w, i / w);
            let mut nbrs = Vec::new();
            if x > 0 {
                nbrs.push(i - 1);
            }
            if x + 1 < w {
                nbrs.push(i + 1);
            }
            if y > 0 {
                nbrs.push(i - w);
            }
            if y + 1 < h {
                nbrs.push(i + w);
            }
            for j in nbrs {
                if m.data()[j] && !seen[j] {
                    seen[j] = true;
                    queue.push_back(j);
                }
            }
        }
        out.push(comp);
    }
    out
}

#[test]
fn largest_region_matches_flood_fill() {
    let blobs = BinaryMask::from_fn(20, 12, |x, y| {
        ((1..7).contains(&x) && (1..6).contains(&y)) || ((10..14).contains(&x) && (2..5).contains(&y))
    })
    .unwrap();
    assert_eq!(blobs.count(), 42);
    let kept = metrics::largest_region(&blobs);
    assert_eq!(kept.count(), 30);
    assert!(kept.at(1, 1) && !kept.at(10, 2));

    let mut rng = seed::rng(8);
    for _ in 0..200 {
        let m = random_mask(&mut rng, 24, 18, 0.45);
        let comps = flood_components(&m);
        let kept = metrics::largest_region(&m);
        let best = comps.iter().map(Vec::len).max().unwrap_or(0);
        // Components come out in order of their first pixel, so the first
        // maximal one is the earliest.
        let want: Vec<usize> = comps.iter().find(|c| c.len() == best).cloned().unwrap_or_default();
        let mut got: Vec<usize> = (0..24 * 18).filter(|&i| kept.data()[i]).collect();
        got.sort_unstable();
        let mut want = want;
        want.sort_unstable();
        assert_eq!(got, want);
        assert!(flood_components(&kept).len() <= 1);
    }
}

#[test]
fn equal_blobs_keep_the_earliest() {
    let m = BinaryMask::from_fn(10, 10, |x, y| ((6..9).contains(&x) && y < 2) || (x < 3 && (5..7).contains(&y))).unwrap();
    let kept = metrics::largest_region(&m);
    assert!(kept.at(6, 0) && !kept.at(0, 5));
    assert!(metrics::largest_region(&BinaryMask::empty(4, 4).unwrap()).is_blank());
}

#[test]
fn aggregate_matches_two_pass_mean() {
    let mut rng = seed::rng(99);
    let pairs: Vec<(String, MaskPairScore)> = (0..100)
        .map(|i| {
            let pred = random_mask(&mut rng, 16, 16, 0.5);
            let gt = random_mask(&mut rng, 16, 16, 0.5);
            (format!("cat{}", i % 3), metrics::score_pair(&pred, &gt).unwrap())
        })
        .collect();
    let report = metrics::aggregate(&pairs).unwrap();
    let mean = |f: &dyn Fn(&MaskPairScore) -> f64, cat: Option<&str>| {
        let sel: Vec<f64> = pairs.iter().filter(|(c, _)| cat.is_none_or(|k| c == k)).map(|(_, s)| f(s)).collect();
        100.0 * sel.iter().sum::<f64>() / sel.len() as f64
    };
    let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(1e-300);
    assert!(rel(report.overall.miou, mean(&|s| s.iou, None)) <= 1e-9);
    assert!(rel(report.overall.f1, mean(&|s| s.f1, None)) <= 1e-9);
    assert_eq!(report.categories.len(), 3);
    for c in &report.categories {
        assert!(rel(c.miou, mean(&|s| s.iou, Some(&c.category))) <= 1e-9);
    }
    let thirds = [
        ("a".to_string(), MaskPairScore::from_counts(1, 1, 1, 0)),
        ("a".to_string(), MaskPairScore::from_counts(2, 1, 0, 0)),
    ];
    let r = metrics::aggregate(&thirds).unwrap();
    assert!((r.overall.miou - 50.0).abs() < 1e-12);
    assert!(metrics::aggregate(&[]).is_err());
}

fn arb_pair() -> impl Strategy<Value = (BinaryMask, BinaryMask)> {
    (1usize..12, 1usize..12).prop_flat_map(|(w, h)| {
        (
            proptest::collection::vec(any::<bool>(), w * h),
            proptest::collection::vec(any::<bool>(), w * h),
        )
            .prop_map(move |(a, b)| (BinaryMask::new(w, h, a).unwrap(), BinaryMask::new(w, h, b).unwrap()))
    })
}

proptest! {
    #[test]
    fn score_invariants((pred, gt) in arb_pair()) {
        let s = metrics::score_pair(&pred, &gt).unwrap();
        let r = metrics::score_pair(&gt, &pred).unwrap();
        prop_assert_eq!(s.tp + s.fp + s.fn_ + s.tn, (pred.width() * pred.height()) as u64);
        prop_assert!(s.f1 >= s.iou);
        prop_assert_eq!(s.iou, r.iou);
        prop_assert_eq!(s.fpr_union, s.fp as f64 / ((s.tp + s.fp + s.fn_) as f64).max(1.0));
        prop_assert_eq!(r.fpr_union, s.fn_ as f64 / ((s.tp + s.fp + s.fn_) as f64).max(1.0));
        for v in [s.iou, s.f1, s.fpr_union] {
            prop_assert!((0.0..=1.0).contains(&v));
        }
    }

    #[test]
    fn false_positive_monotonicity((pred, gt) in arb_pair(), pick in any::<prop::sample::Index>()) {
        let bg: Vec<usize> = (0..gt.data().len()).filter(|&i| !gt.data()[i] && !pred.data()[i]).collect();
        prop_assume!(!bg.is_empty());
        let i = bg[pick.index(bg.len())];
        let mut more = pred.clone();
        more.set(i % pred.width(), i / pred.width(), true);
        let a = metrics::score_pair(&pred, &gt).unwrap();
        let b = metrics::score_pair(&more, &gt).unwrap();
        prop_assert!(b.fpr_union >= a.fpr_union);
        prop_assert!(b.iou <= a.iou);
    }

    #[test]
    fn largest_region_is_one_maximal_component(m in arb_pair().prop_map(|p| p.0)) {
        let kept = metrics::largest_region(&m);
        let comps = flood_components(&m);
        let best = comps.iter().map(Vec::len).max().unwrap_or(0);
        prop_assert_eq!(kept.count(), best);
        prop_assert!(flood_components(&kept).len() <= 1);
        let (labels, sizes) = metrics::connected_components(&m);
        prop_assert_eq!(sizes.len(), comps.len());
        prop_assert_eq!(labels.len(), m.data().len());
    }
}
