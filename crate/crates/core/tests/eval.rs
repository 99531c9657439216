use std::fs;

use proptest::prelude::*;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rfscene_core::dataset::BBox;
use rfscene_core::eval::{
    coco_thresholds, confusion_matrix, evaluate, iou, load_image_evals, Detection, EvalConfig, ImageEval,
};
use rfscene_core::{seed, Error};

// Independent reference: corner-form IoU, and AP by re-matching every
// ranked prefix from scratch and enumerating the PR points.

fn corners(b: &BBox) -> [f64; 4] {
    [b.x - b.w / 2.0, b.y - b.h / 2.0, b.x + b.w / 2.0, b.y + b.h / 2.0]
}

fn ref_iou(a: &BBox, b: &BBox) -> f64 {
    let (p, q) = (corners(a), corners(b));
    let w = p[2].min(q[2]) - p[0].max(q[0]);
    let h = p[3].min(q[3]) - p[1].max(q[1]);
    if w <= 0.0 || h <= 0.0 {
        return 0.0;
    }
    let i = w * h;
    i / ((p[2] - p[0]) * (p[3] - p[1]) + (q[2] - q[0]) * (q[3] - q[1]) - i)
}

fn ranked(images: &[ImageEval], class: usize) -> Vec<(usize, Detection)> {
    let mut out: Vec<(usize, Detection)> = Vec::new();
    for (i, im) in images.iter().enumerate() {
        for d in im.detections.iter().filter(|d| d.bbox.class_id == class) {
            // Insert after every prediction with confidence >= this one.
            let pos = out.iter().take_while(|(_, o)| o.confidence >= d.confidence).count();
            out.insert(pos, (i, *d));
        }
    }
    out
}

fn true_positives(images: &[ImageEval], prefix: &[(usize, Detection)], class: usize, thr: f64) -> usize {
    let mut used: Vec<Vec<bool>> = images.iter().map(|im| vec![false; im.ground_truth.len()]).collect();
    let mut tp = 0;
    for (img, d) in prefix {
        let mut best: Option<usize> = None;
        let mut best_iou = -1.0;
        for (j, g) in images[*img].ground_truth.iter().enumerate() {
            if g.class_id != class || used[*img][j] {
                continue;
            }
            let v = ref_iou(&d.bbox, g);
            if v >= thr && v > best_iou {
                best = Some(j);
                best_iou = v;
            }
        }
        if let Some(j) = best {
            used[*img][j] = true;
            tp += 1;
        }
    }
    tp
}

fn ref_ap(images: &[ImageEval], class: usize, thr: f64) -> Option<f64> {
    let ngt = images
        .iter()
        .flat_map(|im| &im.ground_truth)
        .filter(|g| g.class_id == class)
        .count();
    if ngt == 0 {
        return None;
    }
    let preds = ranked(images, class);
    let points: Vec<(f64, f64)> = (1..=preds.len())
        .map(|k| {
            let tp = true_positives(images, &preds[..k], class, thr) as f64;
            (tp / ngt as f64, tp / k as f64)
        })
        .collect();
    let sum: f64 = (0..=100)
        .map(|i| {
            let r = i as f64 / 100.0;
            points.iter().filter(|p| p.0 >= r).map(|p| p.1).fold(0.0, f64::max)
        })
        .sum();
    Some(sum / 101.0)
}

fn names(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("c{i}")).collect()
}

fn random_box<R: Rng>(rng: &mut R, class: usize) -> BBox {
    let w = rng.random_range(0.05..0.4);
    let h = rng.random_range(0.05..0.4);
    BBox::new(
        class,
        rng.random_range(w / 2.0..1.0 - w / 2.0),
        rng.random_range(h / 2.0..1.0 - h / 2.0),
        w,
        h,
    )
}

fn random_instance(rng: &mut ChaCha8Rng) -> (Vec<ImageEval>, usize) {
    let classes = rng.random_range(1..=3);
    let images = (0..rng.random_range(1..=3))
        .map(|i| {
            let gts: Vec<BBox> = (0..rng.random_range(0..=5))
                .map(|_| {
                    let c = rng.random_range(0..classes);
                    random_box(rng, c)
                })
                .collect();
            let dets = (0..rng.random_range(0..=8))
                .map(|_| {
                    let conf = rng.random_range(1..=10) as f64 / 10.0;
                    let bbox = if !gts.is_empty() && rng.random_bool(0.7) {
                        let g = gts[rng.random_range(0..gts.len())];
                        let j = rng.random_range(0.0..0.06);
                        let class = if rng.random_bool(0.85) {
                            g.class_id
                        } else {
                            rng.random_range(0..classes)
                        };
                        BBox::new(class, g.x + j, g.y - j / 2.0, g.w * (1.0 + j), g.h)
                    } else {
                        let c = rng.random_range(0..classes);
                        random_box(rng, c)
                    };
                    Detection::new(bbox, conf)
                })
                .collect();
            ImageEval {
                name: format!("img{i}"),
                ground_truth: gts,
                detections: dets,
            }
        })
        .collect();
    (images, classes)
}

#[test]
fn matches_brute_force_on_random_instances() {
    let mut rng = seed::rng(31337);
    let mut scored = 0;
    for _ in 0..1000 {
        let (images, classes) = random_instance(&mut rng);
        let report = evaluate(&images, &names(classes), &EvalConfig::default()).unwrap();
        let mut per_threshold_means = Vec::new();
        for (ti, &thr) in coco_thresholds().iter().enumerate() {
            let aps: Vec<f64> = (0..classes).filter_map(|c| ref_ap(&images, c, thr)).collect();
            for c in 0..classes {
                match (report.classes[c].ap[ti], ref_ap(&images, c, thr)) {
                    (Some(a), Some(b)) => assert!((a - b).abs() <= 1e-9, "class {c} thr {thr}: {a} vs {b}"),
                    (None, None) => {}
                    other => panic!("presence differs: {other:?}"),
                }
            }
            if !aps.is_empty() {
                per_threshold_means.push(aps.iter().sum::<f64>() / aps.len() as f64);
            }
        }
        match report.map50 {
            Some(m) => {
                scored += 1;
                assert!((m - per_threshold_means[0]).abs() <= 1e-9);
                let m95 = per_threshold_means.iter().sum::<f64>() / per_threshold_means.len() as f64;
                assert!((report.map50_95.unwrap() - m95).abs() <= 1e-9);
                assert!(report.map50_95.unwrap() <= per_threshold_means.iter().cloned().fold(0.0, f64::max) + 1e-12);
            }
            None => assert!(per_threshold_means.is_empty()),
        }
    }
    assert!(scored > 800);
}

#[test]
fn jittered_truth_matches_reference() {
    let mut rng = seed::rng(5);
    let images: Vec<ImageEval> = (0..20)
        .map(|i| {
            let gts: Vec<BBox> = (0..4).map(|k| random_box(&mut rng, k % 3)).collect();
            let dets = gts
                .iter()
                .map(|g| {
                    let dx = if rng.random_bool(0.5) { 0.01 } else { -0.01 };
                    Detection::new(BBox { x: g.x + dx, ..*g }, 0.9)
                })
                .collect();
            ImageEval {
                name: format!("{i}"),
                ground_truth: gts,
                detections: dets,
            }
        })
        .collect();
    let r = evaluate(&images, &names(3), &EvalConfig::default()).unwrap();
    let mut means = Vec::new();
    for thr in coco_thresholds() {
        let aps: Vec<f64> = (0..3).filter_map(|c| ref_ap(&images, c, thr)).collect();
        means.push(aps.iter().sum::<f64>() / aps.len() as f64);
    }
    assert!((r.map50.unwrap() - means[0]).abs() <= 1e-9);
    assert!((r.map50_95.unwrap() - means.iter().sum::<f64>() / 10.0).abs() <= 1e-9);
    assert_eq!(r.map50, Some(1.0));
    assert!(r.map50_95.unwrap() < 1.0);
}

#[test]
fn iou_agrees_with_pixel_grid() {
    let a = BBox::new(0, 0.5, 0.5, 0.2, 0.2);
    let b = BBox::new(0, 0.6, 0.5, 0.2, 0.2);
    let n = 1000;
    let inside = |bx: &BBox, px: f64, py: f64| (px - bx.x).abs() < bx.w / 2.0 && (py - bx.y).abs() < bx.h / 2.0;
    let (mut inter, mut union) = (0u64, 0u64);
    for i in 0..n {
        for j in 0..n {
            let (px, py) = ((i as f64 + 0.5) / n as f64, (j as f64 + 0.5) / n as f64);
            let (ia, ib) = (inside(&a, px, py), inside(&b, px, py));
            inter += (ia && ib) as u64;
            union += (ia || ib) as u64;
        }
    }
    let grid = inter as f64 / union as f64;
    assert!((iou(&a, &b) - grid).abs() < 1e-3);
    assert!((iou(&a, &b) - 1.0 / 3.0).abs() < 1e-12);
}

#[test]
fn counts_are_conserved() {
    let mut rng = seed::rng(77);
    for _ in 0..200 {
        let (images, classes) = random_instance(&mut rng);
        let r = evaluate(&images, &names(classes), &EvalConfig::default()).unwrap();
        for c in &r.classes {
            assert_eq!(c.tp + c.fn_, c.gt_count);
            assert_eq!(c.tp + c.fp, c.pred_count);
        }
        for col in 0..=classes {
            let s: f64 = r.confusion.normalized().iter().map(|row| row[col]).sum();
            assert!(s == 0.0 || (s - 1.0).abs() < 1e-12);
        }
    }
}

#[test]
fn confusion_extremes() {
    let gts = vec![BBox::new(0, 0.2, 0.2, 0.1, 0.1), BBox::new(1, 0.7, 0.7, 0.2, 0.1)];
    let perfect = ImageEval {
        name: "a".into(),
        detections: gts.iter().map(|g| Detection::new(*g, 1.0)).collect(),
        ground_truth: gts.clone(),
    };
    let cm = confusion_matrix(&[perfect], &names(2), 0.45, 0.25);
    assert_eq!(cm.counts, vec![vec![1, 0, 0], vec![0, 1, 0], vec![0, 0, 0]]);
    let empty = ImageEval {
        name: "a".into(),
        detections: vec![],
        ground_truth: gts,
    };
    let cm = confusion_matrix(&[empty], &names(2), 0.45, 0.25);
    assert_eq!(cm.normalized()[2], vec![1.0, 1.0, 0.0]);
}

#[test]
fn directories_pair_by_stem() {
    let tmp = tempfile::tempdir().unwrap();
    let (labels, preds) = (tmp.path().join("labels"), tmp.path().join("preds"));
    fs::create_dir_all(&labels).unwrap();
    fs::create_dir_all(&preds).unwrap();
    fs::write(labels.join("a.txt"), "0 0.500000 0.500000 0.200000 0.200000\n").unwrap();
    fs::write(labels.join("b.txt"), "1 0.300000 0.300000 0.100000 0.100000\n").unwrap();
    fs::write(preds.join("a.txt"), "0 0.900000 0.500000 0.500000 0.200000 0.200000\n").unwrap();
    let images = load_image_evals(&labels, &preds).unwrap();
    assert_eq!(images.len(), 2);
    assert!(images[1].detections.is_empty());
    let r = evaluate(&images, &names(2), &EvalConfig::default()).unwrap();
    assert_eq!(r.classes[0].ap50, Some(1.0));
    assert_eq!(r.classes[1].ap50, Some(0.0));
    assert_eq!(r.map50, Some(0.5));

    fs::write(preds.join("b.txt"), "1 0.9 0.3 0.3 0.1\n").unwrap();
    match load_image_evals(&labels, &preds) {
        Err(Error::Parse { path, line, .. }) => {
            assert!(path.ends_with("b.txt"));
            assert_eq!(line, 1);
        }
        other => panic!("unexpected {other:?}"),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn confidence_scaling_keeps_every_ap(s in any::<u64>(), factor in 0.01..1.0f64) {
        let (images, classes) = random_instance(&mut seed::rng(s));
        let scaled: Vec<ImageEval> = images
            .iter()
            .map(|im| ImageEval {
                detections: im.detections.iter().map(|d| Detection::new(d.bbox, d.confidence * factor)).collect(),
                ..im.clone()
            })
            .collect();
        let a = evaluate(&images, &names(classes), &EvalConfig::default()).unwrap();
        let b = evaluate(&scaled, &names(classes), &EvalConfig::default()).unwrap();
        for (x, y) in a.classes.iter().zip(&b.classes) {
            prop_assert_eq!(&x.ap, &y.ap);
        }
    }

    #[test]
    fn iou_is_symmetric_and_bounded(s in any::<u64>()) {
        let mut rng = seed::rng(s);
        let (a, b) = (random_box(&mut rng, 0), random_box(&mut rng, 0));
        let v = iou(&a, &b);
        prop_assert_eq!(v, iou(&b, &a));
        prop_assert!((0.0..=1.0).contains(&v));
        prop_assert!((v - ref_iou(&a, &b)).abs() < 1e-12);
    }
}
