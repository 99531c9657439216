//! Detection metrics: IoU, 101-point AP, mAP and a confusion matrix.
//!
//! Predictions are matched per class in descending confidence order (stable,
//! so equal confidences keep input order). Each prediction takes the unmatched
//! ground-truth box of its image with the highest IoU at or above the
//! threshold, lowest index on ties. AP samples the precision envelope at
//! recall `0.00, 0.01, ..., 1.00`. Classes without ground truth are left out
//! of every mean.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dataset::{parse_class, parse_f64, parse_fields, read_labels, BBox};
use crate::{Error, Result};

/// `0.50, 0.55, ..., 0.95`.
pub fn coco_thresholds() -> Vec<f64> {
    (0..10).map(|i| 0.5 + 0.05 * i as f64).collect()
}

/// Intersection over union of two center-format boxes; 0 when disjoint or
/// when the union is empty.
pub fn iou(a: &BBox, b: &BBox) -> f64 {
    let iw = (a.right().min(b.right()) - a.left().max(b.left())).max(0.0);
    let ih = (a.bottom().min(b.bottom()) - a.top().max(b.top())).max(0.0);
    let inter = iw * ih;
    let union = a.area() + b.area() - inter;
    if union > 0.0 {
        inter / union
    } else {
        0.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub bbox: BBox,
    pub confidence: f64,
}

impl Detection {
    pub fn new(bbox: BBox, confidence: f64) -> Self {
        Self { bbox, confidence }
    }

    /// `<class_id> <confidence> <x> <y> <w> <h>`, six fraction digits.
    pub fn to_line(&self) -> String {
        let b = &self.bbox;
        format!(
            "{} {:.6} {:.6} {:.6} {:.6} {:.6}",
            b.class_id, self.confidence, b.x, b.y, b.w, b.h
        )
    }
}

pub fn format_predictions(dets: &[Detection]) -> String {
    dets.iter().map(|d| d.to_line() + "\n").collect()
}

/// Parses a prediction file body; confidences must lie in `[0, 1]`.
pub fn parse_predictions(text: &str, path: &Path) -> Result<Vec<Detection>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let err = |reason: String| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            reason,
        };
        let [c, conf, x, y, w, h] = parse_fields::<6>(line).map_err(err)?;
        let confidence = parse_f64(conf, "confidence").map_err(err)?;
        if !(0.0..=1.0).contains(&confidence) {
            return Err(err(format!("confidence {confidence} outside [0, 1]")));
        }
        let bbox = BBox {
            class_id: parse_class(c).map_err(err)?,
            x: parse_f64(x, "x").map_err(err)?,
            y: parse_f64(y, "y").map_err(err)?,
            w: parse_f64(w, "w").map_err(err)?,
            h: parse_f64(h, "h").map_err(err)?,
        };
        if !bbox.is_valid() {
            return Err(err(format!("box {x} {y} {w} {h} is not a valid normalized box")));
        }
        out.push(Detection { bbox, confidence });
    }
    Ok(out)
}

pub fn read_predictions(path: &Path) -> Result<Vec<Detection>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_predictions(&text, path)
}

/// Ground truth and predictions of one image.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ImageEval {
    pub name: String,
    pub ground_truth: Vec<BBox>,
    pub detections: Vec<Detection>,
}

/// Per-prediction outcome of the greedy matcher for one class.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassMatches {
    /// `(confidence, true_positive)` in ranked order.
    pub ranked: Vec<(f64, bool)>,
    pub gt_count: usize,
}

pub fn match_class(images: &[ImageEval], class_id: usize, iou_threshold: f64) -> ClassMatches {
    let mut preds: Vec<(usize, &Detection)> = images
        .iter()
        .enumerate()
        .flat_map(|(i, im)| im.detections.iter().map(move |d| (i, d)))
        .filter(|(_, d)| d.bbox.class_id == class_id)
        .collect();
    preds.sort_by(|a, b| b.1.confidence.total_cmp(&a.1.confidence));

    let gts: Vec<Vec<&BBox>> = images
        .iter()
        .map(|im| im.ground_truth.iter().filter(|g| g.class_id == class_id).collect())
        .collect();
    let mut taken: Vec<Vec<bool>> = gts.iter().map(|g| vec![false; g.len()]).collect();

    let ranked = preds
        .iter()
        .map(|&(img, det)| {
            let mut best: Option<(usize, f64)> = None;
            for (j, g) in gts[img].iter().enumerate() {
                if taken[img][j] {
                    continue;
                }
                let v = iou(&det.bbox, g);
                if v >= iou_threshold && best.is_none_or(|(_, b)| v > b) {
                    best = Some((j, v));
                }
            }
            if let Some((j, _)) = best {
                taken[img][j] = true;
            }
            (det.confidence, best.is_some())
        })
        .collect();
    ClassMatches {
        ranked,
        gt_count: gts.iter().map(Vec::len).sum(),
    }
}

/// 101-point interpolated AP from ranked outcomes; `None` without ground truth.
pub fn average_precision(m: &ClassMatches) -> Option<f64> {
    if m.gt_count == 0 {
        return None;
    }
    let ngt = m.gt_count as f64;
    let mut tp = 0usize;
    let mut curve = Vec::with_capacity(m.ranked.len());
    for (k, &(_, hit)) in m.ranked.iter().enumerate() {
        tp += hit as usize;
        curve.push((tp as f64 / ngt, tp as f64 / (k + 1) as f64));
    }
    // Suffix maximum turns precision into its monotone envelope.
    for i in (0..curve.len().saturating_sub(1)).rev() {
        curve[i].1 = curve[i].1.max(curve[i + 1].1);
    }
    let mut sum = 0.0;
    let mut i = 0;
    for r in 0..=100 {
        let level = r as f64 / 100.0;
        while i < curve.len() && curve[i].0 < level {
            i += 1;
        }
        if i < curve.len() {
            sum += curve[i].1;
        }
    }
    Some(sum / 101.0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassReport {
    pub class_id: usize,
    pub name: String,
    pub gt_count: usize,
    pub pred_count: usize,
    /// Match counts at IoU 0.50.
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    /// AP at each of [`coco_thresholds`].
    pub ap: Vec<Option<f64>>,
    pub ap50: Option<f64>,
    pub ap50_95: Option<f64>,
}

/// Rows are predicted classes, columns true classes; index `classes` is
/// background (missed ground truth in the last row, spurious predictions in
/// the last column).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub names: Vec<String>,
    pub counts: Vec<Vec<u64>>,
    pub iou_threshold: f64,
    pub confidence_threshold: f64,
}

impl ConfusionMatrix {
    /// Each column divided by its sum; empty columns stay zero.
    pub fn normalized(&self) -> Vec<Vec<f64>> {
        let n = self.counts.len();
        let col: Vec<u64> = (0..n).map(|c| self.counts.iter().map(|r| r[c]).sum()).collect();
        self.counts
            .iter()
            .map(|row| {
                row.iter()
                    .zip(&col)
                    .map(|(&v, &s)| if s > 0 { v as f64 / s as f64 } else { 0.0 })
                    .collect()
            })
            .collect()
    }
}

/// Class-agnostic matching: pairs above `iou_threshold` are taken in
/// descending IoU order, each box used once.
pub fn confusion_matrix(
    images: &[ImageEval],
    names: &[String],
    iou_threshold: f64,
    confidence_threshold: f64,
) -> ConfusionMatrix {
    let c = names.len();
    let mut counts = vec![vec![0u64; c + 1]; c + 1];
    let bin = |id: usize| id.min(c);
    for im in images {
        let dets: Vec<&Detection> = im
            .detections
            .iter()
            .filter(|d| d.confidence >= confidence_threshold)
            .collect();
        let mut pairs = Vec::new();
        for (g, gt) in im.ground_truth.iter().enumerate() {
            for (d, det) in dets.iter().enumerate() {
                let v = iou(gt, &det.bbox);
                if v >= iou_threshold {
                    pairs.push((v, d, g));
                }
            }
        }
        pairs.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
        let mut det_used = vec![false; dets.len()];
        let mut gt_used = vec![false; im.ground_truth.len()];
        for (_, d, g) in pairs {
            if det_used[d] || gt_used[g] {
                continue;
            }
            det_used[d] = true;
            gt_used[g] = true;
            counts[bin(dets[d].bbox.class_id)][bin(im.ground_truth[g].class_id)] += 1;
        }
        for (g, gt) in im.ground_truth.iter().enumerate() {
            if !gt_used[g] {
                counts[c][bin(gt.class_id)] += 1;
            }
        }
        for (d, det) in dets.iter().enumerate() {
            if !det_used[d] {
                counts[bin(det.bbox.class_id)][c] += 1;
            }
        }
    }
    ConfusionMatrix {
        names: names.to_vec(),
        counts,
        iou_threshold,
        confidence_threshold,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub confusion_iou: f64,
    pub confusion_confidence: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            confusion_iou: 0.45,
            confusion_confidence: 0.25,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub iou_thresholds: Vec<f64>,
    /// `None` when no class has ground truth.
    pub map50: Option<f64>,
    pub map50_95: Option<f64>,
    pub image_count: usize,
    pub gt_count: usize,
    pub pred_count: usize,
    pub classes: Vec<ClassReport>,
    pub confusion: ConfusionMatrix,
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// Scores `images` over the classes named in `names` (class id = index).
pub fn evaluate(images: &[ImageEval], names: &[String], cfg: &EvalConfig) -> Result<EvalReport> {
    for im in images {
        let ids = im
            .ground_truth
            .iter()
            .map(|b| b.class_id)
            .chain(im.detections.iter().map(|d| d.bbox.class_id));
        for id in ids {
            if id >= names.len() {
                return Err(Error::Data(format!(
                    "{}: class id {id} out of range for {} classes",
                    im.name,
                    names.len()
                )));
            }
        }
    }
    let thresholds = coco_thresholds();
    let classes: Vec<ClassReport> = names
        .iter()
        .enumerate()
        .map(|(id, name)| {
            let matches: Vec<ClassMatches> = thresholds.iter().map(|&t| match_class(images, id, t)).collect();
            let aps: Vec<Option<f64>> = matches.iter().map(average_precision).collect();
            let m50 = &matches[0];
            let tp = m50.ranked.iter().filter(|r| r.1).count();
            ClassReport {
                class_id: id,
                name: name.clone(),
                gt_count: m50.gt_count,
                pred_count: m50.ranked.len(),
                tp,
                fp: m50.ranked.len() - tp,
                fn_: m50.gt_count - tp,
                ap50: aps[0],
                ap50_95: aps[0].and_then(|_| mean(aps.iter().flatten().copied())),
                ap: aps,
            }
        })
        .collect();
    Ok(EvalReport {
        iou_thresholds: thresholds,
        map50: mean(classes.iter().filter_map(|c| c.ap50)),
        map50_95: mean(classes.iter().filter_map(|c| c.ap50_95)),
        image_count: images.len(),
        gt_count: images.iter().map(|im| im.ground_truth.len()).sum(),
        pred_count: images.iter().map(|im| im.detections.len()).sum(),
        classes,
        confusion: confusion_matrix(images, names, cfg.confusion_iou, cfg.confusion_confidence),
    })
}

fn txt_files(dir: &Path) -> Result<BTreeMap<String, PathBuf>> {
    let mut out = BTreeMap::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.extension().is_some_and(|e| e == "txt") {
            if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
                out.insert(stem.to_owned(), path);
            }
        }
    }
    Ok(out)
}

/// Pairs `<stem>.txt` label and prediction files. A label file without
/// predictions counts as an image with no detections; a prediction file
/// without labels as an image with no ground truth.
pub fn load_image_evals(labels_dir: &Path, preds_dir: &Path) -> Result<Vec<ImageEval>> {
    let labels = txt_files(labels_dir)?;
    let preds = txt_files(preds_dir)?;
    let mut stems: Vec<&String> = labels.keys().chain(preds.keys()).collect();
    stems.sort();
    stems.dedup();
    stems
        .into_iter()
        .map(|stem| {
            if !labels.contains_key(stem) {
                log::warn!("predictions for {stem} have no label file");
            }
            Ok(ImageEval {
                name: stem.clone(),
                ground_truth: labels
                    .get(stem)
                    .map(|p| read_labels(p))
                    .transpose()?
                    .unwrap_or_default(),
                detections: preds
                    .get(stem)
                    .map(|p| read_predictions(p))
                    .transpose()?
                    .unwrap_or_default(),
            })
        })
        .collect()
}
