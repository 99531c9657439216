//! Labels, spectrogram images and on-disk datasets.
//!
//! Labels use normalized center XYWH boxes. With `N` capture samples and
//! sample rate `fs`:
//!
//! ```text
//! x = (t_start + t_end) / (2N)    y = fc / fs
//! w = (t_end - t_start) / N       h = bw / fs
//! ```
//!
//! `y` is measured from the top image edge, where row 0 is 0 Hz.

mod render;
mod writer;

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::scene::{Scene, SignalSpec};
use crate::{Error, Result};

pub use render::{draw_boxes, outline_pixels, render_image, render_scene, Colormap, RenderConfig};
pub use writer::{
    split_assignment, split_counts, write_dataset, DatasetManifest, DatasetOptions, SceneSidecar, Split,
    SplitFractions, SplitInfo, FORMAT_VERSION,
};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BBox {
    pub class_id: usize,
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl BBox {
    pub fn new(class_id: usize, x: f64, y: f64, w: f64, h: f64) -> Self {
        Self { class_id, x, y, w, h }
    }

    pub fn left(&self) -> f64 {
        self.x - self.w / 2.0
    }

    pub fn right(&self) -> f64 {
        self.x + self.w / 2.0
    }

    pub fn top(&self) -> f64 {
        self.y - self.h / 2.0
    }

    pub fn bottom(&self) -> f64 {
        self.y + self.h / 2.0
    }

    pub fn area(&self) -> f64 {
        self.w * self.h
    }

    pub fn is_valid(&self) -> bool {
        let finite = [self.x, self.y, self.w, self.h].iter().all(|v| v.is_finite());
        finite
            && (0.0..=1.0).contains(&self.x)
            && (0.0..=1.0).contains(&self.y)
            && self.w > 0.0
            && self.w <= 1.0
            && self.h > 0.0
            && self.h <= 1.0
    }

    /// Box with its edges clipped to the unit square.
    pub fn clamped(&self) -> Self {
        let (l, r) = (self.left().max(0.0), self.right().min(1.0));
        let (t, b) = (self.top().max(0.0), self.bottom().min(1.0));
        Self {
            class_id: self.class_id,
            x: (l + r) / 2.0,
            y: (t + b) / 2.0,
            w: (r - l).max(0.0),
            h: (b - t).max(0.0),
        }
    }

    /// `<class_id> <x> <y> <w> <h>` with six fraction digits.
    pub fn to_label_line(&self) -> String {
        format!(
            "{} {:.6} {:.6} {:.6} {:.6}",
            self.class_id, self.x, self.y, self.w, self.h
        )
    }
}

pub fn bbox_from_spec(spec: &SignalSpec, class_id: usize, total_samples: usize, fs: f64) -> BBox {
    let n = total_samples as f64;
    BBox {
        class_id,
        x: (spec.t_start + spec.t_end) as f64 / (2.0 * n),
        y: spec.fc / fs,
        w: (spec.t_end - spec.t_start) as f64 / n,
        h: spec.bw / fs,
    }
}

/// Ground-truth boxes of every labeled emission, in emission order.
pub fn scene_labels(scene: &Scene) -> Vec<BBox> {
    let cfg = &scene.config;
    scene
        .labeled()
        .map(|(id, s)| bbox_from_spec(s, id, cfg.total_samples, cfg.sample_rate).clamped())
        .collect()
}

pub fn format_labels(boxes: &[BBox]) -> String {
    boxes.iter().map(|b| b.to_label_line() + "\n").collect()
}

pub(crate) fn parse_fields<const N: usize>(line: &str) -> std::result::Result<[&str; N], String> {
    let fields: Vec<&str> = line.split_whitespace().collect();
    fields
        .try_into()
        .map_err(|f: Vec<&str>| format!("expected {N} fields, found {}", f.len()))
}

pub(crate) fn parse_f64(s: &str, what: &str) -> std::result::Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(format!("invalid {what} {s:?}")),
    }
}

pub(crate) fn parse_class(s: &str) -> std::result::Result<usize, String> {
    s.parse::<usize>().map_err(|_| format!("invalid class id {s:?}"))
}

/// Parses a label file body; `path` is only used in error messages.
pub fn parse_labels(text: &str, path: &Path) -> Result<Vec<BBox>> {
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
        let [c, x, y, w, h] = parse_fields::<5>(line).map_err(err)?;
        let b = BBox {
            class_id: parse_class(c).map_err(err)?,
            x: parse_f64(x, "x").map_err(err)?,
            y: parse_f64(y, "y").map_err(err)?,
            w: parse_f64(w, "w").map_err(err)?,
            h: parse_f64(h, "h").map_err(err)?,
        };
        if !b.is_valid() {
            return Err(err(format!("box {x} {y} {w} {h} is not a valid normalized box")));
        }
        out.push(b);
    }
    Ok(out)
}

pub fn read_labels(path: &Path) -> Result<Vec<BBox>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_labels(&text, path)
}
