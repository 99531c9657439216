use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::Args;
use image::{Rgb, RgbImage};
use rfscene_core::dataset::{Colormap, DatasetManifest};
use rfscene_core::eval::{evaluate, load_image_evals, ConfusionMatrix, EvalConfig, ImageEval};
use rfscene_core::Scenario;

use crate::{io_err, say, CliError, CliResult};

/// Pixel size of one confusion-matrix cell.
const CELL: u32 = 32;

#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    /// Directory of ground-truth `.txt` label files.
    #[arg(long)]
    pub labels: PathBuf,
    /// Directory of prediction files (`class confidence x y w h` per line).
    #[arg(long)]
    pub predictions: PathBuf,
    /// Take class names from this dataset manifest.
    #[arg(long, conflicts_with = "scenario")]
    pub manifest: Option<PathBuf>,
    /// Take class names from this scenario.
    #[arg(long)]
    pub scenario: Option<Scenario>,
    /// Where to write the JSON report.
    #[arg(long, default_value = "eval_report.json")]
    pub report: PathBuf,
    /// Also render the normalized confusion matrix to this PNG.
    #[arg(long)]
    pub confusion_png: Option<PathBuf>,
    /// Confusion matrix: IoU needed to pair a prediction with a ground-truth box.
    #[arg(long, default_value_t = 0.45)]
    pub confusion_iou: f64,
    /// Confusion matrix: predictions below this confidence are ignored.
    #[arg(long, default_value_t = 0.25)]
    pub confusion_conf: f64,
}

fn class_names(args: &EvalArgs, images: &[ImageEval]) -> CliResult<Vec<String>> {
    if let Some(m) = &args.manifest {
        return Ok(DatasetManifest::read(m)?.names);
    }
    if let Some(s) = args.scenario {
        return Ok(s.class_names());
    }
    let ids = images
        .iter()
        .flat_map(|im| im.ground_truth.iter().map(|b| b.class_id))
        .chain(
            images
                .iter()
                .flat_map(|im| im.detections.iter().map(|d| d.bbox.class_id)),
        );
    let n = ids.max().map_or(0, |m| m + 1);
    Ok((0..n).map(|i| format!("class{i}")).collect())
}

fn fmt_metric(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_owned(), |v| format!("{v:.4}"))
}

pub fn cmd_eval(args: &EvalArgs, out: &mut dyn Write) -> CliResult<()> {
    for (name, v) in [
        ("--confusion-iou", args.confusion_iou),
        ("--confusion-conf", args.confusion_conf),
    ] {
        if !(0.0..=1.0).contains(&v) {
            return Err(CliError::Usage(format!("{name} must lie within [0, 1]")));
        }
    }
    for dir in [&args.labels, &args.predictions] {
        if !dir.is_dir() {
            return Err(io_err(
                dir,
                std::io::Error::new(std::io::ErrorKind::NotFound, "not a directory"),
            ));
        }
    }
    let images = load_image_evals(&args.labels, &args.predictions)?;
    let names = class_names(args, &images)?;
    let cfg = EvalConfig {
        confusion_iou: args.confusion_iou,
        confusion_confidence: args.confusion_conf,
    };
    let report = evaluate(&images, &names, &cfg)?;

    let json = serde_json::to_string_pretty(&report).expect("report serializes") + "\n";
    fs::write(&args.report, json).map_err(|e| io_err(&args.report, e))?;
    if let Some(png) = &args.confusion_png {
        confusion_image(&report.confusion)
            .save_with_format(png, image::ImageFormat::Png)
            .map_err(|e| CliError::Core(e.into()))?;
    }
    say(out, format!("mAP50 {}", fmt_metric(report.map50)))?;
    say(out, format!("mAP50-95 {}", fmt_metric(report.map50_95)))
}

/// Column-normalized matrix as a heat map: one square cell per entry,
/// predicted class down, true class across, background last.
pub fn confusion_image(cm: &ConfusionMatrix) -> RgbImage {
    let norm = cm.normalized();
    let n = norm.len() as u32;
    let mut img = RgbImage::new(n * CELL, n * CELL);
    for (r, row) in norm.iter().enumerate() {
        for (c, &v) in row.iter().enumerate() {
            let color = Rgb(Colormap::Viridis.rgb(v));
            for dy in 0..CELL {
                for dx in 0..CELL {
                    let edge = dx == 0 || dy == 0;
                    let px = if edge { Rgb([255, 255, 255]) } else { color };
                    img.put_pixel(c as u32 * CELL + dx, r as u32 * CELL + dy, px);
                }
            }
        }
    }
    img
}
