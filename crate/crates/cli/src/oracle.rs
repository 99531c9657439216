use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, ValueEnum};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use rfscene_core::dataset::{read_labels, BBox};
use rfscene_core::eval::{format_predictions, Detection};
use rfscene_core::seed;

use crate::{io_err, say, CliError, CliResult};

/// Narrowest box side an oracle prediction may shrink to.
const MIN_SIDE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ConfModel {
    /// Every prediction gets `--confidence`.
    Fixed,
    /// Confidence drawn uniformly from `[--confidence-min, 1]`.
    Uniform,
}

#[derive(Debug, Clone, Args)]
pub struct OraclePredArgs {
    /// Directory of ground-truth `.txt` label files.
    #[arg(long)]
    pub labels: PathBuf,
    /// Output directory for prediction files.
    #[arg(long)]
    pub out: PathBuf,
    /// Standard deviation of the Gaussian jitter added to x, y, w and h.
    #[arg(long, default_value_t = 0.0)]
    pub jitter: f64,
    /// Probability of dropping each box.
    #[arg(long, default_value_t = 0.0)]
    pub drop: f64,
    /// How confidences are assigned.
    #[arg(long, value_enum, default_value_t = ConfModel::Fixed)]
    pub conf_model: ConfModel,
    /// Confidence used by the fixed model.
    #[arg(long, default_value_t = 1.0)]
    pub confidence: f64,
    /// Lowest confidence drawn by the uniform model.
    #[arg(long, default_value_t = 0.05)]
    pub confidence_min: f64,
    /// Seed for jitter, drops and confidences.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl OraclePredArgs {
    fn validate(&self) -> CliResult<()> {
        let unit = |v: f64| v.is_finite() && (0.0..=1.0).contains(&v);
        if !(self.jitter.is_finite() && self.jitter >= 0.0) {
            return Err(CliError::Usage("--jitter must be finite and non-negative".into()));
        }
        if !unit(self.drop) {
            return Err(CliError::Usage("--drop must lie within [0, 1]".into()));
        }
        if !unit(self.confidence) || !unit(self.confidence_min) {
            return Err(CliError::Usage("confidences must lie within [0, 1]".into()));
        }
        Ok(())
    }
}

fn perturb<R: Rng>(b: &BBox, jitter: &Normal<f64>, rng: &mut R) -> BBox {
    let mut j = || jitter.sample(rng);
    let (x, y, w, h) = (
        b.x + j(),
        b.y + j(),
        (b.w + j()).max(MIN_SIDE),
        (b.h + j()).max(MIN_SIDE),
    );
    let c = BBox::new(b.class_id, x, y, w, h).clamped();
    if c.w > 0.0 && c.h > 0.0 {
        c
    } else {
        // Jittered entirely off the image: keep a sliver on the nearest edge.
        let x = x.clamp(MIN_SIDE / 2.0, 1.0 - MIN_SIDE / 2.0);
        let y = y.clamp(MIN_SIDE / 2.0, 1.0 - MIN_SIDE / 2.0);
        BBox::new(b.class_id, x, y, MIN_SIDE, MIN_SIDE)
    }
}

/// One prediction file per label file, same stem. Label files are visited in
/// name order and each gets its own random stream, so output depends only on
/// the arguments.
pub fn cmd_oracle_pred(args: &OraclePredArgs, out: &mut dyn Write) -> CliResult<()> {
    args.validate()?;
    let jitter = Normal::new(0.0, args.jitter).map_err(|e| CliError::Usage(format!("--jitter: {e}")))?;
    let mut files: Vec<PathBuf> = fs::read_dir(&args.labels)
        .map_err(|e| io_err(&args.labels, e))?
        .map(|e| e.map(|e| e.path()).map_err(|err| io_err(&args.labels, err)))
        .collect::<CliResult<_>>()?;
    files.retain(|p| p.extension().is_some_and(|e| e == "txt"));
    files.sort();
    if files.is_empty() {
        return Err(io_err(
            &args.labels,
            std::io::Error::new(std::io::ErrorKind::NotFound, "no label files"),
        ));
    }
    fs::create_dir_all(&args.out).map_err(|e| io_err(&args.out, e))?;

    let mut written = 0usize;
    for (i, path) in files.iter().enumerate() {
        let mut rng = seed::rng(seed::mix(args.seed, i as u64, 0));
        let dets: Vec<Detection> = read_labels(path)?
            .iter()
            .filter_map(|b| {
                let dropped = rng.random::<f64>() < args.drop;
                let bbox = if args.jitter > 0.0 {
                    perturb(b, &jitter, &mut rng)
                } else {
                    *b
                };
                let confidence = match args.conf_model {
                    ConfModel::Fixed => args.confidence,
                    ConfModel::Uniform => rng.random_range(args.confidence_min..=1.0),
                };
                (!dropped).then_some(Detection::new(bbox, confidence))
            })
            .collect();
        written += dets.len();
        let dst = args.out.join(path.file_name().expect("listed files have names"));
        fs::write(&dst, format_predictions(&dets)).map_err(|e| io_err(&dst, e))?;
    }
    say(
        out,
        format!(
            "wrote {written} predictions for {} images to {}",
            files.len(),
            args.out.display()
        ),
    )
}
