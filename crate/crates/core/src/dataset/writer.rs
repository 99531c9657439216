use std::fmt;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use image::codecs::png::PngEncoder;
use image::ImageEncoder;
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{format_labels, render_scene, RenderConfig};
use crate::channel::scene_noise_seed;
use crate::scene::{validate_scene, Scenario, Scene, SceneConfig, SignalSpec};
use crate::spectro::StftConfig;
use crate::{seed, Error, Result};

pub const FORMAT_VERSION: u32 = 1;

const MANIFEST: &str = "manifest.json";
const TREES: [&str; 3] = ["images", "labels", "truth"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Val, Split::Test];

    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitFractions {
    pub train: f64,
    pub val: f64,
    pub test: f64,
}

impl Default for SplitFractions {
    fn default() -> Self {
        Self {
            train: 0.7,
            val: 0.2,
            test: 0.1,
        }
    }
}

impl SplitFractions {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("split.train", self.train),
            ("split.val", self.val),
            ("split.test", self.test),
        ] {
            if !(v.is_finite() && (0.0..=1.0).contains(&v)) {
                return Err(Error::config(name, format!("fraction {v} outside [0, 1]")));
            }
        }
        let sum = self.train + self.val + self.test;
        if (sum - 1.0).abs() > 1e-6 {
            return Err(Error::config("split", format!("fractions sum to {sum}, not 1")));
        }
        Ok(())
    }
}

/// `[train, val, test]` counts: val and test are floored, train takes the rest.
pub fn split_counts(n: usize, fractions: &SplitFractions) -> [usize; 3] {
    let part = |f: f64| ((n as f64 * f + 1e-9).floor() as usize).min(n);
    let val = part(fractions.val);
    let test = part(fractions.test).min(n - val);
    [n - val - test, val, test]
}

/// Split of each of `n` scenes, by position. Without a shuffle seed the splits
/// are contiguous blocks in train, val, test order.
pub fn split_assignment(n: usize, fractions: &SplitFractions, shuffle_seed: Option<u64>) -> Vec<Split> {
    let [train, val, _] = split_counts(n, fractions);
    let mut out: Vec<Split> = (0..n)
        .map(|i| match i {
            i if i < train => Split::Train,
            i if i < train + val => Split::Val,
            _ => Split::Test,
        })
        .collect();
    if let Some(s) = shuffle_seed {
        out.shuffle(&mut seed::rng(s));
    }
    out
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DatasetOptions {
    pub split: SplitFractions,
    pub stft: StftConfig,
    pub render: RenderConfig,
    /// Worker threads; 0 uses one per core.
    pub workers: usize,
    /// Replace an existing dataset in the output directory.
    pub force: bool,
    pub shuffle_seed: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitInfo {
    pub images: String,
    pub labels: String,
    pub truth: String,
    pub count: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub format_version: u32,
    pub scenario: Scenario,
    /// Class names by class id.
    pub names: Vec<String>,
    pub scene_count: usize,
    pub master_seed: u64,
    pub sample_rate: f64,
    pub stft: StftConfig,
    pub image_width: u32,
    pub image_height: u32,
    pub dynamic_range_db: f64,
    pub colormap: String,
    pub split_fractions: SplitFractions,
    pub shuffle_seed: Option<u64>,
    pub train: SplitInfo,
    pub val: SplitInfo,
    pub test: SplitInfo,
    pub scene_config: SceneConfig,
}

impl DatasetManifest {
    pub fn split(&self, split: Split) -> &SplitInfo {
        match split {
            Split::Train => &self.train,
            Split::Val => &self.val,
            Split::Test => &self.test,
        }
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })
    }
}

/// Everything needed to rebuild one scene's capture.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneSidecar {
    pub format_version: u32,
    pub scenario: Scenario,
    pub master_seed: u64,
    pub scene_index: u64,
    pub noise_seed: u64,
    pub config: SceneConfig,
    pub signals: Vec<SignalSpec>,
}

impl SceneSidecar {
    pub fn from_scene(scene: &Scene) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            scenario: scene.config.scenario,
            master_seed: scene.master_seed,
            scene_index: scene.scene_index,
            noise_seed: scene_noise_seed(scene),
            config: scene.config.clone(),
            signals: scene.signals.clone(),
        }
    }

    pub fn to_scene(&self) -> Scene {
        Scene {
            config: self.config.clone(),
            scene_index: self.scene_index,
            master_seed: self.master_seed,
            signals: self.signals.clone(),
        }
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })
    }
}

fn stem(scene: &Scene) -> String {
    format!("scene_{:06}", scene.scene_index)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn write_png(path: &Path, img: &image::RgbImage) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    PngEncoder::new(&mut w).write_image(img.as_raw(), img.width(), img.height(), image::ExtendedColorType::Rgb8)?;
    w.flush().map_err(|e| Error::io(path, e))
}

fn prepare_output(out: &Path, force: bool) -> Result<()> {
    if out.exists() {
        let mut entries = fs::read_dir(out).map_err(|e| Error::io(out, e))?;
        if entries.next().is_some() {
            if !force {
                return Err(Error::OutputExists(out.to_path_buf()));
            }
            for t in TREES {
                let p = out.join(t);
                if p.exists() {
                    fs::remove_dir_all(&p).map_err(|e| Error::io(&p, e))?;
                }
            }
            let m = out.join(MANIFEST);
            if m.exists() {
                fs::remove_file(&m).map_err(|e| Error::io(&m, e))?;
            }
        }
    }
    for t in TREES {
        for s in Split::ALL {
            let p = out.join(t).join(s.name());
            fs::create_dir_all(&p).map_err(|e| Error::io(&p, e))?;
        }
    }
    Ok(())
}

fn check_scenes(scenes: &[Scene]) -> Result<&Scene> {
    let first = scenes.first().ok_or_else(|| Error::arg("no scenes to write"))?;
    first.config.validate()?;
    let mut seen = std::collections::HashSet::new();
    for s in scenes {
        if s.config != first.config || s.master_seed != first.master_seed {
            return Err(Error::arg(format!(
                "scene {} does not share the configuration and master seed of scene {}",
                s.scene_index, first.scene_index
            )));
        }
        if !seen.insert(s.scene_index) {
            return Err(Error::arg(format!("duplicate scene index {}", s.scene_index)));
        }
        if let Some(v) = validate_scene(s).first() {
            return Err(Error::arg(format!("scene {}: {v}", s.scene_index)));
        }
    }
    Ok(first)
}

/// Renders and writes `scenes` under `out`:
///
/// ```text
/// manifest.json
/// images/{train,val,test}/scene_NNNNNN.png
/// labels/{train,val,test}/scene_NNNNNN.txt
/// truth/{train,val,test}/scene_NNNNNN.json
/// ```
///
/// Output bytes do not depend on the worker count.
pub fn write_dataset(scenes: &[Scene], out: &Path, opts: &DatasetOptions) -> Result<DatasetManifest> {
    opts.split.validate()?;
    opts.stft.validate()?;
    opts.render.validate()?;
    let first = check_scenes(scenes)?;

    let assignment = split_assignment(scenes.len(), &opts.split, opts.shuffle_seed);
    let [n_train, n_val, n_test] = split_counts(scenes.len(), &opts.split);
    let info = |s: Split, count: usize| SplitInfo {
        images: format!("images/{s}"),
        labels: format!("labels/{s}"),
        truth: format!("truth/{s}"),
        count,
    };
    let cfg = &first.config;
    let manifest = DatasetManifest {
        format_version: FORMAT_VERSION,
        scenario: cfg.scenario,
        names: cfg.scenario.class_names(),
        scene_count: scenes.len(),
        master_seed: first.master_seed,
        sample_rate: cfg.sample_rate,
        stft: opts.stft,
        image_width: opts.render.width,
        image_height: opts.render.height,
        dynamic_range_db: opts.render.dynamic_range_db,
        colormap: opts.render.colormap.to_string(),
        split_fractions: opts.split,
        shuffle_seed: opts.shuffle_seed,
        train: info(Split::Train, n_train),
        val: info(Split::Val, n_val),
        test: info(Split::Test, n_test),
        scene_config: cfg.clone(),
    };

    prepare_output(out, opts.force)?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.workers)
        .build()
        .map_err(|e| Error::arg(format!("cannot start worker pool: {e}")))?;
    pool.install(|| {
        scenes
            .par_iter()
            .zip(assignment.par_iter())
            .try_for_each(|(scene, split)| write_scene(scene, *split, out, opts))
    })?;

    write_json(&out.join(MANIFEST), &manifest)?;
    log::info!("wrote {} scenes to {}", scenes.len(), out.display());
    Ok(manifest)
}

fn write_scene(scene: &Scene, split: Split, out: &Path, opts: &DatasetOptions) -> Result<()> {
    let (img, boxes) = render_scene(scene, &opts.stft, &opts.render)?;
    let name = stem(scene);
    let path = |tree: &str, ext: &str| -> PathBuf { out.join(tree).join(split.name()).join(format!("{name}.{ext}")) };
    write_png(&path("images", "png"), &img)?;
    let labels = path("labels", "txt");
    fs::write(&labels, format_labels(&boxes)).map_err(|e| Error::io(&labels, e))?;
    write_json(&path("truth", "json"), &SceneSidecar::from_scene(scene))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_split_of_4000() {
        assert_eq!(split_counts(4000, &SplitFractions::default()), [2800, 800, 400]);
        assert_eq!(split_counts(100, &SplitFractions::default()), [70, 20, 10]);
        assert_eq!(split_counts(0, &SplitFractions::default()), [0, 0, 0]);
        assert_eq!(split_counts(7, &SplitFractions::default()), [6, 1, 0]);
    }

    #[test]
    fn fraction_validation() {
        let bad = SplitFractions {
            train: 0.5,
            val: 0.2,
            test: 0.1,
        };
        assert!(bad.validate().is_err());
        let neg = SplitFractions {
            train: 1.1,
            val: -0.1,
            test: 0.0,
        };
        assert!(neg.validate().is_err());
    }

    #[test]
    fn shuffled_assignment_keeps_counts() {
        let f = SplitFractions::default();
        let plain = split_assignment(100, &f, None);
        let shuffled = split_assignment(100, &f, Some(42));
        assert_ne!(plain, shuffled);
        assert_eq!(shuffled, split_assignment(100, &f, Some(42)));
        for s in Split::ALL {
            let a = plain.iter().filter(|&&x| x == s).count();
            let b = shuffled.iter().filter(|&&x| x == s).count();
            assert_eq!(a, b);
        }
        assert!(plain[..70].iter().all(|&s| s == Split::Train));
        assert!(plain[90..].iter().all(|&s| s == Split::Test));
    }
}
