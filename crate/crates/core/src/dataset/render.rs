use std::fmt;
use std::str::FromStr;

use image::imageops::{self, FilterType};
use image::{Rgb, RgbImage};
use serde::{Deserialize, Serialize};

use super::{scene_labels, BBox};
use crate::channel::{compose_scene, scene_noise_seed};
use crate::scene::Scene;
use crate::spectro::{stft, Spectrogram, StftConfig};
use crate::{Error, Result};

const VIRIDIS: [[u8; 3]; 11] = [
    [0x44, 0x01, 0x54],
    [0x48, 0x24, 0x75],
    [0x41, 0x44, 0x87],
    [0x35, 0x5f, 0x8d],
    [0x2a, 0x78, 0x8e],
    [0x21, 0x91, 0x8c],
    [0x22, 0xa8, 0x84],
    [0x44, 0xbf, 0x70],
    [0x7a, 0xd1, 0x51],
    [0xbd, 0xdf, 0x26],
    [0xfd, 0xe7, 0x25],
];

/// Outline colors, indexed by class id modulo the palette size.
const PALETTE: [[u8; 3]; 8] = [
    [0xff, 0x30, 0x30],
    [0xff, 0xff, 0xff],
    [0x00, 0xff, 0xff],
    [0xff, 0x00, 0xff],
    [0xff, 0x99, 0x00],
    [0x00, 0x66, 0xff],
    [0x99, 0xff, 0x99],
    [0x00, 0x00, 0x00],
];

const OUTLINE_THICKNESS: u32 = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Colormap {
    Viridis,
    Gray,
}

impl Colormap {
    /// RGB for `v` in `[0, 1]`; values outside are clamped.
    pub fn rgb(self, v: f64) -> [u8; 3] {
        let v = if v.is_nan() { 0.0 } else { v.clamp(0.0, 1.0) };
        match self {
            Colormap::Gray => {
                let g = (v * 255.0).round() as u8;
                [g, g, g]
            }
            Colormap::Viridis => {
                let pos = v * (VIRIDIS.len() - 1) as f64;
                let i = (pos.floor() as usize).min(VIRIDIS.len() - 2);
                let t = pos - i as f64;
                let (a, b) = (VIRIDIS[i], VIRIDIS[i + 1]);
                std::array::from_fn(|k| (a[k] as f64 + t * (b[k] as f64 - a[k] as f64)).round() as u8)
            }
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Colormap::Viridis => "viridis",
            Colormap::Gray => "gray",
        }
    }
}

impl fmt::Display for Colormap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Colormap {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "viridis" => Ok(Colormap::Viridis),
            "gray" | "grey" => Ok(Colormap::Gray),
            _ => Err(Error::config("colormap", format!("unknown colormap {s:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RenderConfig {
    pub width: u32,
    pub height: u32,
    pub dynamic_range_db: f64,
    pub colormap: Colormap,
}

impl Default for RenderConfig {
    fn default() -> Self {
        Self {
            width: 640,
            height: 640,
            dynamic_range_db: 60.0,
            colormap: Colormap::Viridis,
        }
    }
}

impl RenderConfig {
    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::config("image_size", "width and height must be positive"));
        }
        if !(self.dynamic_range_db.is_finite() && self.dynamic_range_db > 0.0) {
            return Err(Error::config("dynamic_range_db", "must be finite and positive"));
        }
        Ok(())
    }
}

/// Clips to the top `dynamic_range_db`, min-max normalizes, colormaps and
/// resizes. Row 0 (0 Hz) is the top image row; time runs left to right.
pub fn render_image(spec: &Spectrogram, cfg: &RenderConfig) -> Result<RgbImage> {
    cfg.validate()?;
    let (rows, frames) = (spec.rows(), spec.frames());
    if rows == 0 || frames == 0 {
        return Err(Error::arg("empty spectrogram"));
    }
    let hi = spec.db.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let floor = hi - cfg.dynamic_range_db;
    let lo = spec.db.iter().map(|&v| v.max(floor)).fold(f64::INFINITY, f64::min);
    let span = hi - lo;

    let mut raster = RgbImage::new(frames as u32, rows as u32);
    for ((r, f), &v) in spec.db.indexed_iter() {
        let t = if span > 0.0 { (v.max(floor) - lo) / span } else { 0.5 };
        raster.put_pixel(f as u32, r as u32, Rgb(cfg.colormap.rgb(t)));
    }
    if raster.dimensions() == (cfg.width, cfg.height) {
        return Ok(raster);
    }
    Ok(imageops::resize(&raster, cfg.width, cfg.height, FilterType::Triangle))
}

/// Pixels covered by the outline of `bbox` on a `width x height` image.
/// Sorted, without duplicates.
pub fn outline_pixels(bbox: &BBox, width: u32, height: u32) -> Vec<(u32, u32)> {
    if width == 0 || height == 0 {
        return Vec::new();
    }
    let to_px = |v: f64, size: u32| -> u32 { (v * size as f64).floor().clamp(0.0, (size - 1) as f64) as u32 };
    let (x0, x1) = (to_px(bbox.left(), width), to_px(bbox.right(), width));
    let (y0, y1) = (to_px(bbox.top(), height), to_px(bbox.bottom(), height));
    let t = OUTLINE_THICKNESS - 1;
    let mut out = Vec::new();
    for y in y0..=y1 {
        for x in x0..=x1 {
            let edge = x <= x0 + t || x + t >= x1 || y <= y0 + t || y + t >= y1;
            if edge {
                out.push((x, y));
            }
        }
    }
    out
}

/// Draws the outline of every box in its class color.
pub fn draw_boxes(img: &mut RgbImage, boxes: &[BBox]) {
    let (w, h) = img.dimensions();
    for b in boxes {
        let color = Rgb(PALETTE[b.class_id % PALETTE.len()]);
        for (x, y) in outline_pixels(b, w, h) {
            img.put_pixel(x, y, color);
        }
    }
}

/// Composes a scene with its pipeline noise seed and renders it.
/// Returns the image and the scene's label boxes.
pub fn render_scene(scene: &Scene, stft_cfg: &StftConfig, cfg: &RenderConfig) -> Result<(RgbImage, Vec<BBox>)> {
    let capture = compose_scene(scene, scene_noise_seed(scene))?;
    let spec = stft(&capture.aggregate, stft_cfg)?;
    Ok((render_image(&spec, cfg)?, scene_labels(scene)))
}
