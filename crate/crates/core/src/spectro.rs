//! STFT magnitude spectrograms on a `[0, fs)` frequency axis.
//!
//! Row `r` of a spectrogram is frequency `r * fs / fft_size` (no FFT shift:
//! complex input, band `[0, fs)`), and frame `f` is centered on sample
//! `f * hop + window_length / 2`. Trailing samples that do not fill a whole
//! window are dropped, so `frames = floor((len - L) / hop) + 1`.

use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use ndarray::Array2;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::dataset::BBox;
use crate::waveforms::IqBuffer;
use crate::{Error, Result, C64};

/// Added to every magnitude before taking dB.
pub const DB_FLOOR_EPS: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Window {
    Hann,
    Hamming,
    Rectangular,
}

impl Window {
    /// Periodic (DFT-even) window coefficients.
    pub fn coefficients(self, len: usize) -> Vec<f64> {
        (0..len)
            .map(|n| {
                let c = (TAU * n as f64 / len as f64).cos();
                match self {
                    Window::Hann => 0.5 - 0.5 * c,
                    Window::Hamming => 0.54 - 0.46 * c,
                    Window::Rectangular => 1.0,
                }
            })
            .collect()
    }

    pub fn name(self) -> &'static str {
        match self {
            Window::Hann => "hann",
            Window::Hamming => "hamming",
            Window::Rectangular => "rectangular",
        }
    }
}

impl fmt::Display for Window {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Window {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hann" | "hanning" => Ok(Window::Hann),
            "hamming" => Ok(Window::Hamming),
            "rectangular" | "rect" | "boxcar" => Ok(Window::Rectangular),
            _ => Err(Error::config("stft.window", format!("unknown window {s:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StftConfig {
    pub window: Window,
    pub window_length: usize,
    pub fft_size: usize,
    pub hop: usize,
}

impl Default for StftConfig {
    fn default() -> Self {
        Self {
            window: Window::Hann,
            window_length: 256,
            fft_size: 256,
            hop: 64,
        }
    }
}

impl StftConfig {
    pub fn validate(&self) -> Result<()> {
        if self.hop == 0 || self.hop > self.window_length {
            return Err(Error::config("stft.hop", "need 0 < hop <= window_length"));
        }
        if self.window_length > self.fft_size {
            return Err(Error::config("stft.window_length", "need window_length <= fft_size"));
        }
        Ok(())
    }
}

pub fn frame_count(len: usize, window_length: usize, hop: usize) -> usize {
    if len < window_length || hop == 0 {
        0
    } else {
        (len - window_length) / hop + 1
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Spectrogram {
    /// dB magnitudes, shape `(fft_size, frames)`.
    pub db: Array2<f64>,
    pub fs: f64,
    pub hop: usize,
    pub window_length: usize,
    /// Length of the analyzed buffer.
    pub sample_count: usize,
}

impl Spectrogram {
    pub fn rows(&self) -> usize {
        self.db.nrows()
    }

    pub fn frames(&self) -> usize {
        self.db.ncols()
    }

    pub fn row_frequency(&self, row: usize) -> f64 {
        row as f64 * self.fs / self.rows() as f64
    }

    pub fn frame_center(&self, frame: usize) -> f64 {
        (frame * self.hop) as f64 + self.window_length as f64 / 2.0
    }

    /// Linear power `10^(dB/10)` of one cell.
    pub fn power(&self, row: usize, frame: usize) -> f64 {
        10f64.powf(self.db[[row, frame]] / 10.0)
    }
}

/// `20*log10(|FFT(w * x[f*hop .. f*hop + L])| + 1e-12)` for every frame.
pub fn stft(iq: &IqBuffer, cfg: &StftConfig) -> Result<Spectrogram> {
    cfg.validate()?;
    let x = iq.samples();
    let (l, n) = (cfg.window_length, cfg.fft_size);
    let frames = frame_count(x.len(), l, cfg.hop);
    if frames == 0 {
        return Err(Error::arg(format!(
            "buffer of {} samples is shorter than one {l}-sample window",
            x.len()
        )));
    }
    let window = cfg.window.coefficients(l);
    let fft = FftPlanner::new().plan_fft_forward(n);

    let columns: Vec<Vec<f64>> = (0..frames)
        .into_par_iter()
        .map(|f| {
            let start = f * cfg.hop;
            let mut buf = vec![C64::new(0.0, 0.0); n];
            for (b, (s, w)) in buf.iter_mut().zip(x[start..start + l].iter().zip(&window)) {
                *b = s * w;
            }
            fft.process(&mut buf);
            buf.iter().map(|v| 20.0 * (v.norm() + DB_FLOOR_EPS).log10()).collect()
        })
        .collect();

    let mut db = Array2::zeros((n, frames));
    for (f, col) in columns.iter().enumerate() {
        for (r, v) in col.iter().enumerate() {
            db[[r, f]] = *v;
        }
    }
    Ok(Spectrogram {
        db,
        fs: iq.fs(),
        hop: cfg.hop,
        window_length: l,
        sample_count: x.len(),
    })
}

/// Share of the spectrogram's linear power inside `bbox`.
///
/// A frame belongs to the box when its center sample lies within the box's
/// time span; a row belongs when its frequency lies within the box's band.
pub fn band_energy_fraction(spec: &Spectrogram, bbox: &BBox) -> Result<f64> {
    if !(bbox.w > 0.0 && bbox.h > 0.0 && bbox.x.is_finite() && bbox.y.is_finite()) {
        return Err(Error::arg(format!("degenerate box {bbox:?}")));
    }
    let n = spec.sample_count as f64;
    let (t0, t1) = ((bbox.x - bbox.w / 2.0) * n, (bbox.x + bbox.w / 2.0) * n);
    let (y0, y1) = (bbox.y - bbox.h / 2.0, bbox.y + bbox.h / 2.0);
    let rows = spec.rows();
    let mut inside = 0.0;
    let mut total = 0.0;
    for f in 0..spec.frames() {
        let c = spec.frame_center(f);
        let in_time = c >= t0 && c <= t1;
        for r in 0..rows {
            let p = spec.power(r, f);
            total += p;
            let fr = r as f64 / rows as f64;
            if in_time && fr >= y0 && fr <= y1 {
                inside += p;
            }
        }
    }
    Ok(if total > 0.0 { inside / total } else { 0.0 })
}
