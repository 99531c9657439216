//! Root-raised-cosine pulse shaping at arbitrary (fractional) oversampling.
//!
//! The filter is evaluated analytically at each output instant, so the symbol
//! rate is exact for any `fs / rate`; no integer-oversample-then-resample step
//! is needed.

use std::f64::consts::PI;

use super::{normalize_power, IqBuffer, ShapingConfig};
use crate::{Error, Result, C64};

/// Unit-energy RRC impulse response at `t` symbol periods from its center.
pub fn rrc_impulse(t: f64, rolloff: f64) -> f64 {
    let b = rolloff;
    if t.abs() < 1e-12 {
        return 1.0 - b + 4.0 * b / PI;
    }
    if (t.abs() - 1.0 / (4.0 * b)).abs() < 1e-9 {
        let a = PI / (4.0 * b);
        return b / 2f64.sqrt() * ((1.0 + 2.0 / PI) * a.sin() + (1.0 - 2.0 / PI) * a.cos());
    }
    let num = (PI * t * (1.0 - b)).sin() + 4.0 * b * t * (PI * t * (1.0 + b)).cos();
    let den = PI * t * (1.0 - (4.0 * b * t).powi(2));
    num / den
}

fn check_rate(rate: f64, cfg: &ShapingConfig, fs: f64) -> Result<f64> {
    let limit = fs / (2.0 * (1.0 + cfg.rolloff));
    if !(rate > 0.0 && rate < limit) {
        return Err(Error::arg(format!(
            "symbol rate {rate} Hz not realizable at fs {fs} Hz (must be below {limit} Hz)"
        )));
    }
    Ok(fs / rate)
}

/// `y[n] = sum_k s[k] h((n - offset)/sps - k)`, truncated to `span` symbols.
fn convolve(symbols: &[C64], sps: f64, cfg: &ShapingConfig, offset: f64, len: usize) -> Vec<C64> {
    let half = cfg.span as f64 / 2.0;
    let last = symbols.len() as f64 - 1.0;
    (0..len)
        .map(|n| {
            let u = (n as f64 - offset) / sps;
            let lo = (u - half).ceil().max(0.0);
            let hi = (u + half).floor().min(last);
            if hi < lo {
                return C64::new(0.0, 0.0);
            }
            (lo as usize..=hi as usize)
                .map(|k| symbols[k] * rrc_impulse(u - k as f64, cfg.rolloff))
                .sum()
        })
        .collect()
}

/// Full convolution of a symbol train with the RRC pulse, including the
/// filter ramp-up and ramp-down, normalized to unit mean power.
pub fn shape(symbols: &[C64], rate: f64, cfg: &ShapingConfig, fs: f64) -> Result<IqBuffer> {
    if symbols.is_empty() {
        return Err(Error::arg("no symbols to shape"));
    }
    let sps = check_rate(rate, cfg, fs)?;
    let half = cfg.span as f64 / 2.0;
    let len = (((symbols.len() - 1) as f64 + cfg.span as f64) * sps).round() as usize + 1;
    let mut out = convolve(symbols, sps, cfg, half * sps, len);
    normalize_power(&mut out);
    IqBuffer::new(out, fs)
}

/// Symbols needed by [`shaped_burst`] to fill `len` samples.
pub(crate) fn burst_symbol_count(len: usize, sps: f64, span: usize) -> usize {
    (len as f64 / sps).ceil() as usize + span + 2
}

/// A `len`-sample window of a continuous shaped symbol stream, starting in
/// steady state (the filter is already full of symbols at sample 0).
pub fn shaped_burst(symbols: &[C64], rate: f64, cfg: &ShapingConfig, fs: f64, len: usize) -> Result<IqBuffer> {
    let sps = check_rate(rate, cfg, fs)?;
    let need = burst_symbol_count(len, sps, cfg.span);
    if symbols.len() < need {
        return Err(Error::arg(format!(
            "{} symbols cannot fill {len} samples (need {need})",
            symbols.len()
        )));
    }
    let offset = -(cfg.span as f64 / 2.0 + 1.0) * sps;
    let mut out = convolve(symbols, sps, cfg, offset, len);
    normalize_power(&mut out);
    IqBuffer::new(out, fs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_symbol_gives_impulse_response() {
        let cfg = ShapingConfig::default();
        let fs = 500e6;
        let rate = 25e6; // 20 samples per symbol
        let out = shape(&[C64::new(1.0, 0.0)], rate, &cfg, fs).unwrap();
        assert_eq!(out.len(), 201);
        let h: Vec<f64> = (0..201).map(|n| rrc_impulse((n as f64 - 100.0) / 20.0, 0.25)).collect();
        let p = h.iter().map(|v| v * v).sum::<f64>() / h.len() as f64;
        for (y, h) in out.samples().iter().zip(&h) {
            assert!((y.re - h / p.sqrt()).abs() < 1e-12);
            assert_eq!(y.im, 0.0);
        }
    }

    #[test]
    fn impulse_has_unit_energy_and_nyquist_zeros() {
        // RRC convolved with itself is a raised cosine: zero at nonzero
        // integer symbol lags.
        let b = 0.25;
        let dt = 1e-3;
        let grid: Vec<f64> = (-40_000..=40_000).map(|i| i as f64 * dt).collect();
        let energy: f64 = grid.iter().map(|&t| rrc_impulse(t, b).powi(2)).sum::<f64>() * dt;
        assert!((energy - 1.0).abs() < 1e-3, "{energy}");
        let lag1: f64 = grid
            .iter()
            .map(|&t| rrc_impulse(t, b) * rrc_impulse(t - 1.0, b))
            .sum::<f64>()
            * dt;
        assert!(lag1.abs() < 2e-3, "{lag1}");
    }

    #[test]
    fn singular_point_is_continuous() {
        let b = 0.25;
        let t0 = 1.0 / (4.0 * b);
        let at = rrc_impulse(t0, b);
        assert!((at - rrc_impulse(t0 + 1e-6, b)).abs() < 1e-5);
        assert!((at - rrc_impulse(t0 - 1e-6, b)).abs() < 1e-5);
    }

    #[test]
    fn rejects_unrealizable_rate() {
        let cfg = ShapingConfig::default();
        let sym = [C64::new(1.0, 0.0); 4];
        assert!(shape(&sym, 250e6, &cfg, 500e6).is_err());
        assert!(shape(&sym, 0.0, &cfg, 500e6).is_err());
        assert!(shaped_burst(&sym, 20e6, &cfg, 500e6, 4096).is_err());
    }
}
