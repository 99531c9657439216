#![allow(dead_code)]

use rfscene_core::scene::{polyphase_order, Extras};
use rfscene_core::{SignalClass, SignalSpec, C64};
use rustfft::FftPlanner;

pub const FS: f64 = 500e6;
pub const N: usize = 16384;

/// A spec of `class` at 250 MHz ending at the last capture sample. Radar
/// pulses are snapped to whole codes, so they may be shorter than `len`.
pub fn spec_for(class: SignalClass, bw: f64, len: usize, sub_seed: u64) -> SignalSpec {
    let (extras, len) = if class.is_polyphase() {
        let spc = (FS / (bw / 2.0)).round() as usize;
        let order = polyphase_order(class, len / spc);
        let chips = Extras::chip_count(class, order);
        (
            Extras::Polyphase {
                order,
                samples_per_chip: spc,
            },
            chips * spc,
        )
    } else if class == SignalClass::LfmcwEcho {
        let extras = Extras::Echo {
            delay: N - len,
            sweep_bw: bw * N as f64 / len as f64,
        };
        (extras, len)
    } else {
        (Extras::None, len)
    };
    SignalSpec {
        class,
        fc: 250e6,
        bw,
        t_start: N - len,
        t_end: N,
        snr_db: 10.0,
        extras,
        sub_seed,
    }
}

/// `|FFT(x)|^2` over the whole buffer.
pub fn periodogram(x: &[C64]) -> Vec<f64> {
    let mut buf = x.to_vec();
    FftPlanner::new().plan_fft_forward(buf.len()).process(&mut buf);
    buf.iter().map(|v| v.norm_sqr()).collect()
}

/// Power of bins whose frequency in `[0, fs)` lies within `[lo, hi]`.
pub fn band_power(psd: &[f64], fs: f64, lo: f64, hi: f64) -> f64 {
    let n = psd.len() as f64;
    psd.iter()
        .enumerate()
        .filter(|(k, _)| {
            let f = *k as f64 * fs / n;
            f >= lo && f <= hi
        })
        .map(|(_, p)| p)
        .sum()
}

/// Fraction of power within `center +- half`, with the band taken modulo `fs`.
pub fn centered_fraction(psd: &[f64], fs: f64, center: f64, half: f64) -> f64 {
    let n = psd.len() as f64;
    let total: f64 = psd.iter().sum();
    let inside: f64 = psd
        .iter()
        .enumerate()
        .filter(|(k, _)| {
            let f = *k as f64 * fs / n;
            let d = (f - center).rem_euclid(fs);
            d <= half || fs - d <= half
        })
        .map(|(_, p)| p)
        .sum();
    inside / total
}

/// Smallest symmetric band around `center` holding `fraction` of the power.
pub fn occupied_bandwidth(psd: &[f64], fs: f64, center: f64, fraction: f64) -> f64 {
    let n = psd.len();
    let df = fs / n as f64;
    let (mut lo, mut hi) = (0.0, fs / 2.0);
    for _ in 0..60 {
        let mid = (lo + hi) / 2.0;
        if centered_fraction(psd, fs, center, mid) >= fraction {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo < df / 4.0 {
            break;
        }
    }
    2.0 * hi
}
