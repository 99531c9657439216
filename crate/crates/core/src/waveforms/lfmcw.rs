use std::f64::consts::PI;

use super::IqBuffer;
use crate::{Error, Result, C64};

/// Linear up-chirp `x[n] = exp(j*pi*(B/T)*(n/fs)^2)` sweeping 0..B over `T`
/// seconds (`round(T*fs)` samples).
pub fn gen_lfmcw(sweep_bw: f64, period: f64, fs: f64) -> Result<IqBuffer> {
    if !(sweep_bw >= 0.0 && sweep_bw < fs) {
        return Err(Error::arg(format!(
            "sweep bandwidth {sweep_bw} Hz must lie in [0, fs = {fs} Hz)"
        )));
    }
    let n = (period * fs).round();
    if n.is_nan() || n < 2.0 {
        return Err(Error::arg(format!("sweep period {period} s is shorter than 2 samples")));
    }
    // Phase in cycles, reduced before the trig call.
    let rate = sweep_bw / (2.0 * period * fs * fs);
    let samples = (0..n as usize)
        .map(|i| {
            let i = i as f64;
            C64::cis(2.0 * PI * (rate * i * i).fract())
        })
        .collect();
    IqBuffer::new(samples, fs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_sweep_is_constant() {
        let x = gen_lfmcw(0.0, 1e-6, 500e6).unwrap();
        assert_eq!(x.len(), 500);
        assert!(x.samples().iter().all(|s| *s == C64::new(1.0, 0.0)));
    }

    #[test]
    fn unit_modulus() {
        let x = gen_lfmcw(250e6, 16384.0 / 500e6, 500e6).unwrap();
        assert!(x.samples().iter().all(|s| (s.norm() - 1.0).abs() < 1e-14));
    }

    #[test]
    fn phase_second_difference_is_constant() {
        let (b, fs) = (100e6, 500e6);
        let t = 16384.0 / fs;
        let x = gen_lfmcw(b, t, fs).unwrap();
        let s = x.samples();
        let step: Vec<f64> = s.windows(2).map(|w| (w[1] * w[0].conj()).arg()).collect();
        let want = 2.0 * PI * b / (t * fs * fs);
        for d in step.windows(2) {
            let dd = d[1] - d[0];
            assert!(((dd - want) / want).abs() < 1e-6, "{dd} vs {want}");
        }
        // Instantaneous frequency reaches B at the end of the sweep.
        let f_end = step.last().unwrap() / (2.0 * PI) * fs;
        assert!((f_end - b).abs() < 0.01 * b);
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(gen_lfmcw(500e6, 1e-6, 500e6).is_err());
        assert!(gen_lfmcw(100e6, 1e-9, 500e6).is_err());
    }
}
