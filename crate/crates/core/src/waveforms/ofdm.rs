//! CP-OFDM with QPSK subcarriers.
//!
//! The useful symbol length is `Nu = round(fs * subcarriers / bw)` samples, so
//! the spacing `fs / Nu` matches `bw / subcarriers` to within half a sample.
//! Subcarrier `m` sits at `(m - subcarriers/2 + 1/2) * spacing`, which centers
//! the occupied band on 0 Hz. The half-bin offset is a common phase ramp
//! applied across the whole symbol (prefix included), so orthogonality over
//! the useful part is unaffected.

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::{Fft, FftPlanner};

use super::{map_psk, normalize_power, random_bits, IqBuffer, OfdmConfig};
use crate::scene::{SignalClass, SignalSpec};
use crate::{seed, Error, Result, C64};

/// Useful symbols longer than this are rejected as unresolvably fine spacing.
const MAX_FFT_LEN: usize = 1 << 20;

pub struct OfdmModem {
    subcarriers: usize,
    fft_len: usize,
    cp_len: usize,
    ifft: Arc<dyn Fft<f64>>,
    fft: Arc<dyn Fft<f64>>,
}

impl OfdmModem {
    pub fn new(cfg: &OfdmConfig, bw: f64, fs: f64) -> Result<Self> {
        if !(bw > 0.0 && bw <= fs) {
            return Err(Error::arg(format!(
                "OFDM bandwidth {bw} Hz must lie in (0, fs = {fs} Hz]"
            )));
        }
        let fft_len = (fs * cfg.subcarriers as f64 / bw).round() as usize;
        if fft_len < cfg.subcarriers || fft_len > MAX_FFT_LEN {
            return Err(Error::arg(format!(
                "subcarrier spacing {} Hz is not resolvable at fs {fs} Hz",
                bw / cfg.subcarriers as f64
            )));
        }
        let cp_len = (fft_len as f64 * cfg.cp_fraction).round() as usize;
        let mut planner = FftPlanner::new();
        Ok(Self {
            subcarriers: cfg.subcarriers,
            fft_len,
            cp_len,
            ifft: planner.plan_fft_inverse(fft_len),
            fft: planner.plan_fft_forward(fft_len),
        })
    }

    pub fn fft_len(&self) -> usize {
        self.fft_len
    }

    pub fn cp_len(&self) -> usize {
        self.cp_len
    }

    pub fn symbol_len(&self) -> usize {
        self.fft_len + self.cp_len
    }

    /// Actual subcarrier spacing in Hz.
    pub fn spacing(&self, fs: f64) -> f64 {
        fs / self.fft_len as f64
    }

    fn bin(&self, m: usize) -> usize {
        let k = m as isize - (self.subcarriers / 2) as isize;
        k.rem_euclid(self.fft_len as isize) as usize
    }

    /// Modulates `symbols` (a multiple of the subcarrier count) into
    /// consecutive CP-OFDM symbols.
    pub fn modulate(&self, symbols: &[C64]) -> Vec<C64> {
        let n = self.fft_len;
        let mut out = Vec::with_capacity(symbols.len() / self.subcarriers * self.symbol_len());
        let mut buf = vec![C64::new(0.0, 0.0); n];
        for block in symbols.chunks_exact(self.subcarriers) {
            buf.iter_mut().for_each(|v| *v = C64::new(0.0, 0.0));
            for (m, &s) in block.iter().enumerate() {
                buf[self.bin(m)] = s;
            }
            self.ifft.process(&mut buf);
            for t in -(self.cp_len as isize)..n as isize {
                let u = buf[t.rem_euclid(n as isize) as usize];
                out.push(u * C64::cis(PI * t as f64 / n as f64) / n as f64);
            }
        }
        out
    }

    /// Inverse of [`OfdmModem::modulate`] for a symbol-aligned noiseless stream.
    pub fn demodulate(&self, samples: &[C64]) -> Vec<C64> {
        let n = self.fft_len;
        let mut out = Vec::new();
        let mut buf = vec![C64::new(0.0, 0.0); n];
        for sym in samples.chunks_exact(self.symbol_len()) {
            for (t, v) in buf.iter_mut().enumerate() {
                *v = sym[self.cp_len + t] * C64::cis(-PI * t as f64 / n as f64);
            }
            self.fft.process(&mut buf);
            out.extend((0..self.subcarriers).map(|m| buf[self.bin(m)]));
        }
        out
    }
}

/// OFDM-QPSK burst of `spec.len()` samples occupying `spec.bw`.
pub fn gen_ofdm_qpsk(spec: &SignalSpec, cfg: &OfdmConfig, fs: f64) -> Result<IqBuffer> {
    if spec.class != SignalClass::OfdmQpsk {
        return Err(Error::arg(format!("expected OFDM-QPSK spec, got {}", spec.class)));
    }
    let modem = OfdmModem::new(cfg, spec.bw, fs)?;
    let len = spec.len();
    let nsym = len.div_ceil(modem.symbol_len());
    let mut rng = seed::rng(spec.sub_seed);
    let symbols = map_psk(&random_bits(&mut rng, 2 * nsym * cfg.subcarriers), 4)?;
    let mut out = modem.modulate(&symbols);
    out.truncate(len);
    normalize_power(&mut out);
    IqBuffer::new(out, fs)
}
