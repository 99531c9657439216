//! Direct-sequence spread QPSK.
//!
//! Chips come from a 127-chip maximal-length sequence generated by a 7-stage
//! Fibonacci register with feedback polynomial `x^7 + x + 1`; the register is
//! seeded with `(sub_seed mod 127) + 1`. Symbol `k` is multiplied by chips
//! `k*SF .. (k+1)*SF` of the periodically repeated sequence.

use super::{map_psk, random_bits, shaped_burst, IqBuffer, WaveformConfig};
use crate::scene::{SignalClass, SignalSpec};
use crate::{seed, Error, Result, C64};

pub const PN_LENGTH: usize = 127;

/// One period of the m-sequence as +-1 chips.
pub fn pn_sequence(seed: u64) -> Vec<f64> {
    let mut state = (seed % PN_LENGTH as u64) as u8 + 1;
    (0..PN_LENGTH)
        .map(|_| {
            let out = state & 1;
            let fb = (state ^ (state >> 1)) & 1;
            state = (state >> 1) | (fb << 6);
            if out == 1 {
                -1.0
            } else {
                1.0
            }
        })
        .collect()
}

pub fn spread(symbols: &[C64], pn: &[f64], sf: usize) -> Vec<C64> {
    symbols
        .iter()
        .enumerate()
        .flat_map(|(k, &s)| (0..sf).map(move |i| s * pn[(k * sf + i) % pn.len()]))
        .collect()
}

pub fn despread(chips: &[C64], pn: &[f64], sf: usize) -> Vec<C64> {
    chips
        .chunks_exact(sf)
        .enumerate()
        .map(|(k, c)| {
            c.iter()
                .enumerate()
                .map(|(i, &x)| x * pn[(k * sf + i) % pn.len()])
                .sum::<C64>()
                / sf as f64
        })
        .collect()
}

/// CDMA-QPSK burst with chip rate `bw / (1 + rolloff)`.
pub fn gen_cdma_qpsk(spec: &SignalSpec, cfg: &WaveformConfig, fs: f64) -> Result<IqBuffer> {
    if spec.class != SignalClass::CdmaQpsk {
        return Err(Error::arg(format!("expected CDMA-QPSK spec, got {}", spec.class)));
    }
    let sf = cfg.cdma.spreading_factor;
    let chip_rate = spec.bw / (1.0 + cfg.shaping.rolloff);
    let symbol_rate = chip_rate / sf as f64;
    if symbol_rate < cfg.cdma.min_symbol_rate {
        return Err(Error::arg(format!(
            "bandwidth {} Hz gives symbol rate {symbol_rate} Hz below {} Hz at SF {sf}",
            spec.bw, cfg.cdma.min_symbol_rate
        )));
    }
    let len = spec.len();
    let nchips = super::shaping::burst_symbol_count(len, fs / chip_rate, cfg.shaping.span);
    let nsym = nchips.div_ceil(sf);
    let mut rng = seed::rng(spec.sub_seed);
    let symbols = map_psk(&random_bits(&mut rng, 2 * nsym), 4)?;
    let pn = pn_sequence(spec.sub_seed);
    let chips = spread(&symbols, &pn, sf);
    shaped_burst(&chips, chip_rate, &cfg.shaping, fs, len)
}
