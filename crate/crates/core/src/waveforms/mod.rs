//! Unit-power complex-baseband waveform synthesis for the fourteen
//! radiated signal classes.
//!
//! Every generator returns a baseband buffer whose occupied band is centered
//! on 0 Hz with two-sided width `spec.bw`:
//!
//! | class              | rate rule                             |
//! |--------------------|---------------------------------------|
//! | M-PSK, M-QAM       | symbol rate `bw / (1 + rolloff)`      |
//! | CDMA-QPSK          | chip rate `bw / (1 + rolloff)`        |
//! | OFDM-QPSK          | `subcarriers * spacing = bw`          |
//! | Frank, P1..P4      | chip rate `bw / 2`                    |
//! | LFMCW              | sweep bandwidth `bw`                  |

mod cdma;
mod lfmcw;
mod mapping;
mod ofdm;
mod polyphase;
mod shaping;

use std::io::{self, Write};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::scene::{Extras, SceneConfig, SignalClass, SignalSpec};
use crate::{seed, Error, Result, C64};

pub use cdma::{despread, gen_cdma_qpsk, pn_sequence, spread, PN_LENGTH};
pub use lfmcw::gen_lfmcw;
pub use mapping::{map_psk, map_qam};
pub use ofdm::{gen_ofdm_qpsk, OfdmModem};
pub use polyphase::{gen_radar_pulse, polyphase_code, CodeFamily, PhaseCode};
pub use shaping::{rrc_impulse, shape, shaped_burst};

/// Complex baseband samples at a fixed sample rate.
#[derive(Clone, Debug, PartialEq)]
pub struct IqBuffer {
    samples: Vec<C64>,
    fs: f64,
}

impl IqBuffer {
    pub fn new(samples: Vec<C64>, fs: f64) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::arg("I/Q buffer must not be empty"));
        }
        if !(fs.is_finite() && fs > 0.0) {
            return Err(Error::arg(format!("invalid sample rate {fs}")));
        }
        if let Some(i) = samples.iter().position(|s| !(s.re.is_finite() && s.im.is_finite())) {
            return Err(Error::arg(format!("non-finite sample at index {i}")));
        }
        Ok(Self { samples, fs })
    }

    /// All-zero buffer.
    pub fn zeros(len: usize, fs: f64) -> Result<Self> {
        Self::new(vec![C64::new(0.0, 0.0); len], fs)
    }

    pub fn samples(&self) -> &[C64] {
        &self.samples
    }

    pub fn samples_mut(&mut self) -> &mut [C64] {
        &mut self.samples
    }

    pub fn into_samples(self) -> Vec<C64> {
        self.samples
    }

    pub fn fs(&self) -> f64 {
        self.fs
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|s| s.norm_sqr()).sum()
    }

    pub fn mean_power(&self) -> f64 {
        self.energy() / self.samples.len() as f64
    }

    /// Writes interleaved little-endian `f32` I/Q pairs.
    pub fn write_cf32_le<W: Write>(&self, mut w: W) -> io::Result<()> {
        for s in &self.samples {
            w.write_all(&(s.re as f32).to_le_bytes())?;
            w.write_all(&(s.im as f32).to_le_bytes())?;
        }
        Ok(())
    }
}

/// Scales `samples` to unit mean power. All-zero input is left unchanged.
pub(crate) fn normalize_power(samples: &mut [C64]) {
    let p = samples.iter().map(|s| s.norm_sqr()).sum::<f64>() / samples.len().max(1) as f64;
    if p > 0.0 {
        let g = 1.0 / p.sqrt();
        samples.iter_mut().for_each(|s| *s *= g);
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShapingConfig {
    /// Root-raised-cosine rolloff.
    pub rolloff: f64,
    /// Filter span in symbols.
    pub span: usize,
}

impl Default for ShapingConfig {
    fn default() -> Self {
        Self {
            rolloff: 0.25,
            span: 10,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OfdmConfig {
    pub subcarriers: usize,
    /// Cyclic prefix length as a fraction of the useful symbol.
    pub cp_fraction: f64,
}

impl Default for OfdmConfig {
    fn default() -> Self {
        Self {
            subcarriers: 64,
            cp_fraction: 0.125,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CdmaConfig {
    pub spreading_factor: usize,
    /// Lowest symbol rate accepted after spreading, Hz.
    pub min_symbol_rate: f64,
}

impl Default for CdmaConfig {
    fn default() -> Self {
        Self {
            spreading_factor: 8,
            min_symbol_rate: 100e3,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct WaveformConfig {
    pub shaping: ShapingConfig,
    pub ofdm: OfdmConfig,
    pub cdma: CdmaConfig,
}

impl WaveformConfig {
    pub fn validate(&self) -> Result<()> {
        let b = self.shaping.rolloff;
        if !(b > 0.0 && b <= 1.0) {
            return Err(Error::config("waveform.shaping.rolloff", "must lie in (0, 1]"));
        }
        if self.shaping.span < 4 {
            return Err(Error::config("waveform.shaping.span", "must be at least 4 symbols"));
        }
        if self.ofdm.subcarriers < 2 || !self.ofdm.subcarriers.is_multiple_of(2) {
            return Err(Error::config("waveform.ofdm.subcarriers", "must be even and >= 2"));
        }
        if !(0.0..1.0).contains(&self.ofdm.cp_fraction) {
            return Err(Error::config("waveform.ofdm.cp_fraction", "must lie in [0, 1)"));
        }
        if self.cdma.spreading_factor == 0 {
            return Err(Error::config("waveform.cdma.spreading_factor", "must be positive"));
        }
        if self.cdma.min_symbol_rate.is_nan() || self.cdma.min_symbol_rate <= 0.0 {
            return Err(Error::config("waveform.cdma.min_symbol_rate", "must be positive"));
        }
        Ok(())
    }
}

pub(crate) fn random_bits<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<bool> {
    (0..n).map(|_| rng.random::<bool>()).collect()
}

/// Synthesizes the centered baseband of one emission: `spec.len()` samples at
/// unit mean power, payload drawn from `spec.sub_seed`.
pub fn synthesize(spec: &SignalSpec, cfg: &SceneConfig) -> Result<IqBuffer> {
    let fs = cfg.sample_rate;
    let len = spec.len();
    if len == 0 {
        return Err(Error::arg(format!("{} emission has empty duration", spec.class)));
    }
    let wf = &cfg.waveform;
    let mut rng = seed::rng(spec.sub_seed);

    let linear = |order: usize, qam: bool, rng: &mut rand_chacha::ChaCha8Rng| -> Result<IqBuffer> {
        let rate = spec.bw / (1.0 + wf.shaping.rolloff);
        let bits_per_symbol = order.trailing_zeros() as usize;
        let nsym = shaping::burst_symbol_count(len, fs / rate, wf.shaping.span);
        let bits = random_bits(rng, nsym * bits_per_symbol);
        let symbols = if qam {
            map_qam(&bits, order)?
        } else {
            map_psk(&bits, order)?
        };
        shaped_burst(&symbols, rate, &wf.shaping, fs, len)
    };

    match (spec.class, spec.extras) {
        (SignalClass::Qpsk, _) => linear(4, false, &mut rng),
        (SignalClass::Psk8, _) => linear(8, false, &mut rng),
        (SignalClass::Psk16, _) => linear(16, false, &mut rng),
        (SignalClass::Psk32, _) => linear(32, false, &mut rng),
        (SignalClass::Qam16, _) => linear(16, true, &mut rng),
        (SignalClass::Qam32, _) => linear(32, true, &mut rng),
        (SignalClass::CdmaQpsk, _) => gen_cdma_qpsk(spec, wf, fs),
        (SignalClass::OfdmQpsk, _) => gen_ofdm_qpsk(spec, &wf.ofdm, fs),
        (
            class,
            Extras::Polyphase {
                order,
                samples_per_chip,
            },
        ) if class.is_polyphase() => {
            let family = CodeFamily::try_from(class)?;
            let code = polyphase_code(family, order)?;
            let pulse = gen_radar_pulse(&code, fs / samples_per_chip as f64, fs)?;
            if pulse.len() != len {
                return Err(Error::arg(format!(
                    "{class} pulse of {} chips x {samples_per_chip} samples does not fill {len} samples",
                    code.len()
                )));
            }
            Ok(pulse)
        }
        (SignalClass::LfmcwEcho, Extras::Echo { sweep_bw, .. })
        | (SignalClass::LfmcwTransmit, Extras::Sweep { sweep_bw }) => {
            let sweep = gen_lfmcw(sweep_bw, cfg.duration(), fs)?;
            if sweep.len() < len {
                return Err(Error::arg("echo longer than the sweep period"));
            }
            // Visible part of the sweep runs from 0 to spec.bw; shift it down
            // by half that so the band is centered.
            let shift = -spec.bw / 2.0 / fs;
            let samples = sweep.samples()[..len]
                .iter()
                .enumerate()
                .map(|(n, x)| x * C64::cis(std::f64::consts::TAU * (shift * n as f64).fract()))
                .collect();
            IqBuffer::new(samples, fs)
        }
        (class, extras) => Err(Error::UnsupportedClass(format!("{class} with extras {extras:?}"))),
    }
}
