//! Scenario configuration and seeded scene sampling.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::NoiseModel;
use crate::seed;
use crate::waveforms::WaveformConfig;
use crate::{Error, Result};

/// Number of redraws before a degenerate radar pulse is dropped.
const MAX_REDRAWS: usize = 8;
/// Attempts to place an echo delay away from the delays already drawn.
const MAX_DELAY_ATTEMPTS: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    /// Congested digital communication signals.
    Comms,
    /// Polyphase-coded pulse radar.
    PulseRadar,
    /// Multi-target LFMCW echoes.
    Lfmcw,
}

impl Scenario {
    pub const ALL: [Scenario; 3] = [Scenario::Comms, Scenario::PulseRadar, Scenario::Lfmcw];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::Comms => "comms",
            Scenario::PulseRadar => "pulse-radar",
            Scenario::Lfmcw => "lfmcw",
        }
    }

    /// Labeled classes of the scenario, in class-id order.
    pub fn classes(self) -> &'static [SignalClass] {
        use SignalClass::*;
        match self {
            Scenario::Comms => &[Qpsk, Psk8, Psk16, Psk32, Qam16, Qam32, CdmaQpsk, OfdmQpsk],
            Scenario::PulseRadar => &[Frank, P1, P2, P3, P4],
            Scenario::Lfmcw => &[LfmcwEcho],
        }
    }

    pub fn class_names(self) -> Vec<String> {
        self.classes().iter().map(|c| c.name().to_string()).collect()
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "comms" | "a" => Ok(Scenario::Comms),
            "pulse-radar" | "radar" | "b" => Ok(Scenario::PulseRadar),
            "lfmcw" | "c" => Ok(Scenario::Lfmcw),
            _ => Err(Error::config(
                "scenario",
                format!("unknown scenario {s:?} (expected comms, pulse-radar or lfmcw)"),
            )),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SignalClass {
    #[serde(rename = "QPSK")]
    Qpsk,
    #[serde(rename = "8PSK")]
    Psk8,
    #[serde(rename = "16PSK")]
    Psk16,
    #[serde(rename = "32PSK")]
    Psk32,
    #[serde(rename = "16QAM")]
    Qam16,
    #[serde(rename = "32QAM")]
    Qam32,
    #[serde(rename = "CDMA-QPSK")]
    CdmaQpsk,
    #[serde(rename = "OFDM-QPSK")]
    OfdmQpsk,
    Frank,
    P1,
    P2,
    P3,
    P4,
    #[serde(rename = "LFMCW-echo")]
    LfmcwEcho,
    /// Reference sweep of the LFMCW transmitter. Kept in the scene for
    /// provenance; it is neither radiated into the capture nor labeled.
    #[serde(rename = "LFMCW-transmit")]
    LfmcwTransmit,
}

impl SignalClass {
    /// The fourteen radiated classes.
    pub const RADIATED: [SignalClass; 14] = [
        SignalClass::Qpsk,
        SignalClass::Psk8,
        SignalClass::Psk16,
        SignalClass::Psk32,
        SignalClass::Qam16,
        SignalClass::Qam32,
        SignalClass::CdmaQpsk,
        SignalClass::OfdmQpsk,
        SignalClass::Frank,
        SignalClass::P1,
        SignalClass::P2,
        SignalClass::P3,
        SignalClass::P4,
        SignalClass::LfmcwEcho,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SignalClass::Qpsk => "QPSK",
            SignalClass::Psk8 => "8PSK",
            SignalClass::Psk16 => "16PSK",
            SignalClass::Psk32 => "32PSK",
            SignalClass::Qam16 => "16QAM",
            SignalClass::Qam32 => "32QAM",
            SignalClass::CdmaQpsk => "CDMA-QPSK",
            SignalClass::OfdmQpsk => "OFDM-QPSK",
            SignalClass::Frank => "Frank",
            SignalClass::P1 => "P1",
            SignalClass::P2 => "P2",
            SignalClass::P3 => "P3",
            SignalClass::P4 => "P4",
            SignalClass::LfmcwEcho => "LFMCW-echo",
            SignalClass::LfmcwTransmit => "LFMCW-transmit",
        }
    }

    /// Dense zero-based label id within `scenario`, if the class is labeled there.
    pub fn class_id(self, scenario: Scenario) -> Option<usize> {
        scenario.classes().iter().position(|&c| c == self)
    }

    pub fn is_radiated(self) -> bool {
        self != SignalClass::LfmcwTransmit
    }

    pub fn is_polyphase(self) -> bool {
        matches!(
            self,
            SignalClass::Frank | SignalClass::P1 | SignalClass::P2 | SignalClass::P3 | SignalClass::P4
        )
    }
}

impl fmt::Display for SignalClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Open interval `(min, max)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub min: f64,
    pub max: f64,
}

impl Interval {
    pub const fn new(min: f64, max: f64) -> Self {
        Self { min, max }
    }

    pub fn contains(&self, v: f64) -> bool {
        v > self.min && v < self.max
    }

    fn check(&self, field: &'static str) -> Result<()> {
        if !(self.min.is_finite() && self.max.is_finite()) {
            return Err(Error::config(field, "bounds must be finite"));
        }
        if self.min >= self.max {
            return Err(Error::config(
                field,
                format!("empty range ({}, {})", self.min, self.max),
            ));
        }
        Ok(())
    }

    /// Uniform draw strictly inside the interval.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        loop {
            let v = rng.random_range(self.min..self.max);
            if v > self.min {
                return v;
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountRange {
    pub min: usize,
    pub max: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneConfig {
    pub scenario: Scenario,
    /// Complex sample rate in Hz; the displayed band is `[0, sample_rate)`.
    pub sample_rate: f64,
    pub total_samples: usize,
    pub timeslots: usize,
    /// Carrier frequency range, Hz.
    pub fc: Interval,
    /// Two-sided occupied bandwidth range, Hz.
    pub bw: Interval,
    /// Transmission (or pulse) duration as a fraction of one timeslot.
    pub duty: Interval,
    pub snr_db: Interval,
    /// Probability that a given class transmits in a given timeslot (comms).
    pub emit_probability: f64,
    /// LFMCW sweep bandwidth range, Hz.
    pub sweep_bw: Interval,
    pub echo_count: CountRange,
    /// Echo delay as a fraction of the scene duration.
    pub echo_delay: Interval,
    /// Minimum spacing between echo delays, samples.
    pub min_echo_separation: usize,
    pub noise: NoiseModel,
    pub waveform: WaveformConfig,
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self::comms()
    }
}

impl SceneConfig {
    pub fn comms() -> Self {
        Self {
            scenario: Scenario::Comms,
            sample_rate: 500e6,
            total_samples: 16384,
            timeslots: 4,
            fc: Interval::new(60e6, 440e6),
            bw: Interval::new(20e6, 60e6),
            duty: Interval::new(0.2, 1.0),
            snr_db: Interval::new(0.0, 25.0),
            emit_probability: 0.5,
            sweep_bw: Interval::new(100e6, 300e6),
            echo_count: CountRange { min: 2, max: 5 },
            echo_delay: Interval::new(0.05, 0.30),
            min_echo_separation: 64,
            noise: NoiseModel::default(),
            waveform: WaveformConfig::default(),
        }
    }

    pub fn pulse_radar() -> Self {
        Self {
            scenario: Scenario::PulseRadar,
            ..Self::comms()
        }
    }

    pub fn lfmcw() -> Self {
        Self {
            scenario: Scenario::Lfmcw,
            ..Self::comms()
        }
    }

    pub fn for_scenario(scenario: Scenario) -> Self {
        match scenario {
            Scenario::Comms => Self::comms(),
            Scenario::PulseRadar => Self::pulse_radar(),
            Scenario::Lfmcw => Self::lfmcw(),
        }
    }

    pub fn samples_per_slot(&self) -> usize {
        self.total_samples / self.timeslots.max(1)
    }

    /// Scene duration in seconds.
    pub fn duration(&self) -> f64 {
        self.total_samples as f64 / self.sample_rate
    }

    /// Smallest and largest integer durations (samples) whose duty fraction
    /// lies strictly inside `self.duty`.
    pub fn duration_bounds(&self) -> (usize, usize) {
        let slot = self.samples_per_slot() as f64;
        let lo = (self.duty.min * slot).floor() as usize + 1;
        let hi = ((self.duty.max * slot).ceil() as usize).saturating_sub(1);
        (lo, hi)
    }

    pub fn validate(&self) -> Result<()> {
        let fs = self.sample_rate;
        if !(fs.is_finite() && fs > 0.0) {
            return Err(Error::config("sample_rate", "must be positive"));
        }
        if self.timeslots == 0 {
            return Err(Error::config("timeslots", "must be at least 1"));
        }
        if self.total_samples == 0 || !self.total_samples.is_multiple_of(self.timeslots) {
            return Err(Error::config(
                "total_samples",
                format!(
                    "{} is not a positive multiple of {} timeslots",
                    self.total_samples, self.timeslots
                ),
            ));
        }
        self.fc.check("fc")?;
        self.bw.check("bw")?;
        self.duty.check("duty")?;
        self.snr_db.check("snr_db")?;
        if self.bw.min <= 0.0 {
            return Err(Error::config("bw.min", "must be positive"));
        }
        if self.duty.min < 0.0 || self.duty.max > 1.0 {
            return Err(Error::config("duty", "must lie within [0, 1]"));
        }
        let (lo, hi) = self.duration_bounds();
        if lo > hi || lo == 0 {
            return Err(Error::config(
                "duty",
                "no integer duration fits strictly inside the range",
            ));
        }
        if !(0.0..=1.0).contains(&self.emit_probability) {
            return Err(Error::config("emit_probability", "must lie within [0, 1]"));
        }
        match self.scenario {
            Scenario::Comms | Scenario::PulseRadar => {
                if self.fc.max + self.bw.max / 2.0 >= fs {
                    return Err(Error::config(
                        "fc.max",
                        format!(
                            "fc.max + bw.max/2 = {} Hz reaches the sample rate {} Hz",
                            self.fc.max + self.bw.max / 2.0,
                            fs
                        ),
                    ));
                }
                if self.fc.min - self.bw.max / 2.0 <= 0.0 {
                    return Err(Error::config("fc.min", "fc.min - bw.max/2 must stay above 0 Hz"));
                }
                if self.bw.max / 2.0 > fs {
                    return Err(Error::config("bw.max", "chip rate would exceed the sample rate"));
                }
            }
            Scenario::Lfmcw => {
                self.sweep_bw.check("sweep_bw")?;
                self.echo_delay.check("echo_delay")?;
                if self.sweep_bw.min <= 0.0 || self.sweep_bw.max >= fs {
                    return Err(Error::config("sweep_bw", "must lie within (0, sample_rate)"));
                }
                let half = self.sweep_bw.max / 2.0;
                if self.fc.min.max(half) >= self.fc.max.min(fs - half) {
                    return Err(Error::config(
                        "fc",
                        "no carrier keeps the widest sweep inside (0, sample_rate)",
                    ));
                }
                if self.echo_count.min == 0 || self.echo_count.min > self.echo_count.max {
                    return Err(Error::config("echo_count", "need 1 <= min <= max"));
                }
                if self.echo_delay.min <= 0.0 || self.echo_delay.max >= 1.0 {
                    return Err(Error::config("echo_delay", "must lie within (0, 1)"));
                }
                let span = (self.echo_delay.max - self.echo_delay.min) * self.total_samples as f64;
                if span < ((self.echo_count.max - 1) * self.min_echo_separation) as f64 {
                    return Err(Error::config(
                        "min_echo_separation",
                        "delay range cannot hold echo_count.max separated echoes",
                    ));
                }
            }
        }
        self.noise.validate()?;
        self.waveform.validate()
    }
}

/// Class-specific parameters of an emission.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Extras {
    None,
    /// `order` is M for Frank/P1/P2 (M² chips) and N for P3/P4 (N chips).
    Polyphase {
        order: usize,
        samples_per_chip: usize,
    },
    /// Transmit sweep of an LFMCW radar.
    Sweep {
        sweep_bw: f64,
    },
    /// Target echo of the sweep, delayed by `delay` samples.
    Echo {
        delay: usize,
        sweep_bw: f64,
    },
}

impl Extras {
    /// Chip count implied by a polyphase order.
    pub fn chip_count(class: SignalClass, order: usize) -> usize {
        match class {
            SignalClass::Frank | SignalClass::P1 | SignalClass::P2 => order * order,
            _ => order,
        }
    }
}

/// Ground truth of one emission.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SignalSpec {
    pub class: SignalClass,
    /// Carrier (band center), Hz.
    pub fc: f64,
    /// Two-sided occupied bandwidth, Hz.
    pub bw: f64,
    /// First sample of the emission.
    pub t_start: usize,
    /// One past the last sample.
    pub t_end: usize,
    pub snr_db: f64,
    pub extras: Extras,
    pub sub_seed: u64,
}

impl SignalSpec {
    pub fn len(&self) -> usize {
        self.t_end.saturating_sub(self.t_start)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn band_low(&self) -> f64 {
        self.fc - self.bw / 2.0
    }

    pub fn band_high(&self) -> f64 {
        self.fc + self.bw / 2.0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub config: SceneConfig,
    pub scene_index: u64,
    pub master_seed: u64,
    pub signals: Vec<SignalSpec>,
}

impl Scene {
    /// Emissions that carry a label in this scenario.
    pub fn labeled(&self) -> impl Iterator<Item = (usize, &SignalSpec)> + '_ {
        let scenario = self.config.scenario;
        self.signals
            .iter()
            .filter_map(move |s| s.class.class_id(scenario).map(|id| (id, s)))
    }
}

/// Samples one randomized scene. Pure in `(config, master_seed, scene_index)`.
pub fn sample_scene(config: &SceneConfig, master_seed: u64, scene_index: u64) -> Result<Scene> {
    config.validate()?;
    let mut rng = seed::rng(seed::mix(master_seed, scene_index, seed::SCENE_STREAM));
    let mut signals = Vec::new();
    let sub_seed = |ordinal: usize| seed::mix(master_seed, scene_index, ordinal as u64);

    match config.scenario {
        Scenario::Comms => {
            let slot = config.samples_per_slot();
            let (dur_lo, dur_hi) = config.duration_bounds();
            for s in 0..config.timeslots {
                for &class in Scenario::Comms.classes() {
                    if rng.random::<f64>() >= config.emit_probability {
                        continue;
                    }
                    let fc = config.fc.sample(&mut rng);
                    let bw = config.bw.sample(&mut rng);
                    let snr_db = config.snr_db.sample(&mut rng);
                    let dt = config.duty.sample(&mut rng);
                    let dur = ((dt * slot as f64).round() as usize).clamp(dur_lo, dur_hi);
                    let offset = rng.random_range(0..=slot - dur);
                    let t_start = s * slot + offset;
                    signals.push(SignalSpec {
                        class,
                        fc,
                        bw,
                        t_start,
                        t_end: t_start + dur,
                        snr_db,
                        extras: Extras::None,
                        sub_seed: sub_seed(signals.len()),
                    });
                }
            }
        }
        Scenario::PulseRadar => {
            let slot = config.samples_per_slot() as f64;
            for &class in Scenario::PulseRadar.classes() {
                let fc = config.fc.sample(&mut rng);
                let bw = config.bw.sample(&mut rng);
                let snr_db = config.snr_db.sample(&mut rng);
                let spc = ((config.sample_rate / (bw / 2.0)).round() as usize).max(1);
                let mut layout = None;
                for _ in 0..MAX_REDRAWS {
                    let target = config.duty.sample(&mut rng) * slot;
                    let chips = (target / spc as f64).floor() as usize;
                    let order = polyphase_order(class, chips);
                    let len = Extras::chip_count(class, order) * spc;
                    if order >= 1 && len <= config.total_samples && config.duty.contains(len as f64 / slot) {
                        layout = Some((order, len));
                        break;
                    }
                }
                let Some((order, len)) = layout else {
                    log::warn!("scene {scene_index}: no valid {class} pulse after {MAX_REDRAWS} draws, skipped");
                    continue;
                };
                let t_start = rng.random_range(0..=config.total_samples - len);
                signals.push(SignalSpec {
                    class,
                    fc,
                    bw,
                    t_start,
                    t_end: t_start + len,
                    snr_db,
                    extras: Extras::Polyphase {
                        order,
                        samples_per_chip: spc,
                    },
                    sub_seed: sub_seed(signals.len()),
                });
            }
        }
        Scenario::Lfmcw => {
            let n = config.total_samples;
            let fs = config.sample_rate;
            let sweep_bw = config.sweep_bw.sample(&mut rng);
            let band = Interval::new(
                config.fc.min.max(sweep_bw / 2.0),
                config.fc.max.min(fs - sweep_bw / 2.0),
            );
            let fc = band.sample(&mut rng);
            let snr_db = config.snr_db.sample(&mut rng);
            signals.push(SignalSpec {
                class: SignalClass::LfmcwTransmit,
                fc,
                bw: sweep_bw,
                t_start: 0,
                t_end: n,
                snr_db,
                extras: Extras::Sweep { sweep_bw },
                sub_seed: sub_seed(0),
            });

            let sweep_low = fc - sweep_bw / 2.0;
            let k = rng.random_range(config.echo_count.min..=config.echo_count.max);
            let mut delays: Vec<usize> = Vec::with_capacity(k);
            for _ in 0..k {
                let mut placed = None;
                for _ in 0..MAX_DELAY_ATTEMPTS {
                    let tau = (config.echo_delay.sample(&mut rng) * n as f64).round() as usize;
                    let clear = delays.iter().all(|&d| d.abs_diff(tau) >= config.min_echo_separation);
                    if tau > 0 && tau < n && clear {
                        placed = Some(tau);
                        break;
                    }
                }
                match placed {
                    Some(tau) => delays.push(tau),
                    None => log::warn!("scene {scene_index}: could not place echo, skipped"),
                }
            }
            for tau in delays {
                // The echo is the sweep delayed by tau and cut at the end of
                // the capture, so only the first (n - tau) samples of the
                // sweep are visible.
                let visible_bw = sweep_bw * (n - tau) as f64 / n as f64;
                let snr_db = config.snr_db.sample(&mut rng);
                signals.push(SignalSpec {
                    class: SignalClass::LfmcwEcho,
                    fc: sweep_low + visible_bw / 2.0,
                    bw: visible_bw,
                    t_start: tau,
                    t_end: n,
                    snr_db,
                    extras: Extras::Echo { delay: tau, sweep_bw },
                    sub_seed: sub_seed(signals.len()),
                });
            }
        }
    }

    Ok(Scene {
        config: config.clone(),
        scene_index,
        master_seed,
        signals,
    })
}

/// Largest valid code order fitting in `chips` chips (0 if none).
pub fn polyphase_order(class: SignalClass, chips: usize) -> usize {
    match class {
        SignalClass::Frank | SignalClass::P1 => chips.isqrt(),
        SignalClass::P2 => {
            let m = chips.isqrt();
            m - m % 2
        }
        _ => chips,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ViolationKind {
    EmptyDuration,
    PastEnd,
    NonFinite,
    NonPositiveBandwidth,
    BandEdgeBelowZero,
    BandEdgeExceedsFs,
    CarrierOutOfRange,
    BandwidthOutOfRange,
    DurationOutOfRange,
    SnrOutOfRange,
    CrossesTimeslot,
    ClassNotInScenario,
    ChipLayout,
    BadExtras,
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ViolationKind::EmptyDuration => "empty duration",
            ViolationKind::PastEnd => "extends past end of capture",
            ViolationKind::NonFinite => "non-finite parameter",
            ViolationKind::NonPositiveBandwidth => "non-positive bandwidth",
            ViolationKind::BandEdgeBelowZero => "band edge below 0 Hz",
            ViolationKind::BandEdgeExceedsFs => "band edge exceeds fs",
            ViolationKind::CarrierOutOfRange => "carrier out of range",
            ViolationKind::BandwidthOutOfRange => "bandwidth out of range",
            ViolationKind::DurationOutOfRange => "duration out of range",
            ViolationKind::SnrOutOfRange => "snr out of range",
            ViolationKind::CrossesTimeslot => "crosses timeslot boundary",
            ViolationKind::ClassNotInScenario => "class not in scenario",
            ViolationKind::ChipLayout => "pulse length inconsistent with chip layout",
            ViolationKind::BadExtras => "extras do not match class",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Violation {
    /// Index into `scene.signals`.
    pub signal: usize,
    pub kind: ViolationKind,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "signal {}: {}", self.signal, self.kind)
    }
}

/// Lists every invariant the scene violates. An empty list means valid.
pub fn validate_scene(scene: &Scene) -> Vec<Violation> {
    let cfg = &scene.config;
    let fs = cfg.sample_rate;
    let slot = cfg.samples_per_slot().max(1);
    let mut out = Vec::new();

    for (i, s) in scene.signals.iter().enumerate() {
        let mut flag = |kind| out.push(Violation { signal: i, kind });

        let known = s.class.class_id(cfg.scenario).is_some()
            || (cfg.scenario == Scenario::Lfmcw && s.class == SignalClass::LfmcwTransmit);
        if !known {
            flag(ViolationKind::ClassNotInScenario);
        }
        if !(s.fc.is_finite() && s.bw.is_finite() && s.snr_db.is_finite()) {
            flag(ViolationKind::NonFinite);
            continue;
        }
        if s.t_end <= s.t_start {
            flag(ViolationKind::EmptyDuration);
        }
        if s.t_end > cfg.total_samples {
            flag(ViolationKind::PastEnd);
        }
        if s.bw <= 0.0 {
            flag(ViolationKind::NonPositiveBandwidth);
        }
        if s.band_low() <= 0.0 {
            flag(ViolationKind::BandEdgeBelowZero);
        }
        if s.band_high() >= fs {
            flag(ViolationKind::BandEdgeExceedsFs);
        }
        if !cfg.snr_db.contains(s.snr_db) {
            flag(ViolationKind::SnrOutOfRange);
        }

        match cfg.scenario {
            Scenario::Comms => {
                if !cfg.fc.contains(s.fc) {
                    flag(ViolationKind::CarrierOutOfRange);
                }
                if !cfg.bw.contains(s.bw) {
                    flag(ViolationKind::BandwidthOutOfRange);
                }
                if s.t_end > s.t_start {
                    if !cfg.duty.contains(s.len() as f64 / slot as f64) {
                        flag(ViolationKind::DurationOutOfRange);
                    }
                    if s.t_start / slot != (s.t_end - 1) / slot {
                        flag(ViolationKind::CrossesTimeslot);
                    }
                }
                if s.extras != Extras::None {
                    flag(ViolationKind::BadExtras);
                }
            }
            Scenario::PulseRadar => {
                if !cfg.fc.contains(s.fc) {
                    flag(ViolationKind::CarrierOutOfRange);
                }
                if !cfg.bw.contains(s.bw) {
                    flag(ViolationKind::BandwidthOutOfRange);
                }
                if !cfg.duty.contains(s.len() as f64 / slot as f64) {
                    flag(ViolationKind::DurationOutOfRange);
                }
                match s.extras {
                    Extras::Polyphase {
                        order,
                        samples_per_chip,
                    } => {
                        let p2_odd = s.class == SignalClass::P2 && order % 2 == 1;
                        let chips = Extras::chip_count(s.class, order);
                        if order == 0 || samples_per_chip == 0 || p2_odd || chips * samples_per_chip != s.len() {
                            flag(ViolationKind::ChipLayout);
                        }
                    }
                    _ => flag(ViolationKind::BadExtras),
                }
            }
            Scenario::Lfmcw => match (s.class, s.extras) {
                (SignalClass::LfmcwTransmit, Extras::Sweep { .. }) => {}
                (SignalClass::LfmcwEcho, Extras::Echo { delay, sweep_bw }) => {
                    if delay != s.t_start || sweep_bw < s.bw {
                        flag(ViolationKind::BadExtras);
                    }
                }
                _ => flag(ViolationKind::BadExtras),
            },
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comms_defaults_stay_in_table_ranges() {
        let scene = sample_scene(&SceneConfig::comms(), 42, 0).unwrap();
        assert!(!scene.signals.is_empty());
        for s in &scene.signals {
            assert!(s.fc > 60e6 && s.fc < 440e6);
            assert!(s.bw > 20e6 && s.bw < 60e6);
            assert!(s.snr_db > 0.0 && s.snr_db < 25.0);
        }
        assert!(validate_scene(&scene).is_empty());
    }

    #[test]
    fn sampling_is_deterministic() {
        for cfg in [SceneConfig::comms(), SceneConfig::pulse_radar(), SceneConfig::lfmcw()] {
            let a = sample_scene(&cfg, 42, 3).unwrap();
            let b = sample_scene(&cfg, 42, 3).unwrap();
            assert_eq!(a, b);
            assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
            assert_ne!(a, sample_scene(&cfg, 42, 4).unwrap());
        }
    }

    #[test]
    fn full_emission_probability_fills_every_slot() {
        let cfg = SceneConfig {
            emit_probability: 1.0,
            ..SceneConfig::comms()
        };
        let scene = sample_scene(&cfg, 1, 0).unwrap();
        // 4 timeslots x 8 classes
        assert_eq!(scene.signals.len(), 32);
        let none = SceneConfig {
            emit_probability: 0.0,
            ..SceneConfig::comms()
        };
        assert!(sample_scene(&none, 1, 0).unwrap().signals.is_empty());
    }

    #[test]
    fn pulse_radar_emits_one_pulse_per_code() {
        for index in 0..50 {
            let scene = sample_scene(&SceneConfig::pulse_radar(), 9, index).unwrap();
            let classes: Vec<_> = scene.signals.iter().map(|s| s.class).collect();
            assert_eq!(classes, Scenario::PulseRadar.classes());
            assert!(validate_scene(&scene).is_empty(), "{:?}", validate_scene(&scene));
        }
    }

    #[test]
    fn lfmcw_emits_transmit_and_echoes() {
        for index in 0..50 {
            let scene = sample_scene(&SceneConfig::lfmcw(), 5, index).unwrap();
            assert_eq!(scene.signals[0].class, SignalClass::LfmcwTransmit);
            let echoes = &scene.signals[1..];
            assert!((2..=5).contains(&echoes.len()));
            for (i, a) in echoes.iter().enumerate() {
                assert_eq!(a.class, SignalClass::LfmcwEcho);
                assert!(a.t_start >= 819 && a.t_start <= 4916);
                for b in &echoes[i + 1..] {
                    assert!(a.t_start.abs_diff(b.t_start) >= 64);
                }
                // Echo band starts at the bottom of the sweep.
                assert!((a.band_low() - scene.signals[0].band_low()).abs() < 1e-3);
            }
            assert!(validate_scene(&scene).is_empty());
            assert_eq!(scene.labeled().count(), echoes.len());
        }
    }

    fn one_signal(fc: f64, bw: f64, t_start: usize, t_end: usize) -> Scene {
        Scene {
            config: SceneConfig::comms(),
            scene_index: 0,
            master_seed: 0,
            signals: vec![SignalSpec {
                class: SignalClass::Qpsk,
                fc,
                bw,
                t_start,
                t_end,
                snr_db: 10.0,
                extras: Extras::None,
                sub_seed: 0,
            }],
        }
    }

    #[test]
    fn band_edge_violation() {
        let v = validate_scene(&one_signal(490e6, 40e6, 0, 2048));
        let kinds: Vec<_> = v.iter().map(|v| v.kind).collect();
        assert!(kinds.contains(&ViolationKind::BandEdgeExceedsFs));
        assert!(v.iter().any(|v| v.to_string().contains("band edge exceeds fs")));
    }

    #[test]
    fn empty_duration_violation() {
        let v = validate_scene(&one_signal(200e6, 40e6, 100, 100));
        assert!(v.iter().any(|v| v.kind == ViolationKind::EmptyDuration));
        assert!(v.iter().any(|v| v.to_string().contains("empty duration")));
    }

    #[test]
    fn slot_crossing_violation() {
        let v = validate_scene(&one_signal(200e6, 40e6, 4000, 5000));
        assert!(v.iter().any(|v| v.kind == ViolationKind::CrossesTimeslot));
    }

    #[test]
    fn config_errors_name_the_field() {
        let mut cfg = SceneConfig::comms();
        cfg.fc = Interval::new(60e6, 480e6);
        match sample_scene(&cfg, 0, 0) {
            Err(Error::Config { field, .. }) => assert_eq!(field, "fc.max"),
            other => panic!("unexpected {other:?}"),
        }
        let mut cfg = SceneConfig::comms();
        cfg.bw = Interval::new(60e6, 20e6);
        match cfg.validate() {
            Err(Error::Config { field, .. }) => assert_eq!(field, "bw"),
            other => panic!("unexpected {other:?}"),
        }
        let mut cfg = SceneConfig::comms();
        cfg.total_samples = 16385;
        assert!(matches!(
            cfg.validate(),
            Err(Error::Config {
                field: "total_samples",
                ..
            })
        ));
    }

    #[test]
    fn polyphase_orders() {
        assert_eq!(polyphase_order(SignalClass::Frank, 80), 8);
        assert_eq!(polyphase_order(SignalClass::P1, 81), 9);
        assert_eq!(polyphase_order(SignalClass::P2, 81), 8);
        assert_eq!(polyphase_order(SignalClass::P2, 3), 0);
        assert_eq!(polyphase_order(SignalClass::P3, 57), 57);
    }

    #[test]
    fn class_ids_are_dense() {
        for sc in Scenario::ALL {
            for (i, c) in sc.classes().iter().enumerate() {
                assert_eq!(c.class_id(sc), Some(i));
            }
        }
        assert_eq!(SignalClass::LfmcwTransmit.class_id(Scenario::Lfmcw), None);
        assert_eq!(serde_json::to_string(&SignalClass::Psk8).unwrap(), "\"8PSK\"");
    }
}
