//! Carrier placement, SNR calibration and scene composition.
//!
//! SNR is in-band: an emission of occupied bandwidth `bw` at `snr_db` gets
//! mean power `10^(snr_db/10) * sigma^2 * bw / fs`, i.e. its power over the
//! noise power that falls inside its own band. Noise is white complex
//! Gaussian with per-sample variance `sigma^2` over the whole capture.

use std::f64::consts::TAU;

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::scene::Scene;
use crate::waveforms::{synthesize, IqBuffer};
use crate::{seed, Error, Result, C64};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    /// Complex per-sample variance.
    pub variance: f64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self { variance: 1.0 }
    }
}

impl NoiseModel {
    /// Complex-baseband noise PSD `N0 = sigma^2 / fs`.
    pub fn psd(&self, fs: f64) -> f64 {
        self.variance / fs
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.variance.is_finite() && self.variance > 0.0) {
            return Err(Error::config("noise.variance", "must be finite and positive"));
        }
        Ok(())
    }

    /// `len` samples of complex AWGN, reproducible from `seed`.
    pub fn samples(&self, len: usize, seed: u64) -> Vec<C64> {
        let mut rng = seed::rng(seed);
        let sd = (self.variance / 2.0).sqrt();
        (0..len)
            .map(|_| {
                let re: f64 = StandardNormal.sample(&mut rng);
                let im: f64 = StandardNormal.sample(&mut rng);
                C64::new(re * sd, im * sd)
            })
            .collect()
    }
}

/// `y[n] = x[n] * exp(j*2*pi*fc*(n + t_offset)/fs)`.
pub fn mix_to_carrier(iq: &IqBuffer, fc: f64, t_offset: usize) -> Result<IqBuffer> {
    let fs = iq.fs();
    if !(fc >= 0.0 && fc < fs) {
        return Err(Error::arg(format!("carrier {fc} Hz outside [0, fs = {fs} Hz)")));
    }
    if fc == 0.0 {
        return Ok(iq.clone());
    }
    let ratio = fc / fs;
    let samples = iq
        .samples()
        .iter()
        .enumerate()
        .map(|(n, &x)| x * C64::cis(TAU * (ratio * (n + t_offset) as f64).fract()))
        .collect();
    IqBuffer::new(samples, fs)
}

/// Mean power an emission needs for in-band `snr_db`.
pub fn target_power(snr_db: f64, bw: f64, noise: &NoiseModel, fs: f64) -> f64 {
    10f64.powf(snr_db / 10.0) * noise.psd(fs) * bw
}

/// Scales a unit-power buffer to the in-band SNR `snr_db`.
pub fn calibrate_snr(iq: &IqBuffer, snr_db: f64, bw: f64, noise: &NoiseModel) -> Result<IqBuffer> {
    if bw.is_nan() || bw <= 0.0 {
        return Err(Error::arg(format!("bandwidth must be positive, got {bw}")));
    }
    let gain = target_power(snr_db, bw, noise, iq.fs()).sqrt();
    IqBuffer::new(iq.samples().iter().map(|&x| x * gain).collect(), iq.fs())
}

/// The received aggregate of one scene.
#[derive(Clone, Debug)]
pub struct CompositeCapture<'a> {
    pub aggregate: IqBuffer,
    pub scene: &'a Scene,
    pub noise_seed: u64,
}

/// Noise seed used by the dataset pipeline for a scene.
pub fn scene_noise_seed(scene: &Scene) -> u64 {
    seed::mix(scene.master_seed, scene.scene_index, seed::NOISE_STREAM)
}

/// Noise-free sum of all radiated emissions, accumulated in emission order.
pub fn compose_signals(scene: &Scene, noise: &NoiseModel) -> Result<Vec<C64>> {
    let cfg = &scene.config;
    let mut acc = vec![C64::new(0.0, 0.0); cfg.total_samples];
    for (i, spec) in scene.signals.iter().enumerate() {
        if !spec.class.is_radiated() {
            continue;
        }
        let fail = |reason: String| Error::Composition {
            emission: i,
            class: spec.class.to_string(),
            reason,
        };
        if spec.t_end > cfg.total_samples || spec.t_end <= spec.t_start {
            return Err(fail(format!(
                "span [{}, {}) does not fit a capture of {} samples",
                spec.t_start, spec.t_end, cfg.total_samples
            )));
        }
        let base = synthesize(spec, cfg).map_err(|e| fail(e.to_string()))?;
        let scaled = calibrate_snr(&base, spec.snr_db, spec.bw, noise).map_err(|e| fail(e.to_string()))?;
        let mixed = mix_to_carrier(&scaled, spec.fc, spec.t_start).map_err(|e| fail(e.to_string()))?;
        for (dst, src) in acc[spec.t_start..spec.t_end].iter_mut().zip(mixed.samples()) {
            *dst += src;
        }
    }
    Ok(acc)
}

/// Sums every radiated emission of `scene` at its carrier, SNR and time span,
/// then adds one realization of receiver noise drawn from `noise_seed`.
pub fn compose_scene(scene: &Scene, noise_seed: u64) -> Result<CompositeCapture<'_>> {
    let cfg = &scene.config;
    cfg.noise.validate()?;
    let mut acc = compose_signals(scene, &cfg.noise)?;
    for (a, n) in acc.iter_mut().zip(cfg.noise.samples(cfg.total_samples, noise_seed)) {
        *a += n;
    }
    Ok(CompositeCapture {
        aggregate: IqBuffer::new(acc, cfg.sample_rate)?,
        scene,
        noise_seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{Extras, SceneConfig, SignalClass, SignalSpec};
    use rustfft::FftPlanner;

    fn tone(len: usize, fs: f64) -> IqBuffer {
        IqBuffer::new(vec![C64::new(1.0, 0.0); len], fs).unwrap()
    }

    #[test]
    fn quarter_rate_carrier_peaks_at_quarter_bin() {
        let x = mix_to_carrier(&tone(256, 500e6), 125e6, 0).unwrap();
        let mut buf = x.into_samples();
        FftPlanner::new().plan_fft_forward(256).process(&mut buf);
        let peak = (0..256)
            .max_by(|&a, &b| buf[a].norm().total_cmp(&buf[b].norm()))
            .unwrap();
        assert_eq!(peak, 64);
    }

    #[test]
    fn mixing_preserves_power_and_zero_is_identity() {
        let iq = IqBuffer::new(
            (0..1000)
                .map(|n| C64::new((n as f64).sin(), (n as f64 * 0.3).cos()))
                .collect(),
            500e6,
        )
        .unwrap();
        let y = mix_to_carrier(&iq, 123.4e6, 77).unwrap();
        assert!(((y.energy() - iq.energy()) / iq.energy()).abs() < 1e-9);
        assert_eq!(mix_to_carrier(&iq, 0.0, 5).unwrap(), iq);
        assert!(mix_to_carrier(&iq, 500e6, 0).is_err());
    }

    #[test]
    fn snr_target_power() {
        let noise = NoiseModel::default();
        assert!((target_power(0.0, 50e6, &noise, 500e6) - 0.1).abs() < 1e-15);
        let a = calibrate_snr(&tone(16, 500e6), 0.0, 50e6, &noise).unwrap();
        let b = calibrate_snr(&tone(16, 500e6), 10.0, 50e6, &noise).unwrap();
        let ratio = b.samples()[0].re / a.samples()[0].re;
        assert!((ratio - 10f64.sqrt()).abs() < 1e-12);
        assert!(calibrate_snr(&tone(16, 500e6), 0.0, 0.0, &noise).is_err());
    }

    fn scene_with(signals: Vec<SignalSpec>, variance: f64) -> Scene {
        let mut config = SceneConfig::comms();
        config.noise.variance = variance;
        Scene {
            config,
            scene_index: 0,
            master_seed: 0,
            signals,
        }
    }

    fn qpsk(fc: f64, bw: f64, t_start: usize, t_end: usize, snr_db: f64, sub_seed: u64) -> SignalSpec {
        SignalSpec {
            class: SignalClass::Qpsk,
            fc,
            bw,
            t_start,
            t_end,
            snr_db,
            extras: Extras::None,
            sub_seed,
        }
    }

    #[test]
    fn empty_scene_is_noise_floor() {
        let scene = scene_with(vec![], 1.0);
        let cap = compose_scene(&scene, 3).unwrap();
        assert_eq!(cap.aggregate.len(), 16384);
        assert!((cap.aggregate.mean_power() - 1.0).abs() < 0.03);
    }

    #[test]
    fn single_emission_power_without_noise() {
        let spec = qpsk(200e6, 40e6, 1000, 5000, 10.0, 1);
        let noise = NoiseModel::default();
        let acc = compose_signals(&scene_with(vec![spec], 1.0), &noise).unwrap();
        assert!(acc[..1000].iter().chain(&acc[5000..]).all(|s| s.norm() == 0.0));
        let p = acc[1000..5000].iter().map(|s| s.norm_sqr()).sum::<f64>() / 4000.0;
        let want = target_power(10.0, 40e6, &noise, 500e6);
        assert!(((p - want) / want).abs() < 1e-9, "{p} vs {want}");
    }

    #[test]
    fn disjoint_emissions_add_power() {
        let a = qpsk(120e6, 40e6, 0, 16384, 20.0, 1);
        let b = qpsk(350e6, 50e6, 0, 16384, 15.0, 2);
        let scene = scene_with(vec![a, b], 1.0);
        let noise = NoiseModel::default();
        let want = target_power(20.0, 40e6, &noise, 500e6) + target_power(15.0, 50e6, &noise, 500e6) + 1.0;
        let got = compose_scene(&scene, 9).unwrap().aggregate.mean_power();
        assert!(((got - want) / want).abs() < 0.03, "{got} vs {want}");
    }

    #[test]
    fn composition_is_linear_and_deterministic() {
        let a = vec![
            qpsk(120e6, 40e6, 0, 3000, 20.0, 1),
            qpsk(300e6, 30e6, 5000, 8000, 5.0, 4),
        ];
        let b = vec![qpsk(150e6, 40e6, 2000, 4000, 10.0, 2)];
        let noise = NoiseModel::default();
        let sa = compose_signals(&scene_with(a.clone(), 1.0), &noise).unwrap();
        let sb = compose_signals(&scene_with(b.clone(), 1.0), &noise).unwrap();
        let both = compose_signals(&scene_with([a, b].concat(), 1.0), &noise).unwrap();
        for ((x, y), z) in sa.iter().zip(&sb).zip(&both) {
            assert!((x + y - z).norm() < 1e-12);
        }
        let scene = scene_with(vec![qpsk(150e6, 40e6, 2000, 4000, 10.0, 2)], 1.0);
        let c1 = compose_scene(&scene, 5).unwrap().aggregate;
        let c2 = compose_scene(&scene, 5).unwrap().aggregate;
        assert_eq!(c1, c2);
    }

    #[test]
    fn overlong_emission_is_named() {
        let scene = scene_with(vec![qpsk(150e6, 40e6, 16000, 17000, 10.0, 2)], 1.0);
        match compose_scene(&scene, 0) {
            Err(Error::Composition { emission, .. }) => assert_eq!(emission, 0),
            other => panic!("unexpected {other:?}"),
        }
    }
}
