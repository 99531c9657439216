use std::io::Write;
use std::path::PathBuf;

use clap::Args;
use rayon::prelude::*;
use rfscene_core::dataset::{
    write_dataset, Colormap, DatasetManifest, DatasetOptions, RenderConfig, Split, SplitFractions,
};
use rfscene_core::scene::{sample_scene, CountRange, Interval};
use rfscene_core::spectro::{StftConfig, Window};
use rfscene_core::{Scenario, SceneConfig};

use crate::{parse_image_size, say, CliError, CliResult};

/// Flags left unset fall back to `--from-manifest`, then to the scenario
/// defaults. Flag names follow the manifest keys.
#[derive(Debug, Clone, Default, Args)]
pub struct GenArgs {
    /// Scenario: comms, pulse-radar or lfmcw.
    #[arg(long)]
    pub scenario: Option<Scenario>,
    /// Number of scenes.
    #[arg(long = "scenes", alias = "scene-count")]
    pub scenes: Option<usize>,
    /// Master seed.
    #[arg(long = "seed", alias = "master-seed")]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Take every setting not given on the command line from this manifest.
    #[arg(long, value_name = "MANIFEST")]
    pub from_manifest: Option<PathBuf>,
    /// Worker threads (0 = one per core). Does not affect output bytes.
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
    /// Replace an existing dataset in the output directory.
    #[arg(long)]
    pub force: bool,

    /// Fraction of scenes in the train split (default 0.7).
    #[arg(long)]
    pub train_fraction: Option<f64>,
    /// Fraction of scenes in the val split (default 0.2).
    #[arg(long)]
    pub val_fraction: Option<f64>,
    /// Fraction of scenes in the test split (default 0.1).
    #[arg(long)]
    pub test_fraction: Option<f64>,
    /// Shuffle split membership with this seed (contiguous blocks otherwise).
    #[arg(long)]
    pub shuffle_seed: Option<u64>,

    /// STFT window: hann, hamming or rectangular.
    #[arg(long)]
    pub window: Option<Window>,
    /// STFT window length, samples (default 256).
    #[arg(long)]
    pub window_length: Option<usize>,
    /// STFT FFT size, at least the window length (default 256).
    #[arg(long)]
    pub fft_size: Option<usize>,
    /// STFT hop between frames, samples (default 64).
    #[arg(long)]
    pub hop: Option<usize>,

    /// Square size `N` or `WxH`.
    #[arg(long, value_parser = parse_image_size)]
    pub image_size: Option<(u32, u32)>,
    /// Image width in pixels; overrides `--image-size`.
    #[arg(long)]
    pub image_width: Option<u32>,
    /// Image height in pixels; overrides `--image-size`.
    #[arg(long)]
    pub image_height: Option<u32>,
    /// Displayed dynamic range below the image maximum, dB.
    #[arg(long)]
    pub dynamic_range_db: Option<f64>,
    /// viridis or gray.
    #[arg(long)]
    pub colormap: Option<Colormap>,

    /// Sample rate, Hz.
    #[arg(long)]
    pub sample_rate: Option<f64>,
    /// Samples per scene capture (default 16384).
    #[arg(long)]
    pub total_samples: Option<usize>,
    /// Timeslots per capture (comms, default 4).
    #[arg(long)]
    pub timeslots: Option<usize>,
    /// Carrier range, Hz.
    #[arg(long)]
    pub fc_min: Option<f64>,
    /// Upper end of the carrier range, Hz.
    #[arg(long)]
    pub fc_max: Option<f64>,
    /// Occupied bandwidth range, Hz.
    #[arg(long)]
    pub bw_min: Option<f64>,
    /// Upper end of the bandwidth range, Hz.
    #[arg(long)]
    pub bw_max: Option<f64>,
    /// Duration range as a fraction of one timeslot.
    #[arg(long)]
    pub duty_min: Option<f64>,
    /// Upper end of the duration range.
    #[arg(long)]
    pub duty_max: Option<f64>,
    /// In-band SNR range, dB.
    #[arg(long)]
    pub snr_min: Option<f64>,
    /// Upper end of the SNR range, dB.
    #[arg(long)]
    pub snr_max: Option<f64>,
    /// Per-class, per-slot transmit probability (comms).
    #[arg(long)]
    pub emit_probability: Option<f64>,
    /// LFMCW sweep bandwidth range, Hz.
    #[arg(long)]
    pub sweep_bw_min: Option<f64>,
    /// Upper end of the sweep bandwidth range, Hz.
    #[arg(long)]
    pub sweep_bw_max: Option<f64>,
    /// Fewest echoes per LFMCW scene.
    #[arg(long)]
    pub echo_count_min: Option<usize>,
    /// Most echoes per LFMCW scene.
    #[arg(long)]
    pub echo_count_max: Option<usize>,
    /// Echo delay range as a fraction of the capture.
    #[arg(long)]
    pub echo_delay_min: Option<f64>,
    /// Upper end of the echo delay range.
    #[arg(long)]
    pub echo_delay_max: Option<f64>,
    /// Minimum spacing between echo delays, samples.
    #[arg(long)]
    pub min_echo_separation: Option<usize>,
    /// Complex noise variance per sample.
    #[arg(long)]
    pub noise_variance: Option<f64>,
}

/// Everything a `gen` run needs, resolved and validated.
#[derive(Debug, Clone, PartialEq)]
pub struct GenPlan {
    pub config: SceneConfig,
    pub scenes: usize,
    pub seed: u64,
    pub options: DatasetOptions,
}

fn set<T>(dst: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *dst = v;
    }
}

fn set_interval(dst: &mut Interval, min: Option<f64>, max: Option<f64>) {
    set(&mut dst.min, min);
    set(&mut dst.max, max);
}

fn set_count(dst: &mut CountRange, min: Option<usize>, max: Option<usize>) {
    set(&mut dst.min, min);
    set(&mut dst.max, max);
}

impl GenArgs {
    pub fn plan(&self) -> CliResult<GenPlan> {
        let base = self.from_manifest.as_deref().map(DatasetManifest::read).transpose()?;
        let mut config = match (&base, self.scenario) {
            (Some(m), None) => m.scene_config.clone(),
            (Some(m), Some(s)) if s == m.scenario => m.scene_config.clone(),
            (_, Some(s)) => SceneConfig::for_scenario(s),
            (None, None) => return Err(CliError::Usage("--scenario is required".into())),
        };
        let scenes = self
            .scenes
            .or(base.as_ref().map(|m| m.scene_count))
            .ok_or_else(|| CliError::Usage("--scenes is required".into()))?;
        let seed = self.seed.or(base.as_ref().map(|m| m.master_seed)).unwrap_or(0);

        let mut options = DatasetOptions {
            workers: self.workers,
            force: self.force,
            ..DatasetOptions::default()
        };
        if let Some(m) = &base {
            options.split = m.split_fractions;
            options.stft = m.stft;
            options.shuffle_seed = m.shuffle_seed;
            options.render = RenderConfig {
                width: m.image_width,
                height: m.image_height,
                dynamic_range_db: m.dynamic_range_db,
                colormap: m.colormap.parse()?,
            };
        }
        let SplitFractions { train, val, test } = &mut options.split;
        set(train, self.train_fraction);
        set(val, self.val_fraction);
        set(test, self.test_fraction);
        if self.shuffle_seed.is_some() {
            options.shuffle_seed = self.shuffle_seed;
        }
        let StftConfig {
            window,
            window_length,
            fft_size,
            hop,
        } = &mut options.stft;
        set(window, self.window);
        set(window_length, self.window_length);
        set(fft_size, self.fft_size);
        set(hop, self.hop);
        let r = &mut options.render;
        if let Some((w, h)) = self.image_size {
            r.width = w;
            r.height = h;
        }
        set(&mut r.width, self.image_width);
        set(&mut r.height, self.image_height);
        set(&mut r.dynamic_range_db, self.dynamic_range_db);
        set(&mut r.colormap, self.colormap);

        set(&mut config.sample_rate, self.sample_rate);
        set(&mut config.total_samples, self.total_samples);
        set(&mut config.timeslots, self.timeslots);
        set_interval(&mut config.fc, self.fc_min, self.fc_max);
        set_interval(&mut config.bw, self.bw_min, self.bw_max);
        set_interval(&mut config.duty, self.duty_min, self.duty_max);
        set_interval(&mut config.snr_db, self.snr_min, self.snr_max);
        set(&mut config.emit_probability, self.emit_probability);
        set_interval(&mut config.sweep_bw, self.sweep_bw_min, self.sweep_bw_max);
        set_count(&mut config.echo_count, self.echo_count_min, self.echo_count_max);
        set_interval(&mut config.echo_delay, self.echo_delay_min, self.echo_delay_max);
        set(&mut config.min_echo_separation, self.min_echo_separation);
        set(&mut config.noise.variance, self.noise_variance);

        if scenes == 0 {
            return Err(CliError::Usage("--scenes must be at least 1".into()));
        }
        config.validate()?;
        options.split.validate()?;
        options.stft.validate()?;
        options.render.validate()?;
        if options.stft.window_length > config.total_samples {
            return Err(CliError::Usage("--window-length exceeds --total-samples".into()));
        }
        Ok(GenPlan {
            config,
            scenes,
            seed,
            options,
        })
    }
}

pub fn cmd_generate(args: &GenArgs, out: &mut dyn Write) -> CliResult<()> {
    let plan = args.plan()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(plan.options.workers)
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start worker pool: {e}")))?;
    let scenes = pool.install(|| {
        (0..plan.scenes as u64)
            .into_par_iter()
            .map(|i| sample_scene(&plan.config, plan.seed, i))
            .collect::<Result<Vec<_>, _>>()
    })?;
    let manifest = write_dataset(&scenes, &args.out, &plan.options)?;
    say(out, format!("manifest {}", args.out.join("manifest.json").display()))?;
    for s in Split::ALL {
        say(out, format!("{s} {}", manifest.split(s).count))?;
    }
    Ok(())
}
