//! Synthetic congested-spectrum scene simulator.
//!
//! The pipeline for one scene is
//! `sample_scene -> synthesize -> compose_scene -> stft -> render_image`,
//! with labels taken directly from the ground-truth [`SignalSpec`]s.
//! [`eval`] scores detector output written in the same normalized XYWH
//! label convention.

pub mod channel;
pub mod dataset;
mod error;
pub mod eval;
pub mod scene;
pub mod seed;
pub mod spectro;
pub mod waveforms;

pub use error::{Error, Result};
pub use scene::{Scenario, Scene, SceneConfig, SignalClass, SignalSpec};

/// Complex sample type used throughout the crate.
pub type C64 = num_complex::Complex64;
