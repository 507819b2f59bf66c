//! Key-rate analysis for QKD links whose artificial losses are monitored by
//! line tomography.
//!
//! The crate is organized bottom-up:
//!
//! * [`info`]: entropy, coherent-state overlaps, Poisson statistics.
//! * [`channel`]: fiber attenuation and localized leaks.
//! * [`natural_loss`]: what Rayleigh-scattered light could reveal.
//! * [`keyrate`]: closed-form BB84, decoy, COW and PLOB rates.
//! * [`optimize`]: intensity optimization and the derived analyses.
//! * [`tomography`]: reflectogram synthesis/fitting and lock-in transmittometry.
//! * [`montecarlo`]: pulse-level sampling oracle for the rate ingredients.

pub mod channel;
pub mod error;
pub mod format;
pub mod info;
pub mod keyrate;
pub mod montecarlo;
pub mod natural_loss;
pub mod optimize;
pub mod tomography;

pub use error::{Error, Result};
pub use info::{CoherentAmplitude, Probability};
