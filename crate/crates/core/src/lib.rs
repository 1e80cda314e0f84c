//! Terrain roughness estimation from 3D point-cloud patches.
//!
//! Each patch ahead of the vehicle is gridded into longitudinal elevation
//! profiles. Every profile is detrended and its one-sided Welch PSD is fitted
//! with a power law `phi(omega) = R * omega^w`. The per-profile `(ln R, w)`
//! pairs are averaged over the patch, the uncertainty of `R` is carried
//! through the exponential with the first-order delta method, and the result
//! is classified against the ISO 8608 road classes.
//!
//! The [`synth`] module generates terrain with known `(R, w)` so the whole
//! chain can be checked without field data.

pub mod classify;
pub mod error;
pub mod io;
pub mod par;
pub mod pipeline;
pub mod preprocess;
pub mod roughness;
pub mod spectrum;
pub mod stats;
pub mod synth;

pub use error::{Error, Result};
