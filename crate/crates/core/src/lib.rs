//! Conditioning toolkit for rendering photographic appearance onto
//! professional line drawings with a pretrained diffusion backbone.
//!
//! The crate produces a *conditioning bundle*: a fused structural
//! condition, an illumination summary with its noise schedule, and a
//! patch-reassembled texture reference. A separate runner consumes the
//! bundle. Dataset curation and evaluation metrics live alongside.

pub mod baselayer;
pub mod bundle;
pub mod config;
pub mod curation;
pub mod digest;
pub mod error;
pub mod linefusion;
pub mod metrics;
pub mod raster;
pub mod texsynth;

pub use error::{Error, Result};
pub use raster::{BinaryMask, GrayImage, Plane, RgbImage};
