//! Illumination statistics of the appearance reference and the base-layer
//! shaping of the initial latent.

pub mod latent;
pub mod retinex;
pub mod schedule;

pub use latent::{forward_noise, forward_noise_with, shape_base_layer, LatentGrid, LatentMapping};
pub use retinex::{
    brightness_analysis, gaussian_blur, retinex_illumination, BrightnessStats, IlluminationMap, LOG_EPSILON,
};
pub use schedule::{build_schedule, NoiseSchedule, ScheduleSpec};
