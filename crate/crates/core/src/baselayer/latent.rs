//! Brightness-anchored blending and forward noising of an initial latent.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::schedule::NoiseSchedule;

/// Dense `channels x height x width` grid of finite reals.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentGrid {
    channels: usize,
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl LatentGrid {
    pub fn new(channels: usize, width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if channels == 0 || width == 0 || height == 0 {
            return Err(Error::param("latent dimensions must be positive"));
        }
        if data.len() != channels * width * height {
            return Err(Error::param(format!(
                "latent data length {} does not match {channels}x{height}x{width}",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("latent"));
        }
        Ok(Self {
            channels,
            width,
            height,
            data,
        })
    }

    pub fn filled(channels: usize, width: usize, height: usize, value: f64) -> Result<Self> {
        Self::new(channels, width, height, vec![value; channels * width * height])
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.channels, self.width, self.height)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    /// Population variance.
    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.data.iter().map(|v| (v - m).powi(2)).sum::<f64>() / self.data.len() as f64
    }

    fn with_data(&self, data: Vec<f64>) -> Self {
        Self {
            channels: self.channels,
            width: self.width,
            height: self.height,
            data,
        }
    }
}

/// Affine bridge from pixel brightness in `[0, 1]` to the latent value
/// domain: `(2v - 1) * scale`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatentMapping {
    pub scale: f64,
}

impl Default for LatentMapping {
    fn default() -> Self {
        Self { scale: 1.0 }
    }
}

impl LatentMapping {
    pub const FORMULA: &'static str = "(2*v - 1) * scale";

    pub fn to_latent(&self, v: f64) -> f64 {
        (2.0 * v - 1.0) * self.scale
    }

    pub fn from_latent(&self, l: f64) -> f64 {
        (l / self.scale + 1.0) / 2.0
    }
}

/// `x0' = target + (x0 - target) * factor`, elementwise.
///
/// Evaluated as `x0 * factor + target * (1 - factor)`, which is exact at
/// factor 1 (identity) and 0 (collapse). `target` must already be in the
/// latent's value domain.
pub fn shape_base_layer(x0: &LatentGrid, l_mean_target: f64, factor: f64) -> Result<LatentGrid> {
    if !l_mean_target.is_finite() {
        return Err(Error::NonFinite("brightness target"));
    }
    if !(0.0..=1.0).contains(&factor) {
        return Err(Error::param(format!("blend factor {factor} outside [0, 1]")));
    }
    let data = x0
        .data
        .iter()
        .map(|&v| v * factor + l_mean_target * (1.0 - factor))
        .collect();
    Ok(x0.with_data(data))
}

/// `x_t = sqrt(alpha_bar_t) * x0' + sqrt(1 - alpha_bar_t) * z` at 1-based step `t`.
pub fn forward_noise(x0p: &LatentGrid, t: usize, schedule: &NoiseSchedule, z: &LatentGrid) -> Result<LatentGrid> {
    forward_noise_with(x0p, schedule.alpha_bar(t)?, z)
}

/// Forward noising at an explicit signal-retention level in `[0, 1]`.
pub fn forward_noise_with(x0p: &LatentGrid, alpha_bar: f64, z: &LatentGrid) -> Result<LatentGrid> {
    if x0p.shape() != z.shape() {
        return Err(Error::param(format!(
            "noise shape {:?} does not match latent shape {:?}",
            z.shape(),
            x0p.shape()
        )));
    }
    if !(0.0..=1.0).contains(&alpha_bar) {
        return Err(Error::param(format!("alpha_bar {alpha_bar} outside [0, 1]")));
    }
    let signal = alpha_bar.sqrt();
    let noise = (1.0 - alpha_bar).sqrt();
    let data = x0p
        .data
        .iter()
        .zip(&z.data)
        .map(|(x, n)| signal * x + noise * n)
        .collect();
    Ok(x0p.with_data(data))
}
