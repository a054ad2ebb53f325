//! Multi-scale Retinex illumination estimate and its brightness summary.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{GrayImage, Plane};

/// Guard added before taking the logarithm of a blurred luminance.
pub const LOG_EPSILON: f64 = 1e-4;

const WEIGHT_SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct IlluminationMap {
    pub image: GrayImage,
    pub scales: Vec<f64>,
    pub weights: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BrightnessStats {
    /// Mean illumination in `[0, 1]`.
    pub l_mean: f64,
    /// The same mean on the 0..=255 scale.
    pub l_mean_255: f64,
    /// Population variance of the illumination map.
    pub sigma2: f64,
}

fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil().max(1.0) as isize;
    let denom = 2.0 * sigma * sigma;
    let raw: Vec<f64> = (-radius..=radius).map(|i| (-((i * i) as f64) / denom).exp()).collect();
    let sum: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / sum).collect()
}

/// Separable Gaussian blur, kernel truncated at `ceil(3 sigma)` and
/// renormalized, borders clamped to the nearest edge pixel.
pub fn gaussian_blur(img: &Plane, sigma: f64) -> Result<Plane> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::param(format!("gaussian sigma {sigma} must be positive")));
    }
    let kernel = gaussian_kernel(sigma);
    let radius = (kernel.len() / 2) as isize;
    let (w, h) = img.dims();
    let clamp = |v: isize, n: usize| v.clamp(0, n as isize - 1) as usize;

    let mut horizontal = Plane::zeros(w, h);
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (k, weight) in kernel.iter().enumerate() {
                let sx = clamp(x as isize + k as isize - radius, w);
                acc += weight * img.get(sx, y);
            }
            horizontal.set(x, y, acc);
        }
    }
    let mut out = Plane::zeros(w, h);
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (k, weight) in kernel.iter().enumerate() {
                let sy = clamp(y as isize + k as isize - radius, h);
                acc += weight * horizontal.get(x, sy);
            }
            out.set(x, y, acc);
        }
    }
    Ok(out)
}

fn validate_scales(scales: &[f64], weights: &[f64]) -> Result<()> {
    if scales.is_empty() {
        return Err(Error::param("retinex needs at least one scale"));
    }
    if scales.len() != weights.len() {
        return Err(Error::param(format!(
            "{} retinex scales but {} weights",
            scales.len(),
            weights.len()
        )));
    }
    if scales.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::param("retinex scales must be strictly increasing"));
    }
    if weights.iter().any(|w| w.is_nan() || *w < 0.0) {
        return Err(Error::param("retinex weights must be non-negative"));
    }
    let sum: f64 = weights.iter().sum();
    if (sum - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
        return Err(Error::param(format!("retinex weights sum to {sum}, expected 1")));
    }
    Ok(())
}

/// Weighted sum of log-domain Gaussian blurs, min-max normalized to `[0, 1]`.
///
/// A zero-range combination (constant input) yields a map filled with the
/// input's mean luminance.
pub fn retinex_illumination(appearance: &GrayImage, scales: &[f64], weights: &[f64]) -> Result<IlluminationMap> {
    validate_scales(scales, weights)?;
    let plane = appearance.to_plane();
    let (w, h) = plane.dims();
    let mut combined = Plane::zeros(w, h);
    for (&sigma, &weight) in scales.iter().zip(weights) {
        if weight == 0.0 {
            continue;
        }
        let blurred = gaussian_blur(&plane, sigma)?;
        for (acc, v) in combined.data_mut().iter_mut().zip(blurred.data()) {
            *acc += weight * (v + LOG_EPSILON).ln();
        }
    }

    let (lo, hi) = combined
        .data()
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    let image = if hi > lo {
        let range = hi - lo;
        GrayImage::from_plane_clamped(&Plane::new(
            w,
            h,
            combined.data().iter().map(|v| (v - lo) / range).collect(),
        )?)
    } else {
        GrayImage::filled(w, h, appearance.mean())
    };
    Ok(IlluminationMap {
        image,
        scales: scales.to_vec(),
        weights: weights.to_vec(),
    })
}

/// Mean and population variance of the illumination map (two-pass).
pub fn brightness_analysis(illum: &IlluminationMap) -> BrightnessStats {
    let data = illum.image.data();
    let n = data.len() as f64;
    let l_mean = data.iter().sum::<f64>() / n;
    let sigma2 = data.iter().map(|v| (v - l_mean).powi(2)).sum::<f64>() / n;
    BrightnessStats {
        l_mean,
        l_mean_255: l_mean * 255.0,
        sigma2,
    }
}
