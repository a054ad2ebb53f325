use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::GrayImage;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SsimParams {
    /// Side of the square mean window; clipped to the image size.
    pub window: usize,
    pub k1: f64,
    pub k2: f64,
    /// Dynamic range of the pixel values.
    pub dynamic_range: f64,
}

impl Default for SsimParams {
    fn default() -> Self {
        Self {
            window: 8,
            k1: 0.01,
            k2: 0.03,
            dynamic_range: 1.0,
        }
    }
}

impl SsimParams {
    pub fn c1(&self) -> f64 {
        (self.k1 * self.dynamic_range).powi(2)
    }

    pub fn c2(&self) -> f64 {
        (self.k2 * self.dynamic_range).powi(2)
    }
}

fn same_dims(a: &GrayImage, b: &GrayImage) -> Result<()> {
    if a.dims() != b.dims() {
        return Err(Error::DimensionMismatch {
            expected: a.dims(),
            actual: b.dims(),
        });
    }
    Ok(())
}

/// Mean SSIM over every `window x window` position (stride 1, uniform weights).
pub fn ssim(a: &GrayImage, b: &GrayImage, params: &SsimParams) -> Result<f64> {
    same_dims(a, b)?;
    if params.window == 0 {
        return Err(Error::param("ssim window must be positive"));
    }
    let (w, h) = a.dims();
    let (ww, wh) = (params.window.min(w), params.window.min(h));
    let n = (ww * wh) as f64;
    let (c1, c2) = (params.c1(), params.c2());

    let mut total = 0.0;
    let mut windows = 0usize;
    for oy in 0..=h - wh {
        for ox in 0..=w - ww {
            let cells = || (oy..oy + wh).flat_map(move |y| (ox..ox + ww).map(move |x| (x, y)));
            let mut mu_a = 0.0;
            let mut mu_b = 0.0;
            for (x, y) in cells() {
                mu_a += a.get(x, y);
                mu_b += b.get(x, y);
            }
            mu_a /= n;
            mu_b /= n;
            let mut var_a = 0.0;
            let mut var_b = 0.0;
            let mut cov = 0.0;
            for (x, y) in cells() {
                let da = a.get(x, y) - mu_a;
                let db = b.get(x, y) - mu_b;
                var_a += da * da;
                var_b += db * db;
                cov += da * db;
            }
            var_a /= n;
            var_b /= n;
            cov /= n;
            let num = (2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2);
            let den = (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2);
            total += num / den;
            windows += 1;
        }
    }
    Ok(total / windows as f64)
}

/// `10 log10(peak^2 / MSE)` in dB, capped at `cap_db` (returned as-is for MSE = 0).
pub fn psnr(a: &GrayImage, b: &GrayImage, peak: f64, cap_db: f64) -> Result<f64> {
    same_dims(a, b)?;
    if peak.is_nan() || peak <= 0.0 {
        return Err(Error::param("psnr peak must be positive"));
    }
    let mse = a.data().iter().zip(b.data()).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / a.data().len() as f64;
    if mse == 0.0 {
        return Ok(cap_db);
    }
    Ok((10.0 * (peak * peak / mse).log10()).min(cap_db))
}
