use crate::error::{Error, Result};
use crate::raster::RgbImage;

use super::glcm::quantize;

/// Normalized joint RGB histogram with `bins^3` cells, indexed `(r * bins + g) * bins + b`.
pub fn joint_histogram(img: &RgbImage, bins: usize) -> Result<Vec<f64>> {
    if bins == 0 {
        return Err(Error::param("histogram needs at least one bin per channel"));
    }
    if img.data().is_empty() {
        return Err(Error::EmptyImage);
    }
    let mut hist = vec![0.0; bins * bins * bins];
    for px in img.data() {
        let [r, g, b] = px.map(|v| quantize(v, bins));
        hist[(r * bins + g) * bins + b] += 1.0;
    }
    let total = img.data().len() as f64;
    for h in &mut hist {
        *h /= total;
    }
    Ok(hist)
}

/// Total-variation distance between joint color histograms, in `[0, 1]`.
pub fn color_hist_loss(a: &RgbImage, b: &RgbImage, bins: usize) -> Result<f64> {
    let ha = joint_histogram(a, bins)?;
    let hb = joint_histogram(b, bins)?;
    let tv = 0.5 * ha.iter().zip(&hb).map(|(x, y)| (x - y).abs()).sum::<f64>();
    Ok(tv.clamp(0.0, 1.0))
}
