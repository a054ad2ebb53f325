use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linefusion::detail_magnitude;
use crate::raster::{GrayImage, Plane, RgbImage};

use super::chamfer::{chamfer, EdgePointSet};
use super::glcm::{glcm, glcm_distance, GlcmStatistic, DEFAULT_OFFSETS};
use super::histogram::color_hist_loss;
use super::pixel::{psnr, ssim, SsimParams};

/// Edge magnitude applied to the generated image before SSIM and chamfer.
///
/// Haar detail only sees steps that cross a block boundary at some level,
/// so an edge aligned with the dyadic grid can vanish; Sobel is shift-robust.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeOperator {
    #[default]
    Sobel,
    HaarDetail,
}

/// Every knob the metric suite uses; echoed verbatim into each report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MetricParams {
    pub ssim: SsimParams,
    pub psnr_peak: f64,
    pub psnr_cap_db: f64,
    pub glcm_levels: usize,
    pub glcm_offsets: Vec<(isize, isize)>,
    pub glcm_symmetric: bool,
    pub glcm_statistic: GlcmStatistic,
    pub hist_bins: usize,
    /// Binarization level for chamfer edge sets, applied to the condition
    /// and to the generated image's normalized edge magnitude.
    pub edge_threshold: f64,
    pub edge_operator: EdgeOperator,
    /// Decomposition depth for [`EdgeOperator::HaarDetail`].
    pub edge_haar_levels: usize,
}

impl Default for MetricParams {
    fn default() -> Self {
        Self {
            ssim: SsimParams::default(),
            psnr_peak: 1.0,
            psnr_cap_db: 100.0,
            glcm_levels: 8,
            glcm_offsets: DEFAULT_OFFSETS.to_vec(),
            glcm_symmetric: true,
            glcm_statistic: GlcmStatistic::Contrast,
            hist_bins: 8,
            edge_threshold: 0.2,
            edge_operator: EdgeOperator::Sobel,
            edge_haar_levels: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricReport {
    pub id: String,
    pub ssim: f64,
    pub psnr_db: f64,
    /// True when `psnr_db` is the cap rather than a measured value.
    pub psnr_capped: bool,
    pub chamfer: f64,
    pub glcm_distance: f64,
    pub ch_loss: f64,
    /// Reserved for externally computed learned metrics.
    #[serde(default)]
    pub fid: Option<f64>,
    #[serde(default)]
    pub lpips: Option<f64>,
    #[serde(default)]
    pub clip_i: Option<f64>,
    pub parameters: MetricParams,
}

/// Sobel gradient magnitude with clamped borders, normalized by its maximum.
pub fn sobel_magnitude(img: &GrayImage) -> GrayImage {
    let (w, h) = img.dims();
    let at = |x: isize, y: isize| img.get(x.clamp(0, w as isize - 1) as usize, y.clamp(0, h as isize - 1) as usize);
    let mag = Plane::from_fn(w, h, |x, y| {
        let (x, y) = (x as isize, y as isize);
        let gx = at(x + 1, y - 1) + 2.0 * at(x + 1, y) + at(x + 1, y + 1)
            - at(x - 1, y - 1)
            - 2.0 * at(x - 1, y)
            - at(x - 1, y + 1);
        let gy = at(x - 1, y + 1) + 2.0 * at(x, y + 1) + at(x + 1, y + 1)
            - at(x - 1, y - 1)
            - 2.0 * at(x, y - 1)
            - at(x + 1, y - 1);
        gx.hypot(gy)
    });
    let max = mag.data().iter().copied().fold(0.0, f64::max);
    if max > 0.0 {
        GrayImage::from_fn(w, h, |x, y| mag.get(x, y) / max)
    } else {
        GrayImage::filled(w, h, 0.0)
    }
}

/// Scores one generated image.
///
/// Edge fidelity (SSIM, chamfer) compares the structural condition with
/// the generated image's Sobel magnitude; appearance metrics (PSNR, GLCM,
/// color histogram) compare the generated image with the appearance
/// reference, which must already share its dimensions.
pub fn evaluate_pair(
    id: &str,
    generated: &RgbImage,
    condition: &GrayImage,
    appearance: &RgbImage,
    params: &MetricParams,
) -> Result<MetricReport> {
    if condition.dims() != generated.dims() {
        return Err(Error::DimensionMismatch {
            expected: generated.dims(),
            actual: condition.dims(),
        });
    }
    let gen_luma = generated.luminance();
    let app_luma = appearance.luminance();
    let gen_edges = match params.edge_operator {
        EdgeOperator::Sobel => sobel_magnitude(&gen_luma),
        EdgeOperator::HaarDetail => {
            GrayImage::from_plane_clamped(&detail_magnitude(&gen_luma, params.edge_haar_levels)?)
        }
    };

    let ssim_score = ssim(condition, &gen_edges, &params.ssim)?;
    let chamfer_score = chamfer(
        &EdgePointSet::from_threshold(condition, params.edge_threshold),
        &EdgePointSet::from_threshold(&gen_edges, params.edge_threshold),
    )?;
    let psnr_db = psnr(&gen_luma, &app_luma, params.psnr_peak, params.psnr_cap_db)?;
    let ga = glcm(
        &gen_luma,
        params.glcm_levels,
        &params.glcm_offsets,
        params.glcm_symmetric,
    )?;
    let gb = glcm(
        &app_luma,
        params.glcm_levels,
        &params.glcm_offsets,
        params.glcm_symmetric,
    )?;
    let glcm_score = glcm_distance(&ga, &gb, params.glcm_statistic)?;
    let ch = color_hist_loss(generated, appearance, params.hist_bins)?;

    Ok(MetricReport {
        id: id.to_string(),
        ssim: ssim_score,
        psnr_db,
        psnr_capped: psnr_db >= params.psnr_cap_db,
        chamfer: chamfer_score,
        glcm_distance: glcm_score,
        ch_loss: ch,
        fid: None,
        lpips: None,
        clip_i: None,
        parameters: params.clone(),
    })
}

const CSV_HEADER: [&str; 21] = [
    "id",
    "ssim",
    "psnr_db",
    "chamfer",
    "glcm_distance",
    "ch_loss",
    "psnr_capped",
    "ssim_window",
    "ssim_k1",
    "ssim_k2",
    "ssim_dynamic_range",
    "psnr_peak",
    "psnr_cap_db",
    "glcm_levels",
    "glcm_offsets",
    "glcm_symmetric",
    "glcm_statistic",
    "hist_bins",
    "edge_threshold",
    "edge_operator",
    "edge_haar_levels",
];

fn enum_label<T: Serialize>(v: &T) -> Result<String> {
    Ok(serde_json::to_value(v)?.as_str().unwrap_or_default().to_string())
}

/// Aggregate CSV: one row per report, scores followed by every parameter.
pub fn write_csv(reports: &[MetricReport], path: &Path) -> Result<()> {
    let mut wtr = csv::Writer::from_path(path)?;
    wtr.write_record(CSV_HEADER)?;
    for r in reports {
        let p = &r.parameters;
        let offsets = p
            .glcm_offsets
            .iter()
            .map(|(dx, dy)| format!("{dx}:{dy}"))
            .collect::<Vec<_>>()
            .join(";");
        let statistic = enum_label(&p.glcm_statistic)?;
        let operator = enum_label(&p.edge_operator)?;
        wtr.write_record([
            r.id.clone(),
            r.ssim.to_string(),
            r.psnr_db.to_string(),
            r.chamfer.to_string(),
            r.glcm_distance.to_string(),
            r.ch_loss.to_string(),
            r.psnr_capped.to_string(),
            p.ssim.window.to_string(),
            p.ssim.k1.to_string(),
            p.ssim.k2.to_string(),
            p.ssim.dynamic_range.to_string(),
            p.psnr_peak.to_string(),
            p.psnr_cap_db.to_string(),
            p.glcm_levels.to_string(),
            offsets,
            p.glcm_symmetric.to_string(),
            statistic,
            p.hist_bins.to_string(),
            p.edge_threshold.to_string(),
            operator,
            p.edge_haar_levels.to_string(),
        ])?;
    }
    wtr.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}
