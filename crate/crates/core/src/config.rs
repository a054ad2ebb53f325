//! Every tunable of the pipeline in one serializable tree.
//!
//! Configs are JSON. Missing keys take their defaults and unknown keys are
//! rejected. The fully expanded config is echoed into each bundle.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::baselayer::{LatentMapping, NoiseSchedule, ScheduleSpec};
use crate::curation::CurationParams;
use crate::error::{Error, Result};
use crate::linefusion::{FusionWeights, StructuringElement};
use crate::metrics::MetricParams;
use crate::texsynth::{SamplingMode, MIN_PATCH_SIZE};

/// Environment variable naming the config file used when `--config` is absent.
pub const CONFIG_ENV: &str = "LINEART_CONFIG";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LineFusionConfig {
    pub structuring_element: StructuringElement,
    pub ink_threshold: f64,
    pub haar_levels: usize,
    pub keep_fraction: f64,
    pub weights: FusionWeights,
}

impl Default for LineFusionConfig {
    fn default() -> Self {
        Self {
            structuring_element: StructuringElement::default(),
            ink_threshold: 0.5,
            haar_levels: 2,
            keep_fraction: 0.1,
            weights: FusionWeights::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BaseLayerConfig {
    pub retinex_scales: Vec<f64>,
    pub retinex_weights: Vec<f64>,
    pub blend_factor: f64,
    pub latent_mapping: LatentMapping,
    pub schedule: ScheduleSpec,
}

impl Default for BaseLayerConfig {
    fn default() -> Self {
        Self {
            retinex_scales: vec![15.0, 80.0, 250.0],
            retinex_weights: vec![1.0 / 3.0; 3],
            blend_factor: 0.5,
            latent_mapping: LatentMapping::default(),
            schedule: ScheduleSpec::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TexSynthConfig {
    pub patch_size: usize,
    pub output_width: usize,
    pub output_height: usize,
    pub mode: SamplingMode,
}

impl Default for TexSynthConfig {
    fn default() -> Self {
        Self {
            patch_size: 64,
            output_width: 512,
            output_height: 512,
            mode: SamplingMode::WithReplacement,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
#[derive(Default)]
pub struct PipelineConfig {
    pub seed: u64,
    pub linefusion: LineFusionConfig,
    pub baselayer: BaseLayerConfig,
    pub texsynth: TexSynthConfig,
    pub curation: CurationParams,
    pub metrics: MetricParams,
}

fn check(ok: bool, what: impl FnOnce() -> String) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::param(what()))
    }
}

impl PipelineConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Range checks that serde cannot express.
    pub fn validate(&self) -> Result<()> {
        let lf = &self.linefusion;
        StructuringElement::new(lf.structuring_element.shape(), lf.structuring_element.radius())?;
        check((0.0..=1.0).contains(&lf.ink_threshold), || {
            format!("linefusion.ink_threshold {} outside [0, 1]", lf.ink_threshold)
        })?;
        check(lf.haar_levels >= 1, || "linefusion.haar_levels must be >= 1".into())?;
        check(lf.keep_fraction > 0.0 && lf.keep_fraction <= 1.0, || {
            format!("linefusion.keep_fraction {} outside (0, 1]", lf.keep_fraction)
        })?;
        lf.weights.validate()?;

        let bl = &self.baselayer;
        check((0.0..=1.0).contains(&bl.blend_factor), || {
            format!("baselayer.blend_factor {} outside [0, 1]", bl.blend_factor)
        })?;
        check(
            bl.latent_mapping.scale.is_finite() && bl.latent_mapping.scale > 0.0,
            || "baselayer.latent_mapping.scale must be positive".into(),
        )?;
        NoiseSchedule::from_spec(&bl.schedule)?;
        crate::baselayer::retinex_illumination(
            &crate::raster::GrayImage::filled(1, 1, 0.5),
            &bl.retinex_scales,
            &bl.retinex_weights,
        )?;

        let ts = &self.texsynth;
        check(ts.patch_size >= MIN_PATCH_SIZE, || {
            format!("texsynth.patch_size must be >= {MIN_PATCH_SIZE}")
        })?;
        check(
            ts.output_width > 0
                && ts.output_height > 0
                && ts.output_width.is_multiple_of(ts.patch_size)
                && ts.output_height.is_multiple_of(ts.patch_size),
            || "texsynth output dims must be positive multiples of patch_size".into(),
        )?;

        let cu = &self.curation;
        check(cu.target_size > 0, || "curation.target_size must be positive".into())?;
        check(cu.margin_fraction >= 0.0, || {
            "curation.margin_fraction must be >= 0".into()
        })?;
        Ok(())
    }
}
