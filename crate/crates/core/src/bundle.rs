//! The conditioning bundle: a directory of rasters and JSON sidecars that a
//! diffusion runner consumes, plus the validator that guards it.
//!
//! Layout:
//!
//! ```text
//! condition.png  condition.json
//! texture.png    texture.json
//! illumination.json  schedule.json
//! meta.json
//! ```
//!
//! `meta.json` carries the schema version, the content digest of every
//! other file, digests of the inputs, and the fully expanded config. Nothing
//! in a bundle depends on wall time or absolute paths, so identical inputs,
//! config and seed give bytewise-identical bundles.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use log::info;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::baselayer::{brightness_analysis, retinex_illumination, LatentMapping, NoiseSchedule, ScheduleSpec};
use crate::config::PipelineConfig;
use crate::digest::sha256_hex;
use crate::error::{Error, Result};
use crate::linefusion::{
    double_lines, extract_mask, fuse, single_lines, soft_edges, FusionWeights, Provenance, SoftEdgeMap,
    StructuringElement,
};
use crate::raster::{BinaryMask, GrayImage, RgbImage};
use crate::texsynth::{extract_patches, reassemble, remove_background, SamplingMode};

pub const SCHEMA_VERSION: u32 = 1;
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

pub const CONDITION_PNG: &str = "condition.png";
pub const CONDITION_JSON: &str = "condition.json";
pub const SOFT_EDGES_JSON: &str = "soft_edges.json";
pub const TEXTURE_PNG: &str = "texture.png";
pub const TEXTURE_JSON: &str = "texture.json";
pub const ILLUMINATION_JSON: &str = "illumination.json";
pub const SCHEDULE_JSON: &str = "schedule.json";
pub const META_JSON: &str = "meta.json";

/// Files covered by `meta.json`, in the order they are listed.
pub const BUNDLE_FILES: [&str; 6] = [
    CONDITION_PNG,
    CONDITION_JSON,
    TEXTURE_PNG,
    TEXTURE_JSON,
    ILLUMINATION_JSON,
    SCHEDULE_JSON,
];

/// Two-pass staging: soft edges need a first-pass generation that happens
/// outside this crate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BundleState {
    AwaitingInitialPass,
    Complete,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConditionSidecar {
    pub width: usize,
    pub height: usize,
    pub state: BundleState,
    pub weights: FusionWeights,
    pub provenance: Provenance,
    pub structuring_element: StructuringElement,
    pub ink_threshold: f64,
    /// Soft-edge settings; absent until the initial pass exists.
    pub haar_levels: Option<usize>,
    pub keep_fraction: Option<f64>,
    pub soft_edge_count: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TextureSidecar {
    pub width: usize,
    pub height: usize,
    pub seed: u64,
    pub patch_size: usize,
    pub source_patch_count: usize,
    pub mode: SamplingMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatentMappingRecord {
    pub formula: String,
    pub scale: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IlluminationRecord {
    pub l_mean: f64,
    pub l_mean_255: f64,
    /// `l_mean` pushed through `latent_mapping`.
    pub l_mean_latent: f64,
    pub sigma2: f64,
    pub scales: Vec<f64>,
    pub weights: Vec<f64>,
    pub blend_factor: f64,
    pub latent_mapping: LatentMappingRecord,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileRecord {
    pub name: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Meta {
    pub version: u32,
    pub tool_version: String,
    pub state: BundleState,
    pub files: Vec<FileRecord>,
    /// Input role (`drawing`, `appearance`, `mask`, `initial`) to content digest.
    pub inputs: BTreeMap<String, String>,
    pub config: PipelineConfig,
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<()> {
    let path = dir.join(name);
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(&path, text).map_err(|e| Error::io(&path, e))
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Fuses the drawing's line layers into `condition.png` + `condition.json`.
///
/// Without `initial` the condition has two layers and the state is
/// `awaiting_initial_pass`; with it, soft edges are added, written to
/// `soft_edges.json`, and the state is `complete`.
pub fn write_condition(
    drawing: &GrayImage,
    initial: Option<&GrayImage>,
    cfg: &PipelineConfig,
    out: &Path,
) -> Result<ConditionSidecar> {
    ensure_dir(out)?;
    let lf = &cfg.linefusion;
    let se = lf.structuring_element;
    let mask = extract_mask(drawing, lf.ink_threshold)?;
    let double = double_lines(drawing, &se).inverted();
    let single = single_lines(&mask, &se)?.contour;
    let soft: Option<SoftEdgeMap> = initial
        .map(|g| {
            if g.dims() != drawing.dims() {
                return Err(Error::DimensionMismatch {
                    expected: drawing.dims(),
                    actual: g.dims(),
                });
            }
            soft_edges(g, lf.haar_levels, lf.keep_fraction)
        })
        .transpose()?;
    let condition = fuse(&double, &single, soft.as_ref(), lf.weights)?;
    condition.image.save(out.join(CONDITION_PNG))?;
    if let Some(map) = &soft {
        let path = out.join(SOFT_EDGES_JSON);
        fs::write(&path, map.to_json()?).map_err(|e| Error::io(&path, e))?;
    }
    let (width, height) = drawing.dims();
    let sidecar = ConditionSidecar {
        width,
        height,
        state: if soft.is_some() {
            BundleState::Complete
        } else {
            BundleState::AwaitingInitialPass
        },
        weights: condition.layer_weights,
        provenance: condition.provenance,
        structuring_element: se,
        ink_threshold: lf.ink_threshold,
        haar_levels: soft.as_ref().map(|_| lf.haar_levels),
        keep_fraction: soft.as_ref().map(|_| lf.keep_fraction),
        soft_edge_count: soft.as_ref().map(SoftEdgeMap::len),
    };
    write_json(out, CONDITION_JSON, &sidecar)?;
    Ok(sidecar)
}

/// Retinex statistics of the appearance luminance into `illumination.json`,
/// and the noise schedule into `schedule.json`.
pub fn write_illumination(appearance: &RgbImage, cfg: &PipelineConfig, out: &Path) -> Result<IlluminationRecord> {
    ensure_dir(out)?;
    let bl = &cfg.baselayer;
    let illum = retinex_illumination(&appearance.luminance(), &bl.retinex_scales, &bl.retinex_weights)?;
    let stats = brightness_analysis(&illum);
    let record = IlluminationRecord {
        l_mean: stats.l_mean,
        l_mean_255: stats.l_mean_255,
        l_mean_latent: bl.latent_mapping.to_latent(stats.l_mean),
        sigma2: stats.sigma2,
        scales: illum.scales,
        weights: illum.weights,
        blend_factor: bl.blend_factor,
        latent_mapping: LatentMappingRecord {
            formula: LatentMapping::FORMULA.to_string(),
            scale: bl.latent_mapping.scale,
        },
    };
    let schedule = NoiseSchedule::from_spec(&bl.schedule)?;
    write_json(out, ILLUMINATION_JSON, &record)?;
    write_json(out, SCHEDULE_JSON, &schedule.spec())?;
    Ok(record)
}

/// Background removal, patch extraction and seeded reassembly into
/// `texture.png` + `texture.json`.
pub fn write_texture(
    appearance: &RgbImage,
    mask: Option<&BinaryMask>,
    cfg: &PipelineConfig,
    out: &Path,
) -> Result<TextureSidecar> {
    ensure_dir(out)?;
    let ts = &cfg.texsynth;
    let app = remove_background(appearance, mask)?;
    let grid = extract_patches(&app, ts.patch_size)?;
    let tex = reassemble(&grid, ts.output_width, ts.output_height, cfg.seed, ts.mode)?;
    tex.image.save(out.join(TEXTURE_PNG))?;
    let sidecar = TextureSidecar {
        width: tex.image.width(),
        height: tex.image.height(),
        seed: tex.seed,
        patch_size: tex.patch_size,
        source_patch_count: tex.source_patch_count,
        mode: tex.mode,
    };
    write_json(out, TEXTURE_JSON, &sidecar)?;
    Ok(sidecar)
}

/// Paths of the raw inputs a bundle is built from.
#[derive(Debug, Clone)]
pub struct BundleInputs {
    pub drawing: PathBuf,
    pub appearance: PathBuf,
    pub mask: Option<PathBuf>,
    pub initial: Option<PathBuf>,
}

fn file_digest(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(sha256_hex(&bytes))
}

/// Runs every stage into `out`, writes `meta.json`, then validates the result.
pub fn build_bundle(inputs: &BundleInputs, cfg: &PipelineConfig, out: &Path) -> Result<Bundle> {
    cfg.validate()?;
    ensure_dir(out)?;
    let drawing = GrayImage::load(&inputs.drawing)?;
    let appearance = RgbImage::load(&inputs.appearance)?;
    let mask = inputs
        .mask
        .as_ref()
        .map(|p| GrayImage::load(p).map(|g| BinaryMask::threshold(&g, 0.5)))
        .transpose()?;
    let initial = inputs.initial.as_ref().map(GrayImage::load).transpose()?;

    let condition = write_condition(&drawing, initial.as_ref(), cfg, out)?;
    write_illumination(&appearance, cfg, out)?;
    write_texture(&appearance, mask.as_ref(), cfg, out)?;

    let mut input_digests = BTreeMap::new();
    input_digests.insert("drawing".to_string(), file_digest(&inputs.drawing)?);
    input_digests.insert("appearance".to_string(), file_digest(&inputs.appearance)?);
    if let Some(p) = &inputs.mask {
        input_digests.insert("mask".to_string(), file_digest(p)?);
    }
    if let Some(p) = &inputs.initial {
        input_digests.insert("initial".to_string(), file_digest(p)?);
    }
    let files = BUNDLE_FILES
        .iter()
        .map(|name| {
            Ok(FileRecord {
                name: name.to_string(),
                sha256: file_digest(&out.join(name))?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let meta = Meta {
        version: SCHEMA_VERSION,
        tool_version: TOOL_VERSION.to_string(),
        state: condition.state,
        files,
        inputs: input_digests,
        config: cfg.clone(),
    };
    write_json(out, META_JSON, &meta)?;
    info!("bundle written to {} ({:?})", out.display(), meta.state);
    Bundle::open(out)
}

/// A bundle that passed validation, with every sidecar parsed.
#[derive(Debug, Clone)]
pub struct Bundle {
    pub root: PathBuf,
    pub meta: Meta,
    pub condition: ConditionSidecar,
    pub texture: TextureSidecar,
    pub illumination: IlluminationRecord,
    pub schedule: ScheduleSpec,
}

fn parse_json<T: DeserializeOwned>(root: &Path, name: &str) -> Result<T> {
    let path = root.join(name);
    let text = fs::read_to_string(&path).map_err(|e| Error::validation(name, format!("unreadable: {e}")))?;
    serde_json::from_str(&text).map_err(|e| Error::validation(name, e.to_string()))
}

fn png_dims(root: &Path, name: &str) -> Result<(usize, usize)> {
    let img = image::open(root.join(name)).map_err(|e| Error::validation(name, format!("not a readable PNG: {e}")))?;
    Ok((img.width() as usize, img.height() as usize))
}

fn ensure(ok: bool, path: &str, reason: impl FnOnce() -> String) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::validation(path, reason()))
    }
}

fn unit(v: f64) -> bool {
    v.is_finite() && (0.0..=1.0).contains(&v)
}

impl Bundle {
    /// Validates the bundle at `root`. The error names the first failing
    /// schema path: a file name, or `file.field` for a semantic check.
    pub fn open(root: &Path) -> Result<Self> {
        let meta_path = root.join(META_JSON);
        ensure(meta_path.is_file(), META_JSON, || "missing".into())?;
        let meta: Meta = parse_json(root, META_JSON)?;
        ensure(meta.version == SCHEMA_VERSION, "meta.json.version", || {
            format!("unsupported schema version {}, expected {SCHEMA_VERSION}", meta.version)
        })?;
        meta.config
            .validate()
            .map_err(|e| Error::validation("meta.json.config", e.to_string()))?;
        let listed: Vec<&str> = meta.files.iter().map(|f| f.name.as_str()).collect();
        ensure(listed == BUNDLE_FILES, "meta.json.files", || {
            format!("expected {BUNDLE_FILES:?}, got {listed:?}")
        })?;

        for record in &meta.files {
            let name = record.name.as_str();
            let path = root.join(name);
            ensure(path.is_file(), name, || "missing".into())?;
            let actual = file_digest(&path)?;
            ensure(actual == record.sha256, name, || {
                format!("content hash {actual} does not match meta.json {}", record.sha256)
            })?;
        }

        let condition: ConditionSidecar = parse_json(root, CONDITION_JSON)?;
        let texture: TextureSidecar = parse_json(root, TEXTURE_JSON)?;
        let illumination: IlluminationRecord = parse_json(root, ILLUMINATION_JSON)?;
        let schedule: ScheduleSpec = parse_json(root, SCHEDULE_JSON)?;

        let cond_dims = png_dims(root, CONDITION_PNG)?;
        ensure(cond_dims == (condition.width, condition.height), CONDITION_PNG, || {
            format!("dims {cond_dims:?} disagree with condition.json")
        })?;
        ensure(condition.state == meta.state, "condition.json.state", || {
            "disagrees with meta.json.state".into()
        })?;
        let complete = condition.state == BundleState::Complete;
        ensure(
            complete == condition.provenance.soft.is_some()
                && complete == condition.haar_levels.is_some()
                && complete == condition.keep_fraction.is_some()
                && complete == condition.soft_edge_count.is_some(),
            "condition.json.provenance",
            || "soft-edge fields inconsistent with state".into(),
        )?;
        condition
            .weights
            .validate()
            .map_err(|e| Error::validation("condition.json.weights", e.to_string()))?;

        let tex_dims = png_dims(root, TEXTURE_PNG)?;
        ensure(tex_dims == (texture.width, texture.height), TEXTURE_PNG, || {
            format!("dims {tex_dims:?} disagree with texture.json")
        })?;
        ensure(
            texture.patch_size > 0
                && texture.width.is_multiple_of(texture.patch_size)
                && texture.height.is_multiple_of(texture.patch_size)
                && texture.source_patch_count > 0,
            "texture.json.patch_size",
            || "texture dims must be positive multiples of patch_size".into(),
        )?;

        let il = &illumination;
        ensure(unit(il.l_mean), "illumination.json.l_mean", || {
            format!("{} outside [0, 1]", il.l_mean)
        })?;
        ensure(
            (il.l_mean_255 - il.l_mean * 255.0).abs() < 1e-9,
            "illumination.json.l_mean_255",
            || "inconsistent with l_mean".into(),
        )?;
        ensure(
            il.sigma2.is_finite() && il.sigma2 >= 0.0,
            "illumination.json.sigma2",
            || "must be finite and non-negative".into(),
        )?;
        ensure(unit(il.blend_factor), "illumination.json.blend_factor", || {
            "outside [0, 1]".into()
        })?;
        ensure(
            il.scales.len() == il.weights.len() && !il.scales.is_empty(),
            "illumination.json.weights",
            || "one weight per scale required".into(),
        )?;
        let mapping = LatentMapping {
            scale: il.latent_mapping.scale,
        };
        ensure(
            il.latent_mapping.formula == LatentMapping::FORMULA
                && (mapping.to_latent(il.l_mean) - il.l_mean_latent).abs() < 1e-9,
            "illumination.json.latent_mapping",
            || "mapping does not reproduce l_mean_latent".into(),
        )?;
        NoiseSchedule::from_spec(&schedule).map_err(|e| Error::validation(SCHEDULE_JSON, e.to_string()))?;

        Ok(Self {
            root: root.to_path_buf(),
            meta,
            condition,
            texture,
            illumination,
            schedule,
        })
    }

    pub fn state(&self) -> BundleState {
        self.meta.state
    }

    pub fn condition_image(&self) -> Result<GrayImage> {
        GrayImage::load(self.root.join(CONDITION_PNG))
    }

    pub fn texture_image(&self) -> Result<RgbImage> {
        RgbImage::load(self.root.join(TEXTURE_PNG))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixture(dir: &Path) -> BundleInputs {
        let drawing = GrayImage::from_fn(48, 48, |x, y| {
            let on_square = (8..=40).contains(&x) && (8..=40).contains(&y) && (x == 8 || x == 40 || y == 8 || y == 40);
            let thick = (20..=23).contains(&x) && (12..=36).contains(&y);
            if on_square || thick {
                0.0
            } else {
                1.0
            }
        });
        let appearance = RgbImage::from_fn(64, 64, |x, y| {
            [x as f64 / 63.0, y as f64 / 63.0, ((x * y) % 7) as f64 / 6.0]
        });
        drawing.save(dir.join("drawing.png")).unwrap();
        appearance.save(dir.join("appearance.png")).unwrap();
        BundleInputs {
            drawing: dir.join("drawing.png"),
            appearance: dir.join("appearance.png"),
            mask: None,
            initial: None,
        }
    }

    fn small_config() -> PipelineConfig {
        let mut cfg = PipelineConfig::default();
        cfg.texsynth.patch_size = 16;
        cfg.texsynth.output_width = 64;
        cfg.texsynth.output_height = 64;
        cfg.baselayer.retinex_scales = vec![2.0, 8.0];
        cfg.baselayer.retinex_weights = vec![0.5, 0.5];
        cfg
    }

    #[test]
    fn happy_path_validates() {
        let dir = tempfile::tempdir().unwrap();
        let inputs = fixture(dir.path());
        let out = dir.path().join("bundle");
        let bundle = build_bundle(&inputs, &small_config(), &out).unwrap();
        assert_eq!(bundle.meta.files.len(), 6);
        assert_eq!(bundle.state(), BundleState::AwaitingInitialPass);
        assert_eq!(bundle.texture.source_patch_count, 16);
        assert!(!out.join(SOFT_EDGES_JSON).exists());
    }

    #[test]
    fn initial_pass_completes_bundle() {
        let dir = tempfile::tempdir().unwrap();
        let mut inputs = fixture(dir.path());
        let initial = GrayImage::from_fn(48, 48, |x, y| ((x / 6 + y / 6) % 2) as f64);
        initial.save(dir.path().join("initial.png")).unwrap();
        inputs.initial = Some(dir.path().join("initial.png"));
        let out = dir.path().join("bundle");
        let bundle = build_bundle(&inputs, &small_config(), &out).unwrap();
        assert_eq!(bundle.state(), BundleState::Complete);
        assert!(bundle.condition.provenance.soft.is_some());
        assert!(out.join(SOFT_EDGES_JSON).exists());
    }

    #[test]
    fn deleted_texture_is_named() {
        let dir = tempfile::tempdir().unwrap();
        let inputs = fixture(dir.path());
        let out = dir.path().join("bundle");
        build_bundle(&inputs, &small_config(), &out).unwrap();
        fs::remove_file(out.join(TEXTURE_PNG)).unwrap();
        match Bundle::open(&out) {
            Err(Error::Validation { path, .. }) => assert_eq!(path, TEXTURE_PNG),
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_version_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let inputs = fixture(dir.path());
        let out = dir.path().join("bundle");
        build_bundle(&inputs, &small_config(), &out).unwrap();
        let text = fs::read_to_string(out.join(META_JSON)).unwrap();
        fs::write(out.join(META_JSON), text.replace("\"version\": 1", "\"version\": 9")).unwrap();
        match Bundle::open(&out) {
            Err(Error::Validation { path, .. }) => assert_eq!(path, "meta.json.version"),
            other => panic!("expected validation error, got {other:?}"),
        }
    }
}
