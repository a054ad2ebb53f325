//! Dataset curation: complexity scoring, threshold filtering, and
//! mask/whiteout/crop preprocessing with an auditable JSON-lines manifest.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use flate2::write::DeflateEncoder;
use flate2::Compression;
use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linefusion::extract_mask;
use crate::raster::{BinaryMask, GrayImage};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreSource {
    ExternalFile,
    BuiltinProxy,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComplexityScore {
    pub value: f64,
    pub source: ScoreSource,
}

impl ComplexityScore {
    pub fn new(value: f64, source: ScoreSource) -> Result<Self> {
        if !(0.0..=1.0).contains(&value) {
            return Err(Error::param(format!("complexity score {value} outside [0, 1]")));
        }
        Ok(Self { value, source })
    }
}

/// Forward-difference step that counts as an edge in the proxy score.
const PROXY_EDGE_STEP: f64 = 0.1;

fn deflated_len(bytes: &[u8]) -> usize {
    let mut enc = DeflateEncoder::new(Vec::new(), Compression::best());
    enc.write_all(bytes).expect("in-memory write");
    enc.finish().expect("in-memory write").len()
}

/// Classical stand-in for a learned image-complexity score. Not equivalent
/// to the learned scores; use external score files for faithful thresholds.
///
/// `0.5 * edge_density + 0.5 * incompressibility`, where edge density is the
/// fraction of pixels with a forward difference above 0.1 and
/// incompressibility is `(c - c_flat) / (raw - c_flat)` for the deflate size
/// `c` of the 8-bit pixels against that of a flat white image of the same size.
pub fn complexity_proxy(img: &GrayImage) -> ComplexityScore {
    let (w, h) = img.dims();
    let mut edges = 0usize;
    for y in 0..h {
        for x in 0..w {
            let v = img.get(x, y);
            let right = x + 1 < w && (img.get(x + 1, y) - v).abs() > PROXY_EDGE_STEP;
            let down = y + 1 < h && (img.get(x, y + 1) - v).abs() > PROXY_EDGE_STEP;
            if right || down {
                edges += 1;
            }
        }
    }
    let edge_density = (edges as f64 / (w * h) as f64).clamp(0.0, 1.0);

    let bytes = img.to_u8();
    let raw = bytes.len();
    let flat = deflated_len(&vec![255u8; raw]);
    let packed = deflated_len(&bytes);
    let incompressibility = if raw > flat {
        ((packed as f64 - flat as f64) / (raw - flat) as f64).clamp(0.0, 1.0)
    } else {
        0.0
    };
    ComplexityScore {
        value: 0.5 * edge_density + 0.5 * incompressibility,
        source: ScoreSource::BuiltinProxy,
    }
}

/// Ordered `(id, score)` pairs as read from a `id,score` CSV.
pub type ScoreTable = Vec<(String, ComplexityScore)>;

pub fn load_scores(path: &Path) -> Result<ScoreTable> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let headers = rdr.headers()?.clone();
    if headers.len() != 2 || &headers[0] != "id" || &headers[1] != "score" {
        return Err(Error::MalformedScore {
            row: 1,
            reason: format!(
                "expected header `id,score`, got `{}`",
                headers.iter().collect::<Vec<_>>().join(",")
            ),
        });
    }
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let row = i + 2;
        let record = record.map_err(|e| Error::MalformedScore {
            row,
            reason: e.to_string(),
        })?;
        if record.len() != 2 {
            return Err(Error::MalformedScore {
                row,
                reason: format!("expected 2 fields, got {}", record.len()),
            });
        }
        let id = record[0].to_string();
        if id.is_empty() {
            return Err(Error::MalformedScore {
                row,
                reason: "empty id".into(),
            });
        }
        let value: f64 = record[1].parse().map_err(|_| Error::MalformedScore {
            row,
            reason: format!("score `{}` is not a number", &record[1]),
        })?;
        if !(0.0..=1.0).contains(&value) {
            return Err(Error::MalformedScore {
                row,
                reason: format!("score {value} outside [0, 1]"),
            });
        }
        if !seen.insert(id.clone()) {
            return Err(Error::MalformedScore {
                row,
                reason: format!("duplicate id `{id}`"),
            });
        }
        out.push((id, ComplexityScore::new(value, ScoreSource::ExternalFile)?));
    }
    Ok(out)
}

/// Inclusive score window `[lo, hi]` for one source dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurationRule {
    pub dataset_name: String,
    pub lo: f64,
    pub hi: f64,
}

impl CurationRule {
    pub fn new(dataset_name: impl Into<String>, lo: f64, hi: f64) -> Result<Self> {
        if !(0.0 <= lo && lo <= hi && hi <= 1.0) {
            return Err(Error::param(format!(
                "curation bounds must satisfy 0 <= lo <= hi <= 1, got {lo}..{hi}"
            )));
        }
        Ok(Self {
            dataset_name: dataset_name.into(),
            lo,
            hi,
        })
    }

    pub fn bronze() -> Self {
        Self::preset("bronze").expect("known preset")
    }

    /// Published per-dataset windows.
    pub fn preset(name: &str) -> Option<Self> {
        let (name, lo, hi) = match name.to_ascii_lowercase().as_str() {
            "bronze" => ("bronze", 0.2576, 0.2903),
            "differsketching" => ("differsketching", 0.0461, 0.2165),
            "imagenet-sketch" | "imagenet_sketch" => ("imagenet-sketch", 0.2500, 0.2650),
            "deeppatent" => ("deeppatent", 0.2715, 0.2790),
            _ => return None,
        };
        Some(Self {
            dataset_name: name.to_string(),
            lo,
            hi,
        })
    }

    /// Accepts a preset name or an explicit `lo,hi` pair.
    pub fn parse(spec: &str) -> Result<Self> {
        if let Some(rule) = Self::preset(spec) {
            return Ok(rule);
        }
        let (lo, hi) = spec
            .split_once(',')
            .ok_or_else(|| Error::param(format!("unknown curation rule `{spec}`")))?;
        let parse = |s: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::param(format!("bad bound `{s}` in rule `{spec}`")))
        };
        Self::new("custom", parse(lo)?, parse(hi)?)
    }

    pub fn contains(&self, value: f64) -> bool {
        self.lo <= value && value <= self.hi
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Partition {
    pub accepted: Vec<String>,
    pub rejected_low: Vec<String>,
    pub rejected_high: Vec<String>,
}

/// Splits ids by score against the closed interval of `rule`, keeping input order.
pub fn filter_by_threshold(scores: &[(String, ComplexityScore)], rule: &CurationRule) -> Partition {
    let mut p = Partition::default();
    for (id, score) in scores {
        if score.value < rule.lo {
            p.rejected_low.push(id.clone());
        } else if score.value > rule.hi {
            p.rejected_high.push(id.clone());
        } else {
            p.accepted.push(id.clone());
        }
    }
    p
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CropBox {
    pub x: usize,
    pub y: usize,
    pub w: usize,
    pub h: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CurationParams {
    pub target_size: usize,
    /// Per-side crop margin as a fraction of the mask bounding box.
    pub margin_fraction: f64,
    pub ink_threshold: f64,
}

impl Default for CurationParams {
    fn default() -> Self {
        Self {
            target_size: 512,
            margin_fraction: 0.05,
            ink_threshold: 0.5,
        }
    }
}

/// In-memory result of mask extraction, background whiteout and cropping.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedDrawing {
    pub mask: BinaryMask,
    pub crop_box: CropBox,
    /// Where the crop lands inside the letterboxed output.
    pub content_box: CropBox,
    pub image: GrayImage,
}

/// Source pixels overlapping the interval `[start, start + step)` with their
/// overlap lengths. Indices may fall outside the image.
fn coverage(start: f64, step: f64) -> Vec<(isize, f64)> {
    let end = start + step;
    let mut out = Vec::new();
    let mut k = start.floor() as isize;
    while (k as f64) < end {
        let overlap = (end.min(k as f64 + 1.0) - start.max(k as f64)).max(0.0);
        if overlap > 0.0 {
            out.push((k, overlap));
        }
        k += 1;
    }
    out
}

/// Mask extraction, background whiteout, margin crop and square resample.
///
/// The crop is the mask bounding box grown by `margin_fraction` of its size
/// on each side, squared about its center. That square is resampled to
/// `target_size` by exact area averaging, with white outside the image. A
/// fractional margin keeps the crop a fixed point of re-running, and area
/// averaging keeps thin strokes when shrinking. `crop_box` is the grown box
/// rounded to pixels and clamped to the image; `content_box` is the same box
/// in output coordinates.
pub fn prepare_drawing(img: &GrayImage, params: &CurationParams) -> Result<PreparedDrawing> {
    if params.target_size == 0 {
        return Err(Error::param("target size must be positive"));
    }
    let mask = extract_mask(img, params.ink_threshold)?;
    let (w, h) = img.dims();
    let (bx, by, bw, bh) = mask.bounding_box().ok_or(Error::EmptyMask)?;
    let f = params.margin_fraction;
    let x0 = bx as f64 - f * bw as f64;
    let y0 = by as f64 - f * bh as f64;
    let x1 = (bx + bw) as f64 + f * bw as f64;
    let y1 = (by + bh) as f64 + f * bh as f64;
    let clamp_round = |v: f64, hi: usize| (v.round().max(0.0) as usize).min(hi);
    let (cx0, cy0) = (clamp_round(x0, w), clamp_round(y0, h));
    let crop_box = CropBox {
        x: cx0,
        y: cy0,
        w: clamp_round(x1, w) - cx0,
        h: clamp_round(y1, h) - cy0,
    };

    let side = (x1 - x0).max(y1 - y0);
    let (sx0, sy0) = ((x0 + x1 - side) / 2.0, (y0 + y1 - side) / 2.0);
    let t = params.target_size;
    let step = side / t as f64;
    let cols: Vec<_> = (0..t).map(|i| coverage(sx0 + i as f64 * step, step)).collect();
    let rows: Vec<_> = (0..t).map(|j| coverage(sy0 + j as f64 * step, step)).collect();
    let source = |x: isize, y: isize| {
        if x < 0 || y < 0 || x as usize >= w || y as usize >= h || !mask.get(x as usize, y as usize) {
            1.0
        } else {
            img.get(x as usize, y as usize)
        }
    };
    let to_output = |v: f64| (v / step).round() as usize;
    let content_box = CropBox {
        x: to_output(x0 - sx0),
        y: to_output(y0 - sy0),
        w: to_output(x1 - x0),
        h: to_output(y1 - y0),
    };
    let area = step * step;
    let image = GrayImage::from_fn(t, t, |i, j| {
        let mut acc = 0.0;
        for &(sy, wy) in &rows[j] {
            for &(sx, wx) in &cols[i] {
                acc += wx * wy * source(sx, sy);
            }
        }
        acc / area
    });
    Ok(PreparedDrawing {
        mask,
        crop_box,
        content_box,
        image,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntryStatus {
    Accepted,
    RejectedLow,
    RejectedHigh,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    pub source_path: String,
    pub score: ComplexityScore,
    pub status: EntryStatus,
    /// Bound that excluded a rejected entry.
    #[serde(default)]
    pub excluded_by: Option<f64>,
    /// Failure reason for `failed` entries.
    #[serde(default)]
    pub reason: Option<String>,
    #[serde(default)]
    pub mask_path: Option<String>,
    #[serde(default)]
    pub crop_box: Option<CropBox>,
    #[serde(default)]
    pub output_path: Option<String>,
}

impl ManifestEntry {
    pub fn rejected(source_path: String, score: ComplexityScore, rule: &CurationRule) -> Self {
        let (status, bound) = if score.value < rule.lo {
            (EntryStatus::RejectedLow, rule.lo)
        } else {
            (EntryStatus::RejectedHigh, rule.hi)
        };
        Self {
            source_path,
            score,
            status,
            excluded_by: Some(bound),
            reason: None,
            mask_path: None,
            crop_box: None,
            output_path: None,
        }
    }

    pub fn failed(source_path: String, score: ComplexityScore, reason: String) -> Self {
        Self {
            source_path,
            score,
            status: EntryStatus::Failed,
            excluded_by: None,
            reason: Some(reason),
            mask_path: None,
            crop_box: None,
            output_path: None,
        }
    }
}

fn file_stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "image".into())
}

/// Runs mask extraction, whiteout and cropping on one drawing and writes
/// `masks/<stem>.png` and `images/<stem>.png` under `out_dir`. Failures are
/// recorded in the entry rather than returned.
pub fn preprocess(source: &Path, score: ComplexityScore, params: &CurationParams, out_dir: &Path) -> ManifestEntry {
    let source_path = source.to_string_lossy().into_owned();
    let run = || -> Result<ManifestEntry> {
        let img = GrayImage::load(source)?;
        let prepared = prepare_drawing(&img, params)?;
        let stem = file_stem(source);
        let mask_rel = format!("masks/{stem}.png");
        let out_rel = format!("images/{stem}.png");
        for sub in ["masks", "images"] {
            let dir = out_dir.join(sub);
            fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        }
        prepared.mask.save(out_dir.join(&mask_rel))?;
        prepared.image.save(out_dir.join(&out_rel))?;
        Ok(ManifestEntry {
            source_path: source_path.clone(),
            score,
            status: EntryStatus::Accepted,
            excluded_by: None,
            reason: None,
            mask_path: Some(mask_rel),
            crop_box: Some(prepared.crop_box),
            output_path: Some(out_rel),
        })
    };
    run().unwrap_or_else(|e| ManifestEntry::failed(source_path.clone(), score, e.to_string()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestSummary {
    pub rule: CurationRule,
    pub score_source: Option<ScoreSource>,
    pub total: usize,
    pub counts: BTreeMap<String, usize>,
}

fn status_key(s: EntryStatus) -> &'static str {
    match s {
        EntryStatus::Accepted => "accepted",
        EntryStatus::RejectedLow => "rejected_low",
        EntryStatus::RejectedHigh => "rejected_high",
        EntryStatus::Failed => "failed",
    }
}

pub fn summarize(entries: &[ManifestEntry], rule: &CurationRule) -> ManifestSummary {
    let mut counts: BTreeMap<String, usize> = [
        EntryStatus::Accepted,
        EntryStatus::RejectedLow,
        EntryStatus::RejectedHigh,
        EntryStatus::Failed,
    ]
    .into_iter()
    .map(|s| (status_key(s).to_string(), 0))
    .collect();
    for e in entries {
        *counts.entry(status_key(e.status).to_string()).or_default() += 1;
    }
    ManifestSummary {
        rule: rule.clone(),
        score_source: entries.first().map(|e| e.score.source),
        total: entries.len(),
        counts,
    }
}

/// Writes entries as JSON lines sorted by `source_path`.
pub fn write_manifest(entries: &[ManifestEntry], path: &Path, rule: &CurationRule) -> Result<ManifestSummary> {
    let mut sorted: Vec<&ManifestEntry> = entries.iter().collect();
    sorted.sort_by(|a, b| a.source_path.cmp(&b.source_path));
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    for e in sorted {
        serde_json::to_writer(&mut out, e)?;
        out.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))?;
    Ok(summarize(entries, rule))
}

pub fn read_manifest(path: &Path) -> Result<Vec<ManifestEntry>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut entries = Vec::new();
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        entries.push(serde_json::from_str(&line)?);
    }
    Ok(entries)
}

/// Where curation scores come from.
pub enum Scoring {
    External(ScoreTable),
    Proxy,
}

/// Scores, filters and preprocesses a batch of drawings.
///
/// External score ids are matched against input file names, then stems.
/// Ids without an image become `failed` entries; images without a score
/// are skipped with a warning. Entries come back sorted by `source_path`.
pub fn curate(
    inputs: &[PathBuf],
    scoring: Scoring,
    rule: &CurationRule,
    params: &CurationParams,
    out_dir: &Path,
) -> Result<Vec<ManifestEntry>> {
    let scored: Vec<(Option<PathBuf>, String, ComplexityScore)> = match scoring {
        Scoring::Proxy => inputs
            .par_iter()
            .map(|p| {
                let score = GrayImage::load(p).map(|img| complexity_proxy(&img));
                (p, score)
            })
            .collect::<Vec<_>>()
            .into_iter()
            .map(|(p, score)| {
                let score = score?;
                Ok((Some(p.clone()), p.to_string_lossy().into_owned(), score))
            })
            .collect::<Result<_>>()?,
        Scoring::External(table) => {
            let mut used = HashSet::new();
            let mut rows = Vec::with_capacity(table.len());
            for (id, score) in table {
                let found = inputs
                    .iter()
                    .find(|p| p.file_name().is_some_and(|n| n.to_string_lossy() == id))
                    .or_else(|| inputs.iter().find(|p| file_stem(p) == id));
                if let Some(p) = found {
                    used.insert(p.clone());
                }
                let label = found.map_or(id.clone(), |p| p.to_string_lossy().into_owned());
                rows.push((found.cloned(), label, score));
            }
            for p in inputs.iter().filter(|p| !used.contains(*p)) {
                warn!("no score for {}, skipping", p.display());
            }
            rows
        }
    };

    let mut entries: Vec<ManifestEntry> = scored
        .par_iter()
        .map(|(path, label, score)| match path {
            None => ManifestEntry::failed(label.clone(), *score, "no image for id".into()),
            Some(_) if !rule.contains(score.value) => ManifestEntry::rejected(label.clone(), *score, rule),
            Some(p) => preprocess(p, *score, params, out_dir),
        })
        .collect();
    entries.sort_by(|a, b| a.source_path.cmp(&b.source_path));
    info!(
        "curated {} drawings, {} accepted",
        entries.len(),
        entries.iter().filter(|e| e.status == EntryStatus::Accepted).count()
    );
    Ok(entries)
}
