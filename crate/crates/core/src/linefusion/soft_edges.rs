use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{GrayImage, Plane};

use super::haar::haar_decompose;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SoftEdgePoint {
    pub x: usize,
    pub y: usize,
    pub magnitude: f64,
}

/// Sparse set of high-frequency wavelet responses.
///
/// Serializes as a bare JSON array of `{x, y, magnitude}`; dimensions and
/// depth travel separately (see `condition.json`).
#[derive(Debug, Clone, PartialEq)]
pub struct SoftEdgeMap {
    points: Vec<SoftEdgePoint>,
    width: usize,
    height: usize,
    levels: usize,
}

impl SoftEdgeMap {
    pub fn new(points: Vec<SoftEdgePoint>, (width, height): (usize, usize), levels: usize) -> Result<Self> {
        let mut seen = HashSet::with_capacity(points.len());
        for p in &points {
            if p.x >= width || p.y >= height {
                return Err(Error::param(format!(
                    "soft edge point ({}, {}) outside {width}x{height}",
                    p.x, p.y
                )));
            }
            if !(p.magnitude > 0.0 && p.magnitude <= 1.0) {
                return Err(Error::param(format!(
                    "soft edge magnitude {} outside (0, 1]",
                    p.magnitude
                )));
            }
            if !seen.insert((p.x, p.y)) {
                return Err(Error::param(format!("duplicate soft edge point ({}, {})", p.x, p.y)));
            }
        }
        Ok(Self {
            points,
            width,
            height,
            levels,
        })
    }

    pub fn points(&self) -> &[SoftEdgePoint] {
        &self.points
    }

    pub fn source_dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Paints the point set onto a black canvas of the source size.
    pub fn rasterize(&self) -> GrayImage {
        let mut data = vec![0.0; self.width * self.height];
        for p in &self.points {
            data[p.y * self.width + p.x] = p.magnitude;
        }
        GrayImage::new(self.width, self.height, data).expect("magnitudes validated")
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&self.points)?)
    }

    pub fn from_json(json: &str, dims: (usize, usize), levels: usize) -> Result<Self> {
        let points: Vec<SoftEdgePoint> = serde_json::from_str(json)?;
        Self::new(points, dims, levels)
    }
}

/// Per-pixel detail magnitude at source resolution, normalized by its maximum.
///
/// At each level the LH/HL/HH responses are combined by root-sum-square,
/// nearest-upsampled to the source grid, and the levels summed.
pub fn detail_magnitude(img: &GrayImage, levels: usize) -> Result<Plane> {
    let pyramid = haar_decompose(&img.to_plane(), levels)?;
    let (w, h) = img.dims();
    let mut mag = Plane::zeros(w, h);
    for (level, bands) in pyramid.details().iter().enumerate() {
        let shift = level + 1;
        for y in 0..h {
            for x in 0..w {
                let (i, j) = (x >> shift, y >> shift);
                let lh = bands.lh.get(i, j);
                let hl = bands.hl.get(i, j);
                let hh = bands.hh.get(i, j);
                let v = (lh * lh + hl * hl + hh * hh).sqrt();
                mag.set(x, y, mag.get(x, y) + v);
            }
        }
    }
    let max = mag.data().iter().copied().fold(0.0, f64::max);
    if max > 0.0 {
        for v in mag.data_mut() {
            *v /= max;
        }
    }
    Ok(mag)
}

/// Keeps the strongest `keep_fraction` of pixels (by count of all pixels,
/// rounded up) among those with nonzero detail magnitude.
///
/// Ties are broken by row-major position, so the retained set for a
/// smaller fraction is always a prefix of the set for a larger one.
pub fn soft_edges(g_initial: &GrayImage, levels: usize, keep_fraction: f64) -> Result<SoftEdgeMap> {
    if !(keep_fraction > 0.0 && keep_fraction <= 1.0) {
        return Err(Error::param(format!("keep_fraction {keep_fraction} outside (0, 1]")));
    }
    let mag = detail_magnitude(g_initial, levels)?;
    let (w, _) = mag.dims();
    let mut order: Vec<usize> = (0..mag.data().len()).filter(|&i| mag.data()[i] > 0.0).collect();
    order.sort_by(|&a, &b| mag.data()[b].total_cmp(&mag.data()[a]).then(a.cmp(&b)));
    let keep = ((keep_fraction * mag.data().len() as f64).ceil() as usize).min(order.len());
    let points = order[..keep]
        .iter()
        .map(|&i| SoftEdgePoint {
            x: i % w,
            y: i / w,
            magnitude: mag.data()[i],
        })
        .collect();
    SoftEdgeMap::new(points, mag.dims(), levels)
}
