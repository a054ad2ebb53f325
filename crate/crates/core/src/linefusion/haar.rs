//! Orthonormal 2-D Haar pyramid.
//!
//! Each level maps a 2x2 block `[[a, b], [c, d]]` to
//! `LL = (a+b+c+d)/2`, `LH = (a+b-c-d)/2`, `HL = (a-b+c-d)/2`,
//! `HH = (a-b-c+d)/2`. Odd dimensions are padded by replicating the last
//! row/column; the inverse crops the padding back off.

use crate::error::{Error, Result};
use crate::raster::Plane;

#[derive(Debug, Clone, PartialEq)]
pub struct DetailBands {
    /// Row difference (responds to horizontal edges).
    pub lh: Plane,
    /// Column difference (responds to vertical edges).
    pub hl: Plane,
    pub hh: Plane,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HaarPyramid {
    approx: Plane,
    /// Finest level first.
    details: Vec<DetailBands>,
    /// Unpadded input dims of each level, finest first.
    shapes: Vec<(usize, usize)>,
}

/// Deepest decomposition allowed for an image: `floor(log2(min(w, h)))`.
pub fn max_levels(width: usize, height: usize) -> usize {
    let m = width.min(height);
    if m == 0 {
        0
    } else {
        m.ilog2() as usize
    }
}

pub fn haar_decompose(img: &Plane, levels: usize) -> Result<HaarPyramid> {
    let max = max_levels(img.width(), img.height());
    if levels == 0 || levels > max {
        return Err(Error::param(format!(
            "haar levels {levels} outside 1..={max} for {}x{} input",
            img.width(),
            img.height()
        )));
    }
    let mut current = img.clone();
    let mut details = Vec::with_capacity(levels);
    let mut shapes = Vec::with_capacity(levels);
    for _ in 0..levels {
        shapes.push(current.dims());
        let (ll, bands) = forward_level(&current);
        details.push(bands);
        current = ll;
    }
    Ok(HaarPyramid {
        approx: current,
        details,
        shapes,
    })
}

fn forward_level(src: &Plane) -> (Plane, DetailBands) {
    let (w, h) = src.dims();
    let (hw, hh) = (w.div_ceil(2), h.div_ceil(2));
    let px = |x: usize, y: usize| src.get(x.min(w - 1), y.min(h - 1));
    let mut ll = Plane::zeros(hw, hh);
    let mut lh = Plane::zeros(hw, hh);
    let mut hl = Plane::zeros(hw, hh);
    let mut hh_band = Plane::zeros(hw, hh);
    for j in 0..hh {
        for i in 0..hw {
            let a = px(2 * i, 2 * j);
            let b = px(2 * i + 1, 2 * j);
            let c = px(2 * i, 2 * j + 1);
            let d = px(2 * i + 1, 2 * j + 1);
            ll.set(i, j, (a + b + c + d) * 0.5);
            lh.set(i, j, (a + b - c - d) * 0.5);
            hl.set(i, j, (a - b + c - d) * 0.5);
            hh_band.set(i, j, (a - b - c + d) * 0.5);
        }
    }
    (ll, DetailBands { lh, hl, hh: hh_band })
}

fn inverse_level(ll: &Plane, bands: &DetailBands, (w, h): (usize, usize)) -> Plane {
    let mut out = Plane::zeros(w, h);
    let mut put = |x: usize, y: usize, v: f64| {
        if x < w && y < h {
            out.set(x, y, v);
        }
    };
    for j in 0..ll.height() {
        for i in 0..ll.width() {
            let s = ll.get(i, j);
            let r = bands.lh.get(i, j);
            let c = bands.hl.get(i, j);
            let d = bands.hh.get(i, j);
            put(2 * i, 2 * j, (s + r + c + d) * 0.5);
            put(2 * i + 1, 2 * j, (s + r - c - d) * 0.5);
            put(2 * i, 2 * j + 1, (s - r + c - d) * 0.5);
            put(2 * i + 1, 2 * j + 1, (s - r - c + d) * 0.5);
        }
    }
    out
}

impl HaarPyramid {
    pub fn levels(&self) -> usize {
        self.details.len()
    }

    /// Coarsest approximation band.
    pub fn approx(&self) -> &Plane {
        &self.approx
    }

    /// Detail bands, finest level first.
    pub fn details(&self) -> &[DetailBands] {
        &self.details
    }

    pub fn source_dims(&self) -> (usize, usize) {
        self.shapes[0]
    }

    pub fn reconstruct(&self) -> Plane {
        let mut current = self.approx.clone();
        for (bands, &shape) in self.details.iter().zip(&self.shapes).rev() {
            current = inverse_level(&current, bands, shape);
        }
        current
    }

    /// Sum of squared detail coefficients over every level.
    pub fn detail_energy(&self) -> f64 {
        self.details
            .iter()
            .map(|b| b.lh.sum_of_squares() + b.hl.sum_of_squares() + b.hh.sum_of_squares())
            .sum()
    }

    /// Sum of squared coefficients over all bands.
    pub fn energy(&self) -> f64 {
        self.approx.sum_of_squares() + self.detail_energy()
    }
}
