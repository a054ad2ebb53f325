//! Flat erosion and dilation over square and disc structuring elements.
//!
//! Out-of-bounds pixels are ignored: erosion reads the frame as 1 and
//! dilation reads it as 0. This keeps the two operators exact duals under
//! complement.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{BinaryMask, GrayImage};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    Square,
    Disc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StructuringElement {
    shape: Shape,
    radius: usize,
}

impl StructuringElement {
    pub fn new(shape: Shape, radius: usize) -> Result<Self> {
        if radius == 0 {
            return Err(Error::param("structuring element radius must be >= 1"));
        }
        Ok(Self { shape, radius })
    }

    pub fn square(radius: usize) -> Result<Self> {
        Self::new(Shape::Square, radius)
    }

    pub fn disc(radius: usize) -> Result<Self> {
        Self::new(Shape::Disc, radius)
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    /// Kernel side length, always odd.
    pub fn side(&self) -> usize {
        2 * self.radius + 1
    }

    pub fn footprint(&self) -> Footprint {
        let r = self.radius as isize;
        let mut offsets = Vec::new();
        for dy in -r..=r {
            for dx in -r..=r {
                let inside = match self.shape {
                    Shape::Square => true,
                    Shape::Disc => dx * dx + dy * dy <= r * r,
                };
                if inside {
                    offsets.push((dx, dy));
                }
            }
        }
        Footprint { offsets }
    }
}

impl Default for StructuringElement {
    fn default() -> Self {
        Self {
            shape: Shape::Square,
            radius: 1,
        }
    }
}

impl std::fmt::Display for StructuringElement {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let shape = match self.shape {
            Shape::Square => "square",
            Shape::Disc => "disc",
        };
        write!(f, "{shape}:{}", self.radius)
    }
}

/// Set of `(dx, dy)` offsets a filter visits around each pixel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Footprint {
    offsets: Vec<(isize, isize)>,
}

impl Footprint {
    /// The single-pixel footprint; erosion and dilation with it are the identity.
    pub fn center() -> Self {
        Self { offsets: vec![(0, 0)] }
    }

    pub fn offsets(&self) -> &[(isize, isize)] {
        &self.offsets
    }
}

impl From<&StructuringElement> for Footprint {
    fn from(se: &StructuringElement) -> Self {
        se.footprint()
    }
}

fn rank_filter<V: Copy>(
    width: usize,
    height: usize,
    data: &[V],
    footprint: &Footprint,
    outside: V,
    combine: impl Fn(V, V) -> V,
) -> Vec<V> {
    let (w, h) = (width as isize, height as isize);
    let mut out = Vec::with_capacity(data.len());
    for y in 0..h {
        for x in 0..w {
            let mut acc: Option<V> = None;
            for &(dx, dy) in &footprint.offsets {
                let (sx, sy) = (x + dx, y + dy);
                let v = if sx < 0 || sy < 0 || sx >= w || sy >= h {
                    outside
                } else {
                    data[(sy * w + sx) as usize]
                };
                acc = Some(match acc {
                    None => v,
                    Some(a) => combine(a, v),
                });
            }
            out.push(acc.unwrap_or(outside));
        }
    }
    out
}

/// Images that support flat erosion and dilation.
pub trait Morphology: Sized {
    fn erode_with(&self, footprint: &Footprint) -> Self;
    fn dilate_with(&self, footprint: &Footprint) -> Self;
}

impl Morphology for BinaryMask {
    fn erode_with(&self, footprint: &Footprint) -> Self {
        binary_erode(self, footprint, true)
    }

    fn dilate_with(&self, footprint: &Footprint) -> Self {
        binary_dilate(self, footprint, false)
    }
}

impl Morphology for GrayImage {
    fn erode_with(&self, footprint: &Footprint) -> Self {
        gray_erode(self, footprint, 1.0)
    }

    fn dilate_with(&self, footprint: &Footprint) -> Self {
        gray_dilate(self, footprint, 0.0)
    }
}

pub fn erode<T: Morphology>(img: &T, se: &StructuringElement) -> T {
    img.erode_with(&se.footprint())
}

pub fn dilate<T: Morphology>(img: &T, se: &StructuringElement) -> T {
    img.dilate_with(&se.footprint())
}

pub(crate) fn binary_erode(mask: &BinaryMask, fp: &Footprint, outside: bool) -> BinaryMask {
    let data = rank_filter(mask.width(), mask.height(), mask.data(), fp, outside, |a, b| a && b);
    BinaryMask::new(mask.width(), mask.height(), data).expect("dims preserved")
}

pub(crate) fn binary_dilate(mask: &BinaryMask, fp: &Footprint, outside: bool) -> BinaryMask {
    let data = rank_filter(mask.width(), mask.height(), mask.data(), fp, outside, |a, b| a || b);
    BinaryMask::new(mask.width(), mask.height(), data).expect("dims preserved")
}

pub(crate) fn gray_erode(img: &GrayImage, fp: &Footprint, outside: f64) -> GrayImage {
    let data = rank_filter(img.width(), img.height(), img.data(), fp, outside, f64::min);
    GrayImage::new(img.width(), img.height(), data).expect("values selected from input")
}

pub(crate) fn gray_dilate(img: &GrayImage, fp: &Footprint, outside: f64) -> GrayImage {
    let data = rank_filter(img.width(), img.height(), img.data(), fp, outside, f64::max);
    GrayImage::new(img.width(), img.height(), data).expect("values selected from input")
}

/// Closing as on an unbounded empty plane: pad by the footprint reach, close,
/// crop back. Extensive, and ink near the border does not bleed into it.
pub(crate) fn binary_close(mask: &BinaryMask, fp: &Footprint) -> BinaryMask {
    let pad = fp
        .offsets()
        .iter()
        .map(|&(dx, dy)| dx.unsigned_abs().max(dy.unsigned_abs()))
        .max()
        .unwrap_or(0);
    let (w, h) = (mask.width(), mask.height());
    let padded = BinaryMask::from_fn(w + 2 * pad, h + 2 * pad, |x, y| {
        x >= pad && y >= pad && x < w + pad && y < h + pad && mask.get(x - pad, y - pad)
    });
    let closed = binary_erode(&binary_dilate(&padded, fp, false), fp, false);
    BinaryMask::from_fn(w, h, |x, y| closed.get(x + pad, y + pad))
}
