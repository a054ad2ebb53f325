//! Foreground mask extraction and the single/double line layers.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::raster::{BinaryMask, GrayImage};

use super::morphology::{binary_close, binary_erode, gray_dilate, gray_erode, Footprint, StructuringElement};

/// Region enclosed by the outermost drawn contour.
///
/// Ink (`luminance < ink_threshold`) is closed with a 3x3 square, the
/// background is flood-filled from every border pixel, and the largest
/// 8-connected component of what remains is kept.
pub fn extract_mask(drawing: &GrayImage, ink_threshold: f64) -> Result<BinaryMask> {
    if !(0.0..=1.0).contains(&ink_threshold) {
        return Err(Error::param(format!("ink threshold {ink_threshold} outside [0, 1]")));
    }
    let (w, h) = drawing.dims();
    let ink = BinaryMask::from_fn(w, h, |x, y| drawing.get(x, y) < ink_threshold);
    let closed = binary_close(&ink, &StructuringElement::default().footprint());

    let mut reached = vec![false; w * h];
    let mut queue = VecDeque::new();
    for y in 0..h {
        for x in 0..w {
            let on_border = x == 0 || y == 0 || x + 1 == w || y + 1 == h;
            if on_border && !closed.get(x, y) && !reached[y * w + x] {
                reached[y * w + x] = true;
                queue.push_back((x, y));
            }
        }
    }
    while let Some((x, y)) = queue.pop_front() {
        for (nx, ny) in neighbors4(x, y, w, h) {
            let i = ny * w + nx;
            if !reached[i] && !closed.get(nx, ny) {
                reached[i] = true;
                queue.push_back((nx, ny));
            }
        }
    }

    let foreground = BinaryMask::new(w, h, reached.iter().map(|r| !r).collect())?;
    let largest = largest_component(&foreground);
    if largest.is_empty() {
        return Err(Error::EmptyMask);
    }
    Ok(largest)
}

fn neighbors4(x: usize, y: usize, w: usize, h: usize) -> impl Iterator<Item = (usize, usize)> {
    let candidates = [(x.wrapping_sub(1), y), (x + 1, y), (x, y.wrapping_sub(1)), (x, y + 1)];
    candidates.into_iter().filter(move |&(nx, ny)| nx < w && ny < h)
}

fn neighbors8(x: usize, y: usize, w: usize, h: usize) -> impl Iterator<Item = (usize, usize)> {
    (-1isize..=1)
        .flat_map(|dy| (-1isize..=1).map(move |dx| (dx, dy)))
        .filter(|&(dx, dy)| dx != 0 || dy != 0)
        .filter_map(move |(dx, dy)| {
            let nx = x as isize + dx;
            let ny = y as isize + dy;
            (nx >= 0 && ny >= 0 && (nx as usize) < w && (ny as usize) < h).then_some((nx as usize, ny as usize))
        })
}

/// Largest 8-connected component; ties go to the component found first in
/// row-major order.
pub(crate) fn largest_component(mask: &BinaryMask) -> BinaryMask {
    let (w, h) = mask.dims();
    let mut label = vec![0u32; w * h];
    let mut best: (u32, usize) = (0, 0);
    let mut next = 1u32;
    let mut stack = Vec::new();
    for y in 0..h {
        for x in 0..w {
            if !mask.get(x, y) || label[y * w + x] != 0 {
                continue;
            }
            let mut size = 0;
            label[y * w + x] = next;
            stack.push((x, y));
            while let Some((cx, cy)) = stack.pop() {
                size += 1;
                for (nx, ny) in neighbors8(cx, cy, w, h) {
                    let i = ny * w + nx;
                    if mask.get(nx, ny) && label[i] == 0 {
                        label[i] = next;
                        stack.push((nx, ny));
                    }
                }
            }
            if size > best.1 {
                best = (next, size);
            }
            next += 1;
        }
    }
    BinaryMask::from_fn(w, h, |x, y| best.0 != 0 && label[y * w + x] == best.0)
}

/// Emphasized strokes: morphological opening of the ink channel, returned
/// in the drawing's own dark-on-light polarity.
///
/// Computed as the dual closing on luminance (dilate then erode, frame read
/// as blank white), which selects input values without arithmetic and keeps
/// the operation exactly idempotent.
pub fn double_lines(drawing: &GrayImage, se: &StructuringElement) -> GrayImage {
    let fp = se.footprint();
    gray_erode(&gray_dilate(drawing, &fp, 1.0), &fp, 1.0)
}

/// Eroded foreground region plus its one-pixel boundary.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SingleLines {
    /// Eroded mask used for region division.
    pub region: BinaryMask,
    /// Drawable single-line layer: region pixels touching the outside.
    pub contour: BinaryMask,
}

pub fn single_lines(mask: &BinaryMask, se: &StructuringElement) -> Result<SingleLines> {
    let region = binary_erode(mask, &se.footprint(), false);
    if region.is_empty() {
        return Err(Error::MaskTooThin { radius: se.radius() });
    }
    let contour = boundary(&region);
    Ok(SingleLines { region, contour })
}

/// Foreground pixels with a 4-neighbour outside the set (the frame counts as outside).
pub(crate) fn boundary(mask: &BinaryMask) -> BinaryMask {
    let (w, h) = mask.dims();
    let plus = Footprint::from(&StructuringElement::disc(1).expect("radius 1"));
    let inner = binary_erode(mask, &plus, false);
    BinaryMask::from_fn(w, h, |x, y| mask.get(x, y) && !inner.get(x, y))
}
