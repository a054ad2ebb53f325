//! Background-free, patch-reassembled texture reference.
//!
//! The appearance photo is cut on a non-overlapping grid, only fully valid
//! tiles are kept, and a new image is tiled from them with a seeded
//! generator. Every output block is a verbatim copy of some source tile.

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{BinaryMask, RgbImage};

/// Max RGB distance from the median border color for the fallback
/// background heuristic.
pub const BORDER_COLOR_TOLERANCE: f64 = 0.08;

pub const MIN_PATCH_SIZE: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct AppearanceImage {
    rgb: RgbImage,
    validity: BinaryMask,
}

impl AppearanceImage {
    pub fn rgb(&self) -> &RgbImage {
        &self.rgb
    }

    pub fn validity(&self) -> &BinaryMask {
        &self.validity
    }

    pub fn dims(&self) -> (usize, usize) {
        self.rgb.dims()
    }
}

/// Keeps only the material pixels of the appearance photo.
///
/// With a mask the validity is the mask itself. Without one, pixels
/// 4-connected to the frame whose color lies within
/// [`BORDER_COLOR_TOLERANCE`] of the per-channel median border color are
/// treated as background.
pub fn remove_background(photo: &RgbImage, mask: Option<&BinaryMask>) -> Result<AppearanceImage> {
    let validity = match mask {
        Some(m) => {
            if m.dims() != photo.dims() {
                return Err(Error::DimensionMismatch {
                    expected: photo.dims(),
                    actual: m.dims(),
                });
            }
            m.clone()
        }
        None => border_flood_validity(photo),
    };
    if validity.is_empty() {
        return Err(Error::EmptyMask);
    }
    let (w, h) = photo.dims();
    let rgb = RgbImage::from_fn(w, h, |x, y| if validity.get(x, y) { photo.get(x, y) } else { [0.0; 3] });
    Ok(AppearanceImage { rgb, validity })
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

fn border_flood_validity(photo: &RgbImage) -> BinaryMask {
    let (w, h) = photo.dims();
    let border: Vec<(usize, usize)> = (0..h)
        .flat_map(|y| (0..w).map(move |x| (x, y)))
        .filter(|&(x, y)| x == 0 || y == 0 || x + 1 == w || y + 1 == h)
        .collect();
    let mut reference = [0.0; 3];
    for (c, slot) in reference.iter_mut().enumerate() {
        let mut channel: Vec<f64> = border.iter().map(|&(x, y)| photo.get(x, y)[c]).collect();
        *slot = median(&mut channel);
    }
    let near = |x: usize, y: usize| {
        let p = photo.get(x, y);
        let d2: f64 = (0..3).map(|c| (p[c] - reference[c]).powi(2)).sum();
        d2.sqrt() <= BORDER_COLOR_TOLERANCE
    };

    let mut background = BinaryMask::filled(w, h, false);
    let mut queue = VecDeque::new();
    for &(x, y) in &border {
        if near(x, y) && !background.get(x, y) {
            background.set(x, y, true);
            queue.push_back((x, y));
        }
    }
    while let Some((x, y)) = queue.pop_front() {
        let candidates = [(x.wrapping_sub(1), y), (x + 1, y), (x, y.wrapping_sub(1)), (x, y + 1)];
        for (nx, ny) in candidates {
            if nx < w && ny < h && !background.get(nx, ny) && near(nx, ny) {
                background.set(nx, ny, true);
                queue.push_back((nx, ny));
            }
        }
    }
    background.complement()
}

/// One `patch_size x patch_size` RGB tile, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Patch {
    pub origin: (usize, usize),
    pub pixels: Vec<[f64; 3]>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PatchGrid {
    patch_size: usize,
    patches: Vec<Patch>,
}

impl PatchGrid {
    pub fn patch_size(&self) -> usize {
        self.patch_size
    }

    pub fn patches(&self) -> &[Patch] {
        &self.patches
    }

    pub fn len(&self) -> usize {
        self.patches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patches.is_empty()
    }
}

/// Tiles the image on a non-overlapping grid and keeps fully valid tiles.
/// Partial tiles at the right/bottom edge are dropped.
pub fn extract_patches(img: &AppearanceImage, patch_size: usize) -> Result<PatchGrid> {
    if patch_size < MIN_PATCH_SIZE {
        return Err(Error::param(format!(
            "patch size {patch_size} below minimum {MIN_PATCH_SIZE}"
        )));
    }
    let (w, h) = img.dims();
    let mut patches = Vec::new();
    for ty in 0..h / patch_size {
        for tx in 0..w / patch_size {
            let (ox, oy) = (tx * patch_size, ty * patch_size);
            let all_valid = (oy..oy + patch_size).all(|y| (ox..ox + patch_size).all(|x| img.validity.get(x, y)));
            if !all_valid {
                continue;
            }
            let pixels = (oy..oy + patch_size)
                .flat_map(|y| (ox..ox + patch_size).map(move |x| (x, y)))
                .map(|(x, y)| img.rgb.get(x, y))
                .collect();
            patches.push(Patch {
                origin: (ox, oy),
                pixels,
            });
        }
    }
    if patches.is_empty() {
        return Err(Error::RegionTooSmall { patch_size });
    }
    Ok(PatchGrid { patch_size, patches })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplingMode {
    /// Independent uniform draw per output cell.
    #[default]
    WithReplacement,
    /// Successive seeded permutations of the source patches.
    WithoutReplacement,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TextureReference {
    pub image: RgbImage,
    pub seed: u64,
    pub patch_size: usize,
    pub source_patch_count: usize,
    pub mode: SamplingMode,
}

// Index draws go through u64 so the sequence does not depend on usize width.
fn draw_index(rng: &mut ChaCha8Rng, n: usize) -> usize {
    rng.random_range(0..n as u64) as usize
}

fn shuffled(rng: &mut ChaCha8Rng, n: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = draw_index(rng, i + 1);
        order.swap(i, j);
    }
    order
}

/// Fills a `target_w x target_h` canvas cell by cell (row-major) with
/// source patches chosen by a ChaCha8 generator seeded with `seed`.
pub fn reassemble(
    grid: &PatchGrid,
    target_w: usize,
    target_h: usize,
    seed: u64,
    mode: SamplingMode,
) -> Result<TextureReference> {
    let ps = grid.patch_size;
    if grid.is_empty() {
        return Err(Error::param("no source patches to reassemble"));
    }
    if target_w == 0 || target_h == 0 || !target_w.is_multiple_of(ps) || !target_h.is_multiple_of(ps) {
        return Err(Error::param(format!(
            "target {target_w}x{target_h} is not a positive multiple of patch size {ps}"
        )));
    }
    let (cols, rows) = (target_w / ps, target_h / ps);
    let n = grid.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let choices: Vec<usize> = match mode {
        SamplingMode::WithReplacement => (0..cols * rows).map(|_| draw_index(&mut rng, n)).collect(),
        SamplingMode::WithoutReplacement => {
            let mut out = Vec::with_capacity(cols * rows);
            while out.len() < cols * rows {
                out.extend(shuffled(&mut rng, n));
            }
            out.truncate(cols * rows);
            out
        }
    };

    let mut image = RgbImage::filled(target_w, target_h, [0.0; 3]);
    for (cell, &idx) in choices.iter().enumerate() {
        let (cx, cy) = ((cell % cols) * ps, (cell / cols) * ps);
        let patch = &grid.patches[idx];
        for py in 0..ps {
            for px in 0..ps {
                image.set(cx + px, cy + py, patch.pixels[py * ps + px]);
            }
        }
    }
    Ok(TextureReference {
        image,
        seed,
        patch_size: ps,
        source_patch_count: n,
        mode,
    })
}
