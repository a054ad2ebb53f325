//! Symmetric chamfer distance via an exact Euclidean distance transform.

use std::collections::HashSet;

use crate::error::{Error, Result};
use crate::raster::{BinaryMask, GrayImage, Plane};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgePointSet {
    points: Vec<(usize, usize)>,
    width: usize,
    height: usize,
}

impl EdgePointSet {
    pub fn new(points: Vec<(usize, usize)>, (width, height): (usize, usize)) -> Result<Self> {
        let mut seen = HashSet::with_capacity(points.len());
        for &(x, y) in &points {
            if x >= width || y >= height {
                return Err(Error::param(format!("edge point ({x}, {y}) outside {width}x{height}")));
            }
            if !seen.insert((x, y)) {
                return Err(Error::param(format!("duplicate edge point ({x}, {y})")));
            }
        }
        Ok(Self { points, width, height })
    }

    pub fn from_mask(mask: &BinaryMask) -> Self {
        let (w, h) = mask.dims();
        let points = (0..h)
            .flat_map(|y| (0..w).map(move |x| (x, y)))
            .filter(|&(x, y)| mask.get(x, y))
            .collect();
        Self {
            points,
            width: w,
            height: h,
        }
    }

    /// Pixels with value `>= threshold`.
    pub fn from_threshold(img: &GrayImage, threshold: f64) -> Self {
        Self::from_mask(&BinaryMask::threshold(img, threshold))
    }

    pub fn points(&self) -> &[(usize, usize)] {
        &self.points
    }

    pub fn source_dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

// Lower envelope of parabolas (Felzenszwalb & Huttenlocher), in place on
// `f`. Infinite entries are background and contribute no parabola.
fn edt_1d(f: &mut [f64], v: &mut [usize], z: &mut [f64], d: &mut [f64]) {
    let n = f.len();
    let sq = |q: usize| (q * q) as f64;
    let mut k: Option<usize> = None;
    for q in 0..n {
        if f[q].is_infinite() {
            continue;
        }
        let fq = f[q] + sq(q);
        loop {
            match k {
                None => {
                    k = Some(0);
                    v[0] = q;
                    z[0] = f64::NEG_INFINITY;
                    z[1] = f64::INFINITY;
                    break;
                }
                Some(j) => {
                    let p = v[j];
                    let s = (fq - (f[p] + sq(p))) / (2.0 * (q - p) as f64);
                    if s <= z[j] {
                        k = j.checked_sub(1);
                        continue;
                    }
                    v[j + 1] = q;
                    z[j + 1] = s;
                    z[j + 2] = f64::INFINITY;
                    k = Some(j + 1);
                    break;
                }
            }
        }
    }
    if k.is_none() {
        return;
    }
    let mut j = 0usize;
    for (q, out) in d.iter_mut().enumerate().take(n) {
        while z[j + 1] < q as f64 {
            j += 1;
        }
        let diff = q as f64 - v[j] as f64;
        *out = diff * diff + f[v[j]];
    }
    f.copy_from_slice(&d[..n]);
}

/// Squared Euclidean distance from every pixel to the nearest foreground
/// pixel. Infinite everywhere when the mask is empty.
pub fn squared_distance_transform(mask: &BinaryMask) -> Plane {
    let (w, h) = mask.dims();
    let n = w.max(h);
    let mut grid: Vec<f64> = mask
        .data()
        .iter()
        .map(|&m| if m { 0.0 } else { f64::INFINITY })
        .collect();
    let mut f = vec![0.0; n];
    let mut v = vec![0usize; n];
    let mut z = vec![0.0; n + 2];
    let mut d = vec![0.0; n];

    for x in 0..w {
        for y in 0..h {
            f[y] = grid[y * w + x];
        }
        edt_1d(&mut f[..h], &mut v, &mut z, &mut d);
        for y in 0..h {
            grid[y * w + x] = f[y];
        }
    }
    for y in 0..h {
        f[..w].copy_from_slice(&grid[y * w..(y + 1) * w]);
        edt_1d(&mut f[..w], &mut v, &mut z, &mut d);
        grid[y * w..(y + 1) * w].copy_from_slice(&f[..w]);
    }
    Plane::new(w, h, grid).expect("dims preserved")
}

fn mean_nearest(from: &EdgePointSet, to: &EdgePointSet, dims: (usize, usize)) -> f64 {
    let mut raster = BinaryMask::filled(dims.0, dims.1, false);
    for &(x, y) in to.points() {
        raster.set(x, y, true);
    }
    let dt = squared_distance_transform(&raster);
    from.points().iter().map(|&(x, y)| dt.get(x, y).sqrt()).sum::<f64>() / from.len() as f64
}

/// `0.5 * (mean_a nn(a, b) + mean_b nn(b, a))` in pixels.
pub fn chamfer(a: &EdgePointSet, b: &EdgePointSet) -> Result<f64> {
    if a.is_empty() {
        return Err(Error::EmptyPointSet(
            "chamfer distance needs a non-empty first edge set",
        ));
    }
    if b.is_empty() {
        return Err(Error::EmptyPointSet(
            "chamfer distance needs a non-empty second edge set",
        ));
    }
    let dims = (a.width.max(b.width), a.height.max(b.height));
    Ok(0.5 * (mean_nearest(a, b, dims) + mean_nearest(b, a, dims)))
}
