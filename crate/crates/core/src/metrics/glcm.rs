//! Gray-level co-occurrence matrices and scalar texture statistics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::GrayImage;

/// Right, down, down-right and up-right neighbours.
pub const DEFAULT_OFFSETS: [(isize, isize); 4] = [(1, 0), (0, 1), (1, 1), (1, -1)];

#[derive(Debug, Clone, PartialEq)]
pub struct GlcmMatrix {
    levels: usize,
    /// Row-major `levels x levels`; raw counts or probabilities.
    counts: Vec<f64>,
    offsets: Vec<(isize, isize)>,
    symmetric: bool,
    normalized: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GlcmStatistic {
    /// `sum p(i,j) (i-j)^2`
    #[default]
    Contrast,
    /// `sum p(i,j) / (1 + (i-j)^2)`
    Homogeneity,
    /// `sqrt(sum p(i,j)^2)`
    Energy,
}

impl GlcmMatrix {
    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn offsets(&self) -> &[(isize, isize)] {
        &self.offsets
    }

    pub fn symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn counts(&self) -> &[f64] {
        &self.counts
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.counts[i * self.levels + j]
    }

    pub fn total(&self) -> f64 {
        self.counts.iter().sum()
    }

    pub fn normalized(&self) -> Self {
        let total = self.total();
        let counts = if total > 0.0 {
            self.counts.iter().map(|c| c / total).collect()
        } else {
            self.counts.clone()
        };
        Self {
            counts,
            normalized: true,
            ..self.clone()
        }
    }

    pub fn statistic(&self, stat: GlcmStatistic) -> f64 {
        let p = if self.normalized {
            self.clone()
        } else {
            self.normalized()
        };
        let n = self.levels;
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                let v = p.get(i, j);
                let d = i as f64 - j as f64;
                acc += match stat {
                    GlcmStatistic::Contrast => v * d * d,
                    GlcmStatistic::Homogeneity => v / (1.0 + d * d),
                    GlcmStatistic::Energy => v * v,
                };
            }
        }
        match stat {
            GlcmStatistic::Energy => acc.sqrt(),
            _ => acc,
        }
    }
}

/// Gray level of `v` among `levels` equal-width bins, 1.0 going to the top bin.
pub(crate) fn quantize(v: f64, levels: usize) -> usize {
    ((v * levels as f64).floor() as usize).min(levels - 1)
}

/// Raw co-occurrence counts. Pairs whose neighbour falls outside the image
/// are skipped; with `symmetric` each pair is also counted transposed.
pub fn glcm_counts(img: &GrayImage, levels: usize, offsets: &[(isize, isize)], symmetric: bool) -> Result<GlcmMatrix> {
    if levels < 2 {
        return Err(Error::param(format!("glcm needs at least 2 levels, got {levels}")));
    }
    if offsets.is_empty() {
        return Err(Error::param("glcm needs at least one offset"));
    }
    let (w, h) = (img.width() as isize, img.height() as isize);
    let q: Vec<usize> = img.data().iter().map(|&v| quantize(v, levels)).collect();
    let mut counts = vec![0.0; levels * levels];
    for &(dx, dy) in offsets {
        for y in 0..h {
            for x in 0..w {
                let (nx, ny) = (x + dx, y + dy);
                if nx < 0 || ny < 0 || nx >= w || ny >= h {
                    continue;
                }
                let i = q[(y * w + x) as usize];
                let j = q[(ny * w + nx) as usize];
                counts[i * levels + j] += 1.0;
                if symmetric {
                    counts[j * levels + i] += 1.0;
                }
            }
        }
    }
    Ok(GlcmMatrix {
        levels,
        counts,
        offsets: offsets.to_vec(),
        symmetric,
        normalized: false,
    })
}

/// Normalized co-occurrence matrix.
pub fn glcm(img: &GrayImage, levels: usize, offsets: &[(isize, isize)], symmetric: bool) -> Result<GlcmMatrix> {
    Ok(glcm_counts(img, levels, offsets, symmetric)?.normalized())
}

/// `|stat(a) - stat(b)|` for matrices built with identical parameters.
pub fn glcm_distance(a: &GlcmMatrix, b: &GlcmMatrix, stat: GlcmStatistic) -> Result<f64> {
    if a.levels != b.levels || a.offsets != b.offsets || a.symmetric != b.symmetric {
        return Err(Error::param(
            "glcm matrices built with different levels, offsets or symmetry",
        ));
    }
    Ok((a.statistic(stat) - b.statistic(stat)).abs())
}
