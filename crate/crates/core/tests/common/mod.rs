//! Independent oracles and seeded fixtures shared by the integration suites.
#![allow(dead_code)]

use std::collections::BTreeMap;

use lineart::{BinaryMask, GrayImage, RgbImage};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_mask(rng: &mut ChaCha8Rng, w: usize, h: usize, density: f64) -> BinaryMask {
    BinaryMask::from_fn(w, h, |_, _| rng.random_bool(density))
}

/// Values on the 8-bit lattice, so PNG round-trips are lossless.
pub fn random_gray(rng: &mut ChaCha8Rng, w: usize, h: usize) -> GrayImage {
    GrayImage::from_fn(w, h, |_, _| f64::from(rng.random::<u8>()) / 255.0)
}

pub fn random_continuous(rng: &mut ChaCha8Rng, w: usize, h: usize) -> GrayImage {
    GrayImage::from_fn(w, h, |_, _| rng.random::<f64>())
}

pub fn random_rgb(rng: &mut ChaCha8Rng, w: usize, h: usize) -> RgbImage {
    RgbImage::from_fn(w, h, |_, _| [0, 1, 2].map(|_| f64::from(rng.random::<u8>()) / 255.0))
}

/// Offsets of a square or disc window, enumerated independently of the crate.
pub fn window(radius: usize, disc: bool) -> Vec<(isize, isize)> {
    let r = radius as isize;
    let mut out = Vec::new();
    for dy in -r..=r {
        for dx in -r..=r {
            if !disc || dx * dx + dy * dy <= r * r {
                out.push((dx, dy));
            }
        }
    }
    out
}

fn in_bounds(w: usize, h: usize, x: isize, y: isize) -> Option<(usize, usize)> {
    (x >= 0 && y >= 0 && (x as usize) < w && (y as usize) < h).then_some((x as usize, y as usize))
}

/// Min over in-bounds window pixels.
pub fn brute_min(img: &GrayImage, win: &[(isize, isize)]) -> GrayImage {
    let (w, h) = img.dims();
    GrayImage::from_fn(w, h, |x, y| {
        win.iter()
            .filter_map(|&(dx, dy)| in_bounds(w, h, x as isize + dx, y as isize + dy))
            .map(|(sx, sy)| img.get(sx, sy))
            .fold(f64::INFINITY, f64::min)
    })
}

pub fn brute_max(img: &GrayImage, win: &[(isize, isize)]) -> GrayImage {
    let (w, h) = img.dims();
    GrayImage::from_fn(w, h, |x, y| {
        win.iter()
            .filter_map(|&(dx, dy)| in_bounds(w, h, x as isize + dx, y as isize + dy))
            .map(|(sx, sy)| img.get(sx, sy))
            .fold(f64::NEG_INFINITY, f64::max)
    })
}

pub fn brute_and(mask: &BinaryMask, win: &[(isize, isize)]) -> BinaryMask {
    let (w, h) = mask.dims();
    BinaryMask::from_fn(w, h, |x, y| {
        win.iter()
            .filter_map(|&(dx, dy)| in_bounds(w, h, x as isize + dx, y as isize + dy))
            .all(|(sx, sy)| mask.get(sx, sy))
    })
}

pub fn brute_or(mask: &BinaryMask, win: &[(isize, isize)]) -> BinaryMask {
    let (w, h) = mask.dims();
    BinaryMask::from_fn(w, h, |x, y| {
        win.iter()
            .filter_map(|&(dx, dy)| in_bounds(w, h, x as isize + dx, y as isize + dy))
            .any(|(sx, sy)| mask.get(sx, sy))
    })
}

/// SSIM from raw moments `E[x^2] - E[x]^2` over each window.
pub fn ssim_oracle(a: &GrayImage, b: &GrayImage, window: usize) -> f64 {
    let (w, h) = a.dims();
    let (ww, wh) = (window.min(w), window.min(h));
    let (c1, c2) = (0.01f64.powi(2), 0.03f64.powi(2));
    let mut scores = Vec::new();
    for oy in 0..=h - wh {
        for ox in 0..=w - ww {
            let (mut sa, mut sb, mut saa, mut sbb, mut sab) = (0.0, 0.0, 0.0, 0.0, 0.0);
            for y in oy..oy + wh {
                for x in ox..ox + ww {
                    let (p, q) = (a.get(x, y), b.get(x, y));
                    sa += p;
                    sb += q;
                    saa += p * p;
                    sbb += q * q;
                    sab += p * q;
                }
            }
            let n = (ww * wh) as f64;
            let (ma, mb) = (sa / n, sb / n);
            let va = saa / n - ma * ma;
            let vb = sbb / n - mb * mb;
            let cov = sab / n - ma * mb;
            scores.push(((2.0 * ma * mb + c1) * (2.0 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2)));
        }
    }
    scores.iter().sum::<f64>() / scores.len() as f64
}

pub fn psnr_oracle(a: &GrayImage, b: &GrayImage) -> f64 {
    let n = a.data().len() as f64;
    let mse: f64 = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(p, q)| (p - q) * (p - q))
        .sum::<f64>()
        / n;
    if mse == 0.0 {
        100.0
    } else {
        (-10.0 * mse.log10()).min(100.0)
    }
}

/// Quadratic nearest-neighbour chamfer.
pub fn chamfer_oracle(a: &[(usize, usize)], b: &[(usize, usize)]) -> f64 {
    let nn = |p: &(usize, usize), set: &[(usize, usize)]| {
        set.iter()
            .map(|q| {
                let dx = p.0 as f64 - q.0 as f64;
                let dy = p.1 as f64 - q.1 as f64;
                (dx * dx + dy * dy).sqrt()
            })
            .fold(f64::INFINITY, f64::min)
    };
    let ab = a.iter().map(|p| nn(p, b)).sum::<f64>() / a.len() as f64;
    let ba = b.iter().map(|p| nn(p, a)).sum::<f64>() / b.len() as f64;
    0.5 * (ab + ba)
}

/// Level of `v` among `levels` equal bins, computed by bin-edge search.
pub fn level_of(v: f64, levels: usize) -> usize {
    (1..levels).take_while(|&k| v >= k as f64 / levels as f64).count()
}

/// Co-occurrence counts by enumerating every ordered pixel pair.
pub fn glcm_oracle(img: &GrayImage, levels: usize, offsets: &[(isize, isize)], symmetric: bool) -> Vec<f64> {
    let (w, h) = img.dims();
    let mut m = vec![0.0; levels * levels];
    for &(dx, dy) in offsets {
        for y1 in 0..h {
            for x1 in 0..w {
                for y2 in 0..h {
                    for x2 in 0..w {
                        if x2 as isize - x1 as isize != dx || y2 as isize - y1 as isize != dy {
                            continue;
                        }
                        let i = level_of(img.get(x1, y1), levels);
                        let j = level_of(img.get(x2, y2), levels);
                        m[i * levels + j] += 1.0;
                        if symmetric {
                            m[j * levels + i] += 1.0;
                        }
                    }
                }
            }
        }
    }
    m
}

/// Joint color histogram keyed by bin triple.
pub fn hist_oracle(img: &RgbImage, bins: usize) -> BTreeMap<[usize; 3], f64> {
    let mut m = BTreeMap::new();
    for px in img.data() {
        *m.entry(px.map(|v| level_of(v, bins))).or_insert(0.0) += 1.0;
    }
    let n = img.data().len() as f64;
    m.values_mut().for_each(|v| *v /= n);
    m
}

pub fn ch_loss_oracle(a: &RgbImage, b: &RgbImage, bins: usize) -> f64 {
    let (ha, hb) = (hist_oracle(a, bins), hist_oracle(b, bins));
    let mut keys: Vec<_> = ha.keys().chain(hb.keys()).copied().collect();
    keys.sort();
    keys.dedup();
    0.5 * keys
        .iter()
        .map(|k| (ha.get(k).unwrap_or(&0.0) - hb.get(k).unwrap_or(&0.0)).abs())
        .sum::<f64>()
}

/// Direct 2-D Gaussian convolution with clamped borders and the same
/// `ceil(3 sigma)` truncation, normalized over the 2-D kernel.
pub fn gaussian_oracle(img: &GrayImage, sigma: f64) -> Vec<f64> {
    let (w, h) = img.dims();
    let r = (3.0 * sigma).ceil() as isize;
    let mut out = Vec::with_capacity(w * h);
    for y in 0..h as isize {
        for x in 0..w as isize {
            let (mut acc, mut norm) = (0.0, 0.0);
            for dy in -r..=r {
                for dx in -r..=r {
                    let k = (-((dx * dx + dy * dy) as f64) / (2.0 * sigma * sigma)).exp();
                    let sx = (x + dx).clamp(0, w as isize - 1) as usize;
                    let sy = (y + dy).clamp(0, h as isize - 1) as usize;
                    acc += k * img.get(sx, sy);
                    norm += k;
                }
            }
            out.push(acc / norm);
        }
    }
    out
}

/// Min-max normalized `ln(blur + 1e-4)` from the 2-D oracle.
pub fn single_scale_retinex_oracle(img: &GrayImage, sigma: f64) -> Vec<f64> {
    let logs: Vec<f64> = gaussian_oracle(img, sigma).iter().map(|v| (v + 1e-4).ln()).collect();
    let lo = logs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    logs.iter().map(|v| (v - lo) / (hi - lo)).collect()
}

/// Smooth multi-octave "photo" with full dynamic range and fine texture.
pub fn fixture_photo(seed: u64, w: usize, h: usize) -> GrayImage {
    let mut r = rng(seed);
    let waves: Vec<(f64, f64, f64, f64)> = (0..6)
        .map(|i| {
            let freq = 0.02 * (1 << i) as f64;
            (
                freq * r.random_range(0.5..1.5),
                freq * r.random_range(0.5..1.5),
                r.random_range(0.0..std::f64::consts::TAU),
                1.0 / (1 + i) as f64,
            )
        })
        .collect();
    let raw: Vec<f64> = (0..w * h)
        .map(|i| {
            let (x, y) = ((i % w) as f64, (i / w) as f64);
            let grain = r.random_range(-0.15..0.15);
            waves
                .iter()
                .map(|&(fx, fy, ph, a)| a * (fx * x + fy * y + ph).sin())
                .sum::<f64>()
                + grain
        })
        .collect();
    let lo = raw.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = raw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    GrayImage::from_fn(w, h, |x, y| (raw[y * w + x] - lo) / (hi - lo))
}

/// Dark-on-white outline rectangle.
pub fn outline(canvas: (usize, usize), x0: usize, y0: usize, x1: usize, y1: usize, stroke: usize) -> GrayImage {
    GrayImage::from_fn(canvas.0, canvas.1, |x, y| {
        let inside = (x0..=x1).contains(&x) && (y0..=y1).contains(&y);
        let near_edge = x < x0 + stroke || x + stroke > x1 || y < y0 + stroke || y + stroke > y1;
        if inside && near_edge {
            0.0
        } else {
            1.0
        }
    })
}

/// Drawing (outline plus a thick bar) and appearance photo written as PNGs
/// under `dir`.
pub fn bundle_inputs(dir: &std::path::Path) -> lineart::bundle::BundleInputs {
    let thin = outline((48, 48), 8, 8, 40, 40, 1);
    let drawing = GrayImage::from_fn(48, 48, |x, y| {
        if (20..=23).contains(&x) && (12..=36).contains(&y) {
            0.0
        } else {
            thin.get(x, y)
        }
    });
    let luma = fixture_photo(11, 64, 64);
    let appearance = RgbImage::from_fn(64, 64, |x, y| {
        let v = luma.get(x, y);
        [v, 0.8 * v + 0.1, 1.0 - 0.5 * v]
    });
    drawing.save(dir.join("drawing.png")).unwrap();
    appearance.save(dir.join("appearance.png")).unwrap();
    lineart::bundle::BundleInputs {
        drawing: dir.join("drawing.png"),
        appearance: dir.join("appearance.png"),
        mask: None,
        initial: None,
    }
}

/// First-pass stand-in: a blocky pattern with the drawing's dims.
pub fn initial_pass(dir: &std::path::Path) -> std::path::PathBuf {
    let path = dir.join("initial.png");
    GrayImage::from_fn(48, 48, |x, y| if (x / 6 + y / 6) % 2 == 0 { 0.2 } else { 0.9 })
        .save(&path)
        .unwrap();
    path
}

/// Defaults shrunk to fixture size.
pub fn small_config() -> lineart::config::PipelineConfig {
    let mut cfg = lineart::config::PipelineConfig {
        seed: 7,
        ..Default::default()
    };
    cfg.texsynth.patch_size = 16;
    cfg.texsynth.output_width = 64;
    cfg.texsynth.output_height = 64;
    cfg.baselayer.retinex_scales = vec![2.0, 8.0];
    cfg.baselayer.retinex_weights = vec![0.5, 0.5];
    cfg
}

/// File name to bytes for every regular file in `dir`.
pub fn dir_bytes(dir: &std::path::Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.is_file())
        .map(|p| {
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                std::fs::read(&p).unwrap(),
            )
        })
        .collect()
}

/// Schema path of a validation failure; panics on any other outcome.
pub fn failing_path<T: std::fmt::Debug>(result: lineart::Result<T>) -> String {
    match result {
        Err(lineart::Error::Validation { path, .. }) => path,
        other => panic!("expected a validation failure, got {other:?}"),
    }
}

/// Source blocks read straight from the photo at every fully valid grid cell.
pub fn source_blocks(photo: &RgbImage, valid: &BinaryMask, ps: usize) -> Vec<Vec<[u8; 3]>> {
    let (w, h) = photo.dims();
    let mut out = Vec::new();
    for oy in (0..h - h % ps).step_by(ps) {
        for ox in (0..w - w % ps).step_by(ps) {
            let cells: Vec<(usize, usize)> = (oy..oy + ps).flat_map(|y| (ox..ox + ps).map(move |x| (x, y))).collect();
            if cells.iter().all(|&(x, y)| valid.get(x, y)) {
                out.push(cells.iter().map(|&(x, y)| bytes(photo.get(x, y))).collect());
            }
        }
    }
    out
}

pub fn bytes(px: [f64; 3]) -> [u8; 3] {
    px.map(|v| (v * 255.0).round() as u8)
}

pub fn output_blocks(img: &RgbImage, ps: usize) -> Vec<Vec<[u8; 3]>> {
    let (w, h) = img.dims();
    let mut out = Vec::new();
    for oy in (0..h).step_by(ps) {
        for ox in (0..w).step_by(ps) {
            out.push(
                (oy..oy + ps)
                    .flat_map(|y| (ox..ox + ps).map(move |x| (x, y)))
                    .map(|(x, y)| bytes(img.get(x, y)))
                    .collect(),
            );
        }
    }
    out
}

pub fn blob_mask(seed: u64, w: usize, h: usize) -> BinaryMask {
    let cx = (seed % 7) as f64 + w as f64 / 2.0 - 3.0;
    let cy = (seed % 5) as f64 + h as f64 / 2.0 - 2.0;
    let r = w.min(h) as f64 * 0.45;
    BinaryMask::from_fn(w, h, |x, y| (x as f64 - cx).powi(2) + (y as f64 - cy).powi(2) <= r * r)
}
