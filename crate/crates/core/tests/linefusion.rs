mod common;

use common::*;
use lineart::linefusion::{
    dilate, double_lines, erode, extract_mask, fuse, haar_decompose, max_levels, single_lines, soft_edges,
    FusionWeights, Shape, SoftEdgeMap, SoftEdgePoint, StructuringElement,
};
use lineart::{BinaryMask, Error, GrayImage, Plane};
use proptest::prelude::*;

fn se_strategy() -> impl Strategy<Value = StructuringElement> {
    (prop_oneof![Just(Shape::Square), Just(Shape::Disc)], 1usize..=3)
        .prop_map(|(shape, r)| StructuringElement::new(shape, r).unwrap())
}

proptest! {
    #[test]
    fn binary_morphology_matches_brute_force(seed: u64, w in 1usize..20, h in 1usize..20, se in se_strategy()) {
        let mask = random_mask(&mut rng(seed), w, h, 0.5);
        let win = window(se.radius(), se.shape() == Shape::Disc);
        prop_assert_eq!(erode(&mask, &se), brute_and(&mask, &win));
        prop_assert_eq!(dilate(&mask, &se), brute_or(&mask, &win));
    }

    #[test]
    fn gray_morphology_matches_brute_force(seed: u64, w in 1usize..20, h in 1usize..20, se in se_strategy()) {
        let img = random_continuous(&mut rng(seed), w, h);
        let win = window(se.radius(), se.shape() == Shape::Disc);
        prop_assert_eq!(erode(&img, &se), brute_min(&img, &win));
        prop_assert_eq!(dilate(&img, &se), brute_max(&img, &win));
    }

    #[test]
    fn dilation_is_dual_of_erosion(seed: u64, w in 1usize..24, h in 1usize..24, se in se_strategy(), density in 0.05f64..0.95) {
        let mask = random_mask(&mut rng(seed), w, h, density);
        prop_assert_eq!(dilate(&mask, &se), erode(&mask.complement(), &se).complement());
    }

    #[test]
    fn double_lines_is_idempotent(seed: u64, w in 1usize..24, h in 1usize..24, se in se_strategy()) {
        let img = random_gray(&mut rng(seed), w, h);
        let once = double_lines(&img, &se);
        prop_assert_eq!(double_lines(&once, &se), once);
    }

    #[test]
    fn double_lines_only_lightens(seed: u64, w in 1usize..24, h in 1usize..24) {
        let img = random_gray(&mut rng(seed), w, h);
        let out = double_lines(&img, &StructuringElement::default());
        for (o, i) in out.data().iter().zip(img.data()) {
            prop_assert!(o >= i);
        }
    }

    #[test]
    fn haar_reconstructs(seed: u64, w in 1usize..40, h in 1usize..40, level_pick in 0usize..8) {
        prop_assume!(max_levels(w, h) >= 1);
        let img = random_continuous(&mut rng(seed), w, h).to_plane();
        let levels = 1 + level_pick % max_levels(w, h);
        let pyr = haar_decompose(&img, levels).unwrap();
        let back = pyr.reconstruct();
        prop_assert_eq!(back.dims(), img.dims());
        for (a, b) in back.data().iter().zip(img.data()) {
            prop_assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn haar_preserves_energy_on_dyadic_tiles(seed: u64, tw in 1usize..6, th in 1usize..6, levels in 1usize..=3) {
        let (w, h) = (tw << levels, th << levels);
        let img = random_continuous(&mut rng(seed), w, h).to_plane();
        let pyr = haar_decompose(&img, levels).unwrap();
        prop_assert!((pyr.energy() - img.sum_of_squares()).abs() < 1e-9);
    }

    #[test]
    fn soft_edges_nest_as_fraction_grows(seed: u64, w in 2usize..32, h in 2usize..32, k1 in 0.01f64..1.0, k2 in 0.01f64..1.0) {
        let img = random_gray(&mut rng(seed), w, h);
        let (lo, hi) = if k1 <= k2 { (k1, k2) } else { (k2, k1) };
        let small = soft_edges(&img, 1, lo).unwrap();
        let large = soft_edges(&img, 1, hi).unwrap();
        prop_assert!(small.len() <= large.len());
        let big: std::collections::HashSet<_> = large.points().iter().map(|p| (p.x, p.y)).collect();
        for p in small.points() {
            prop_assert!(big.contains(&(p.x, p.y)));
        }
    }

    #[test]
    fn fuse_bounded_by_weighted_inputs(seed: u64, w in 1usize..24, h in 1usize..24,
                                       wd in 0.0f64..=1.0, ws in 0.0f64..=1.0, we in 0.0f64..=1.0) {
        let mut r = rng(seed);
        let double = random_gray(&mut r, w, h);
        let single = random_mask(&mut r, w, h, 0.3);
        let soft = random_soft_map(&mut r, w, h);
        let weights = FusionWeights { double: wd, single: ws, soft: we };
        let out = fuse(&double, &single, Some(&soft), weights).unwrap();
        let soft_raster = soft.rasterize();
        for y in 0..h {
            for x in 0..w {
                let bound = (wd * double.get(x, y))
                    .max(if single.get(x, y) { ws } else { 0.0 })
                    .max(we * soft_raster.get(x, y));
                prop_assert!(out.image.get(x, y) <= bound);
            }
        }
    }

    #[test]
    fn fuse_commutes_under_equal_weights(seed: u64, w in 1usize..24, h in 1usize..24, wt in 0.0f64..=1.0) {
        let mut r = rng(seed);
        let a = random_mask(&mut r, w, h, 0.4);
        let b = random_mask(&mut r, w, h, 0.4);
        let weights = FusionWeights { double: wt, single: wt, soft: wt };
        let ab = fuse(&a.to_gray(), &b, None, weights).unwrap();
        let ba = fuse(&b.to_gray(), &a, None, weights).unwrap();
        prop_assert_eq!(ab.image, ba.image);
    }
}

fn random_soft_map(r: &mut rand_chacha::ChaCha8Rng, w: usize, h: usize) -> SoftEdgeMap {
    use rand::Rng;
    let mut points = Vec::new();
    for y in 0..h {
        for x in 0..w {
            if r.random_bool(0.2) {
                points.push(SoftEdgePoint {
                    x,
                    y,
                    magnitude: r.random_range(0.01..=1.0),
                });
            }
        }
    }
    SoftEdgeMap::new(points, (w, h), 1).unwrap()
}

#[test]
fn haar_two_by_two_closed_form() {
    let (a, b, c, d) = (0.9, 0.2, 0.4, 0.7);
    let pyr = haar_decompose(&Plane::new(2, 2, vec![a, b, c, d]).unwrap(), 1).unwrap();
    let bands = &pyr.details()[0];
    assert_eq!(pyr.approx().get(0, 0), (a + b + c + d) / 2.0);
    assert_eq!(bands.lh.get(0, 0), (a + b - c - d) / 2.0);
    assert_eq!(bands.hl.get(0, 0), (a - b + c - d) / 2.0);
    assert_eq!(bands.hh.get(0, 0), (a - b - c + d) / 2.0);
}

#[test]
fn haar_constant_has_no_detail() {
    let pyr = haar_decompose(&Plane::from_fn(16, 12, |_, _| 0.42), 2).unwrap();
    assert_eq!(pyr.detail_energy(), 0.0);
}

#[test]
fn haar_level_bounds() {
    let img = Plane::zeros(8, 5);
    assert!(haar_decompose(&img, 0).is_err());
    assert!(haar_decompose(&img, 3).is_err());
    assert!(haar_decompose(&img, 2).is_ok());
}

#[test]
fn soft_edges_keep_all_nonzero_at_full_fraction() {
    let img = outline((16, 16), 3, 3, 12, 12, 1);
    let map = soft_edges(&img, 2, 1.0).unwrap();
    let mag = lineart::linefusion::detail_magnitude(&img, 2).unwrap();
    let nonzero = mag.data().iter().filter(|&&v| v > 0.0).count();
    assert_eq!(map.len(), nonzero);
}

#[test]
fn soft_edges_retained_dominate_discarded() {
    let img = GrayImage::from_fn(24, 24, |x, _| if x < 11 { 0.2 } else { 0.8 });
    let map = soft_edges(&img, 2, 0.05).unwrap();
    let mag = lineart::linefusion::detail_magnitude(&img, 2).unwrap();
    let kept: std::collections::HashSet<_> = map.points().iter().map(|p| (p.x, p.y)).collect();
    let weakest_kept = map.points().iter().map(|p| p.magnitude).fold(f64::INFINITY, f64::min);
    for y in 0..24 {
        for x in 0..24 {
            if !kept.contains(&(x, y)) {
                assert!(mag.get(x, y) <= weakest_kept);
            }
        }
    }
    assert!(map.points().iter().all(|p| (10..=11).contains(&p.x)));
}

#[test]
fn soft_edge_json_round_trip() {
    let img = outline((20, 20), 4, 4, 15, 15, 2);
    let map = soft_edges(&img, 2, 0.2).unwrap();
    let json = map.to_json().unwrap();
    assert!(json.starts_with('['));
    let back = SoftEdgeMap::from_json(&json, map.source_dims(), map.levels()).unwrap();
    assert_eq!(back, map);
}

#[test]
fn fuse_examples() {
    let blank = fuse(
        &GrayImage::filled(8, 8, 0.0),
        &BinaryMask::filled(8, 8, false),
        None,
        FusionWeights::default(),
    )
    .unwrap();
    assert!(blank.image.data().iter().all(|&v| v == 0.0));

    let double = GrayImage::from_fn(8, 8, |x, y| ((x + y) % 3) as f64 / 2.0);
    let single = BinaryMask::from_fn(8, 8, |x, _| x == 2);
    let projection = fuse(
        &double,
        &single,
        None,
        FusionWeights {
            double: 1.0,
            single: 0.0,
            soft: 0.0,
        },
    )
    .unwrap();
    assert_eq!(projection.image, double);

    let soft = SoftEdgeMap::new(
        vec![SoftEdgePoint {
            x: 1,
            y: 1,
            magnitude: 0.8,
        }],
        (8, 8),
        1,
    )
    .unwrap();
    let full = GrayImage::filled(8, 8, 1.0);
    let out = fuse(&full, &single, Some(&soft), FusionWeights::default()).unwrap();
    assert_eq!(out.image.get(1, 1), 1.0);
}

#[test]
fn fuse_rejects_mismatched_layers() {
    let err = fuse(
        &GrayImage::filled(8, 8, 0.0),
        &BinaryMask::filled(8, 7, false),
        None,
        FusionWeights::default(),
    )
    .unwrap_err();
    assert!(matches!(err, Error::DimensionMismatch { .. }));
}

#[test]
fn mask_examples() {
    let drawing = outline((32, 32), 6, 6, 25, 25, 1);
    let mask = extract_mask(&drawing, 0.5).unwrap();
    assert_eq!(mask.bounding_box(), Some((6, 6, 20, 20)));
    assert_eq!(mask.count(), 400);
    assert!(matches!(
        extract_mask(&GrayImage::filled(16, 16, 1.0), 0.5),
        Err(Error::EmptyMask)
    ));
    let lines = single_lines(&mask, &StructuringElement::default()).unwrap();
    assert_eq!(lines.region.bounding_box(), Some((7, 7, 18, 18)));
    assert_eq!(lines.contour.count(), 4 * 17);
}

#[test]
fn double_lines_keeps_thick_strokes_only() {
    let thin = outline((32, 32), 4, 4, 27, 27, 1);
    let thick = GrayImage::from_fn(32, 32, |x, y| {
        if (14..=17).contains(&x) && (8..=23).contains(&y) {
            0.0
        } else {
            thin.get(x, y)
        }
    });
    let out = double_lines(&thick, &StructuringElement::default());
    assert_eq!(out.get(4, 10), 1.0, "1-px stroke removed");
    assert_eq!(out.get(15, 12), 0.0, "4-px stroke kept");
}
