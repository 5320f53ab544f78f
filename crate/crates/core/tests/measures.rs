mod common;

use common::{image_strategy, loose_detection, small_params};
use coshrem::measures::{
    curvature_along, edge_measure, measure_image, measure_value, median, orientation_map,
    ridge_measure, wrap180, MeasureKind, MeasureMap, OrientationMap, Polarity,
};
use coshrem::phantoms::{periodic_line, periodic_step};
use coshrem::pipeline::DetectorConfig;
use coshrem::postprocess::thin;
use coshrem::shearlets::build_system;
use coshrem::xform::analyze;
use coshrem::{BinaryMap, DetectionParams, GrayImage, ShearletSystem};
use proptest::prelude::*;

fn measure(
    sys: &ShearletSystem,
    img: &GrayImage,
    kind: MeasureKind,
    det: &DetectionParams,
) -> (MeasureMap, OrientationMap) {
    let (m, p) = measure_image(sys, img, kind, det).unwrap();
    let o = orientation_map(&m, &p, sys).unwrap();
    (m, o)
}

#[test]
fn streaming_matches_volume_measures() {
    let sys = build_system(small_params(), 32, 24).unwrap();
    let img = GrayImage::from_fn(32, 24, |x, y| ((x * 7 + y * 13) % 31) as f64 * 8.0);
    let vol = analyze(&sys, &img).unwrap();
    let det = loose_detection();
    let (e1, p1) = edge_measure(&vol, &sys, &det).unwrap();
    let (e2, p2) = measure_image(&sys, &img, MeasureKind::Edge, &det).unwrap();
    assert_eq!(e1.values(), e2.values());
    let (r1, _) = ridge_measure(&vol, &sys, &det).unwrap();
    let (r2, _) = measure_image(&sys, &img, MeasureKind::Ridge, &det).unwrap();
    assert_eq!(r1.values(), r2.values());
    for y in 0..24 {
        for x in 0..32 {
            assert_eq!(p1.get(x, y), p2.get(x, y));
        }
    }
}

#[test]
fn constant_image_measures_zero() {
    let sys = build_system(small_params(), 32, 32).unwrap();
    for kind in [MeasureKind::Edge, MeasureKind::Ridge] {
        let (m, o) = measure(&sys, &GrayImage::filled(32, 32, 90.0), kind, &loose_detection());
        assert_eq!(m.max(), 0.0);
        assert_eq!(o.defined().count(), 0);
    }
}

#[test]
fn mirrored_step_gives_identical_edge_measure() {
    let (step, _) = periodic_step(128, 90.0, 20.0, 200.0).unwrap();
    let mirrored = step.map(|v| 220.0 - v);
    let config = DetectorConfig::edge_default();
    let sys = build_system(config.system, 128, 128).unwrap();
    let (a, _) = measure(&sys, &step, MeasureKind::Edge, &config.detection);
    let (b, _) = measure(&sys, &mirrored, MeasureKind::Edge, &config.detection);
    for (x, y) in a.values().iter().zip(b.values()) {
        assert!((x - y).abs() <= 1e-9);
    }
    assert!(a.max() > 0.9);
}

/// Ridge measure of a 3-px line, its centerline column and the default config.
fn line_ridge(angle: f64, invert: bool, polarity: Polarity) -> (MeasureMap, OrientationMap, BinaryMap) {
    let (mut img, truth) = periodic_line(128, angle, 3, 20.0, 200.0).unwrap();
    if invert {
        img = img.map(|v| 220.0 - v);
    }
    let mut config = DetectorConfig::ridge_default();
    config.detection.polarity = polarity;
    let sys = build_system(config.system, 128, 128).unwrap();
    let (m, o) = measure(&sys, &img, MeasureKind::Ridge, &config.detection);
    (m, o, truth.curves)
}

#[test]
fn bright_line_peaks_on_its_centerline() {
    let (m, _, truth) = line_ridge(90.0, false, Polarity::Positive);
    for (x, y) in truth.on_pixels() {
        let v = m.get(x, y);
        assert!(v >= 0.8, "R = {v} at ({x}, {y})");
        for other in 0..128 {
            assert!(m.get(other, y) <= v);
        }
    }
}

#[test]
fn dark_line_with_negative_polarity_matches_bright_line() {
    let (bright, _, _) = line_ridge(90.0, false, Polarity::Positive);
    let (dark, _, _) = line_ridge(90.0, true, Polarity::Negative);
    for (a, b) in bright.values().iter().zip(dark.values()) {
        assert!((a - b).abs() <= 1e-9);
    }
    let (rejected, _, _) = line_ridge(90.0, true, Polarity::Positive);
    assert!(rejected.max() < 0.2);
}

#[test]
fn edge_and_ridge_measures_are_complementary() {
    let loose = |mut d: DetectionParams| {
        d.min_contrast = 1.0;
        d
    };
    let (step, step_truth) = periodic_step(128, 90.0, 20.0, 200.0).unwrap();
    let (line, line_truth) = periodic_line(128, 90.0, 3, 20.0, 200.0).unwrap();
    let edge_cfg = DetectorConfig::edge_default();
    let ridge_cfg = DetectorConfig::ridge_default();
    let edge_sys = build_system(edge_cfg.system, 128, 128).unwrap();
    let ridge_sys = build_system(ridge_cfg.system, 128, 128).unwrap();
    for det_fn in [|d: DetectionParams| d, loose] {
        let (r, _) = measure(&ridge_sys, &step, MeasureKind::Ridge, &det_fn(ridge_cfg.detection.clone()));
        for (x, y) in step_truth.curves.on_pixels() {
            assert!(r.get(x, y) < 0.2, "ridge measure {} on the step", r.get(x, y));
        }
        let (e, _) = measure(&edge_sys, &line, MeasureKind::Edge, &det_fn(edge_cfg.detection.clone()));
        for (x, y) in line_truth.curves.on_pixels() {
            assert!(e.get(x, y) < 0.2, "edge measure {} on the ridge", e.get(x, y));
        }
    }
}

fn median_orientation_error(o: &OrientationMap, on: &BinaryMap, truth: f64) -> f64 {
    median(on.on_pixels().filter_map(|(x, y)| o.get(x, y)).map(|a| wrap180(a - truth).abs())).unwrap()
}

#[test]
fn orientation_of_straight_structures() {
    let config = DetectorConfig::edge_default();
    let sys = build_system(config.system, 128, 128).unwrap();
    let (step, truth) = periodic_step(128, 90.0, 20.0, 200.0).unwrap();
    let (_, o) = measure(&sys, &step, MeasureKind::Edge, &config.detection);
    assert!(median_orientation_error(&o, &truth.curves, 90.0) <= 2.0);

    let (_, o, centerline) = line_ridge(0.0, false, Polarity::Positive);
    assert!(median_orientation_error(&o, &centerline, 0.0) <= 2.0);

    let (_, o, centerline) = line_ridge(45.0, false, Polarity::Positive);
    assert!(median_orientation_error(&o, &centerline, 45.0) <= 3.0);
}

#[test]
fn orientation_is_defined_exactly_where_measure_is_positive() {
    let sys = build_system(small_params(), 32, 32).unwrap();
    let img = GrayImage::from_fn(32, 32, |x, y| if (x / 5 + y / 7) % 2 == 0 { 30.0 } else { 180.0 });
    let (m, o) = measure(&sys, &img, MeasureKind::Edge, &loose_detection());
    for (v, a) in m.values().iter().zip(o.values()) {
        assert_eq!(*v > 0.0, a.is_some());
        if let Some(a) = a {
            assert!((0.0..180.0).contains(a));
        }
    }
}

#[test]
fn straight_diagonal_chain_has_zero_curvature() {
    let skeleton = BinaryMap::from_fn(40, 40, |x, y| x == y && (3..37).contains(&x));
    let orient = OrientationMap::from_values(
        40,
        40,
        skeleton.mask().iter().map(|&on| on.then_some(135.0)).collect(),
    )
    .unwrap();
    let (k, skipped) = curvature_along(&skeleton, &orient).unwrap();
    assert!(skipped.is_empty());
    assert_eq!(k.defined().count(), 32);
    assert!(k.defined().all(|v| v == 0.0));
}

#[test]
fn curvature_of_digital_circles_with_exact_tangents() {
    for r in [20.0f64, 100.0] {
        let size = (2.0 * r) as usize + 20;
        let c = size as f64 / 2.0;
        let disc = BinaryMap::from_fn(size, size, |x, y| {
            let d = ((x as f64 - c).powi(2) + (y as f64 - c).powi(2)).sqrt();
            (d - r).abs() <= 0.75
        });
        let skeleton = thin(&disc);
        let orient = OrientationMap::from_values(
            size,
            size,
            (0..size * size)
                .map(|i| {
                    let (x, y) = ((i % size) as f64 - c, c - (i / size) as f64);
                    skeleton.mask()[i].then(|| (y.atan2(x).to_degrees() + 90.0).rem_euclid(180.0))
                })
                .collect(),
        )
        .unwrap();
        let (k, _) = curvature_along(&skeleton, &orient).unwrap();
        let expected = 180.0 / std::f64::consts::PI / r;
        let got = median(k.defined()).unwrap();
        assert!((got - expected).abs() <= 0.2 * expected, "r = {r}: {got} vs {expected}");
    }
}

#[test]
fn curvature_reports_pixels_without_orientation() {
    let skeleton = BinaryMap::from_fn(20, 5, |x, y| y == 2 && (2..18).contains(&x));
    let mut values: Vec<Option<f64>> = skeleton.mask().iter().map(|&on| on.then_some(0.0)).collect();
    values[2 * 20 + 9] = None;
    let orient = OrientationMap::from_values(20, 5, values).unwrap();
    let (_, skipped) = curvature_along(&skeleton, &orient).unwrap();
    assert_eq!(skipped, vec![(9, 2)]);
}

fn rotated_dims_check(sys: &ShearletSystem, img: &GrayImage, kind: MeasureKind) {
    let n = img.width();
    let det = loose_detection();
    let (m, o) = measure(sys, img, kind, &det);
    let (mr, or) = measure(sys, &img.rotated_ccw(), kind, &det);
    for y in 0..n {
        for x in 0..n {
            let (sx, sy) = (n - 1 - y, x);
            assert!((mr.get(x, y) - m.get(sx, sy)).abs() <= 1e-9);
            if let (Some(a), Some(b)) = (or.get(x, y), o.get(sx, sy)) {
                assert!(wrap180(a - (b + 90.0)).abs() <= 1e-3, "{a} vs {b} + 90");
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn measure_value_stays_in_unit_interval(
        p in prop::collection::vec(-500.0f32..500.0, 1..8),
        q_seed in prop::collection::vec(-500.0f32..500.0, 8),
        min_contrast in 0.001f64..50.0,
        eps in 0.0f64..10.0,
    ) {
        let q = &q_seed[..p.len()];
        for pol in [Polarity::Both, Polarity::Positive, Polarity::Negative] {
            let v = measure_value(&p, q, min_contrast, eps, pol);
            prop_assert!((0.0..=1.0).contains(&v));
        }
    }

    #[test]
    fn measures_of_random_images_stay_in_unit_interval(img in image_strategy(32, 32)) {
        let sys = build_system(small_params(), 32, 32).unwrap();
        for kind in [MeasureKind::Edge, MeasureKind::Ridge] {
            let (m, _) = measure(&sys, &img, kind, &loose_detection());
            prop_assert!(m.values().iter().all(|v| (0.0..=1.0).contains(v)));
        }
    }

    #[test]
    fn measures_are_shift_covariant(
        img in image_strategy(32, 24),
        dx in -40isize..40,
        dy in -40isize..40,
    ) {
        let sys = build_system(small_params(), 32, 24).unwrap();
        for kind in [MeasureKind::Edge, MeasureKind::Ridge] {
            let (m, _) = measure(&sys, &img, kind, &loose_detection());
            let (ms, _) = measure(&sys, &img.shifted(dx, dy), kind, &loose_detection());
            for y in 0..24 {
                for x in 0..32 {
                    let sx = (x as isize - dx).rem_euclid(32) as usize;
                    let sy = (y as isize - dy).rem_euclid(24) as usize;
                    prop_assert!((ms.get(x, y) - m.get(sx, sy)).abs() <= 1e-9);
                }
            }
        }
    }

    #[test]
    fn negation_leaves_edges_and_flips_ridge_polarity(img in image_strategy(32, 32)) {
        let sys = build_system(small_params(), 32, 32).unwrap();
        let neg = img.map(|v| 255.0 - v);
        let both = loose_detection();
        let (a, _) = measure(&sys, &img, MeasureKind::Edge, &both);
        let (b, _) = measure(&sys, &neg, MeasureKind::Edge, &both);
        for (x, y) in a.values().iter().zip(b.values()) {
            prop_assert!((x - y).abs() <= 1e-9);
        }
        let pos = DetectionParams { polarity: Polarity::Positive, ..both.clone() };
        let negp = DetectionParams { polarity: Polarity::Negative, ..both };
        let (r, _) = measure(&sys, &img, MeasureKind::Ridge, &pos);
        let (rn, _) = measure(&sys, &neg, MeasureKind::Ridge, &negp);
        for (x, y) in r.values().iter().zip(rn.values()) {
            prop_assert!((x - y).abs() <= 1e-9);
        }
    }

    #[test]
    fn rotation_by_ninety_degrees_rotates_maps(img in image_strategy(32, 32)) {
        let sys = build_system(small_params(), 32, 32).unwrap();
        rotated_dims_check(&sys, &img, MeasureKind::Edge);
        rotated_dims_check(&sys, &img, MeasureKind::Ridge);
    }

    #[test]
    fn pivot_is_invariant_under_positive_rescaling(
        img in image_strategy(32, 32),
        gain in 0.1f64..10.0,
    ) {
        let sys = build_system(small_params(), 32, 32).unwrap();
        let (_, p) = measure_image(&sys, &img, MeasureKind::Edge, &loose_detection()).unwrap();
        let (_, ps) = measure_image(&sys, &img.map(|v| v * gain), MeasureKind::Edge, &loose_detection()).unwrap();
        let mut same = 0;
        for y in 0..32 {
            for x in 0..32 {
                let [a, b, c] = p.objectives(x, y);
                let margin = (b - a).min(b - c);
                if margin > 1e-4 * b.abs().max(1.0) {
                    prop_assert_eq!(p.get(x, y), ps.get(x, y));
                    same += 1;
                }
            }
        }
        prop_assert!(same > 0);
    }

    #[test]
    fn amplification_keeps_floor_and_bounds_change(
        img in image_strategy(32, 32),
        alpha in 1.0f64..4.0,
    ) {
        let sys = build_system(small_params(), 32, 32).unwrap();
        let det = DetectionParams { min_contrast: 20.0, ..loose_detection() };
        let vol = analyze(&sys, &img).unwrap();
        let (e, p) = edge_measure(&vol, &sys, &det).unwrap();
        let (ea, _) = edge_measure(&analyze(&sys, &img.map(|v| v * alpha)).unwrap(), &sys, &det).unwrap();
        let j = sys.scale_count() as f64;
        for y in 0..32 {
            for x in 0..32 {
                let o = p.get(x, y).orientation;
                let peak = (0..sys.scale_count())
                    .map(|s| vol.get(sys.filter_index(s, o), x, y).im.abs())
                    .fold(0.0, f64::max);
                if peak >= det.min_contrast * (1.0 + 1e-6) {
                    let bound = det.epsilon() / (j * peak);
                    prop_assert!((ea.get(x, y) - e.get(x, y)).abs() <= bound + 1e-6);
                }
            }
        }
    }
}
