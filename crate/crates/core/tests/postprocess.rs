use coshrem::measures::{MeasureKind, MeasureMap};
use coshrem::postprocess::{hysteresis_threshold, is_minimally_connected, thin, trace_curves};
use coshrem::BinaryMap;
use proptest::prelude::*;

/// Number of 8-connected components of the on-pixels.
fn components(map: &BinaryMap) -> usize {
    let (w, h) = map.dims();
    let mut seen = vec![false; w * h];
    let mut count = 0;
    for (x, y) in map.on_pixels() {
        if seen[y * w + x] {
            continue;
        }
        count += 1;
        let mut stack = vec![(x, y)];
        seen[y * w + x] = true;
        while let Some((cx, cy)) = stack.pop() {
            for dy in -1isize..=1 {
                for dx in -1isize..=1 {
                    let (nx, ny) = (cx as isize + dx, cy as isize + dy);
                    if map.get_signed(nx, ny) && !seen[ny as usize * w + nx as usize] {
                        seen[ny as usize * w + nx as usize] = true;
                        stack.push((nx as usize, ny as usize));
                    }
                }
            }
        }
    }
    count
}

fn blob_strategy() -> impl Strategy<Value = BinaryMap> {
    (8usize..28, 8usize..28).prop_flat_map(|(w, h)| {
        prop::collection::vec(prop::bool::weighted(0.55), w * h)
            .prop_map(move |mask| BinaryMap::from_mask(w, h, mask).unwrap())
    })
}

fn rect_strategy() -> impl Strategy<Value = BinaryMap> {
    prop::collection::vec((0usize..30, 0usize..30, 1usize..12, 1usize..12), 1..5).prop_map(|rects| {
        BinaryMap::from_fn(32, 32, |x, y| {
            rects
                .iter()
                .any(|&(rx, ry, rw, rh)| x >= rx && x < rx + rw && y >= ry && y < ry + rh)
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn thinning_is_idempotent_and_minimal(map in blob_strategy()) {
        let once = thin(&map);
        prop_assert_eq!(&thin(&once), &once);
        prop_assert!(is_minimally_connected(&once));
        prop_assert!(once.on_pixels().all(|(x, y)| map.get(x, y)));
        prop_assert_eq!(components(&once), components(&map));
    }

    #[test]
    fn thinning_of_rectangles_keeps_topology(map in rect_strategy()) {
        let once = thin(&map);
        prop_assert_eq!(&thin(&once), &once);
        prop_assert!(is_minimally_connected(&once));
        prop_assert_eq!(components(&once), components(&map));
        let chains = trace_curves(&once).unwrap();
        let total: usize = chains.iter().map(|c| c.len()).sum();
        prop_assert_eq!(total, once.count_on());
    }

    #[test]
    fn chains_partition_the_skeleton(map in blob_strategy()) {
        let skeleton = thin(&map);
        let chains = trace_curves(&skeleton).unwrap();
        let mut seen = BinaryMap::new(skeleton.width(), skeleton.height());
        for chain in &chains {
            for w in chain.pixels.windows(2) {
                prop_assert!(w[0].0.abs_diff(w[1].0) <= 1 && w[0].1.abs_diff(w[1].1) <= 1);
            }
            for &(x, y) in &chain.pixels {
                prop_assert!(skeleton.get(x, y));
                prop_assert!(!seen.get(x, y), "pixel in two chains");
                seen.set(x, y, true);
            }
        }
        prop_assert_eq!(seen, skeleton);
    }

    #[test]
    fn lowering_thresholds_never_removes_pixels(
        values in prop::collection::vec(0.0f64..1.0, 20 * 16),
        lo in 0.0f64..1.0,
        hi in 0.0f64..1.0,
        dlo in 0.0f64..0.3,
        dhi in 0.0f64..0.3,
    ) {
        let (lo, hi) = (lo.min(hi), lo.max(hi));
        let m = MeasureMap::from_values(20, 16, values, MeasureKind::Edge).unwrap();
        let strict = hysteresis_threshold(&m, lo, hi).unwrap();
        let (lo2, hi2) = ((lo - dlo).max(0.0), (hi - dhi).max(0.0));
        let relaxed = hysteresis_threshold(&m, lo2.min(hi2), hi2).unwrap();
        prop_assert!(strict.on_pixels().all(|(x, y)| relaxed.get(x, y)));
    }
}

#[test]
fn thick_ring_thins_to_a_single_closed_curve() {
    let ring = BinaryMap::from_fn(60, 60, |x, y| {
        let d = ((x as f64 - 30.0).powi(2) + (y as f64 - 30.0).powi(2)).sqrt();
        (15.0..18.5).contains(&d)
    });
    let skeleton = thin(&ring);
    assert!(skeleton.on_pixels().all(|(x, y)| skeleton.neighbor_count(x, y) == 2));
    let chains = trace_curves(&skeleton).unwrap();
    assert_eq!(chains.len(), 1);
    assert!(chains[0].closed);
}

#[test]
fn thinned_bar_keeps_its_extent() {
    let bar = BinaryMap::from_fn(120, 20, |x, y| (10..110).contains(&x) && (8..13).contains(&y));
    let skeleton = thin(&bar);
    let xs: Vec<usize> = skeleton.on_pixels().map(|p| p.0).collect();
    assert!(skeleton.on_pixels().all(|(_, y)| y == 10));
    assert!(*xs.iter().min().unwrap() <= 11 && *xs.iter().max().unwrap() >= 108);
}

