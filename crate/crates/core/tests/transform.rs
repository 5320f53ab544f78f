mod common;

use common::{image_strategy, naive_dft, signed_bin, small_params};
use coshrem::shearlets::{build_system, calibrate_scales, calibration_step, Cone, ShearletSystem};
use coshrem::xform::{analyze, coefficients_at, CoefficientVolume};
use coshrem::{Error, GrayImage, SystemParams};
use num_complex::Complex64;
use proptest::prelude::*;

fn max_abs(v: &CoefficientVolume) -> f64 {
    (0..v.filter_count())
        .flat_map(|f| v.plane(f).iter().map(|c| c.norm()))
        .fold(0.0, f64::max)
}

#[test]
fn odd_spectrum_is_hilbert_partner_of_even() {
    let (w, h) = (24, 20);
    let sys = build_system(small_params(), w, h).unwrap();
    for (i, f) in sys.filters().iter().enumerate() {
        let even = f.even_spectrum();
        let odd = sys.odd_spectrum(i);
        let full = sys.complex_spectrum(i);
        for k2 in 0..h {
            for k1 in 0..w {
                let idx = k2 * w + k1;
                let xi = f.axis[0] as f64 * signed_bin(k1, w) as f64 / w as f64
                    + f.axis[1] as f64 * signed_bin(k2, h) as f64 / h as f64;
                let e = even[idx] as f64;
                let expected = Complex64::new(0.0, -xi.signum() * e) * if xi == 0.0 { 0.0 } else { 1.0 };
                assert!((odd[idx] - expected).norm() <= 1e-12, "filter {i} bin ({k1},{k2})");
                let combined = Complex64::new(e, 0.0) + Complex64::i() * odd[idx];
                assert!((full[idx] - combined).norm() <= 1e-12, "filter {i} bin ({k1},{k2})");
            }
        }
    }
}

#[test]
fn even_filters_are_real_and_point_symmetric_in_space() {
    let n = 16;
    let sys = build_system(small_params(), n, n).unwrap();
    for (i, f) in sys.filters().iter().enumerate() {
        let spectrum: Vec<Complex64> = f
            .even_spectrum()
            .iter()
            .map(|&v| Complex64::new(v as f64, 0.0))
            .collect();
        let psi = naive_dft(&spectrum, n, n, true);
        let peak = psi.iter().map(|c| c.norm()).fold(0.0, f64::max);
        assert!(peak > 0.0);
        for y in 0..n {
            for x in 0..n {
                let v = psi[y * n + x];
                let mirrored = psi[((n - y) % n) * n + (n - x) % n];
                assert!(v.im.abs() <= 1e-8 * peak, "filter {i} not real");
                assert!((v.re - mirrored.re).abs() <= 1e-8 * peak, "filter {i} not even");
            }
        }
    }
}

#[test]
fn spectra_are_finite_nonnegative_bounded_with_zero_dc() {
    let sys = build_system(SystemParams::edge_default(), 96, 80).unwrap();
    for f in sys.filters() {
        let s = f.even_spectrum();
        assert_eq!(s[0], 0.0);
        assert!(s.iter().all(|v| v.is_finite() && *v >= 0.0 && *v <= 1.0));
    }
    assert!(sys.scale_gain().iter().all(|g| *g > 0.0 && g.is_finite()));
}

#[test]
fn filter_count_formula_for_shear_levels_zero_to_four() {
    for level in 0..=4u32 {
        let params = SystemParams {
            shear_level: level,
            octaves: 4.0,
            ..small_params()
        };
        let sys = build_system(params, 16, 16).unwrap();
        let n_or = 2 * ((1 << (level + 1)) + 1) - 2;
        assert_eq!(sys.filters().len(), 4 * n_or);
        assert_eq!(sys.orientation_count(), n_or);
    }
    let four_by_three = SystemParams {
        octaves: 4.0,
        shear_level: 3,
        ..small_params()
    };
    assert_eq!(four_by_three.filter_count(), 128);
}

#[test]
fn swapping_width_and_height_transposes_filters() {
    let (w, h) = (24, 20);
    let a = build_system(small_params(), w, h).unwrap();
    let b = build_system(small_params(), h, w).unwrap();
    for fa in a.filters() {
        let swapped = match (fa.axis[0] != 0 && fa.axis[1] != 0, fa.cone) {
            (true, cone) => cone,
            (false, Cone::Horizontal) => Cone::Vertical,
            (false, Cone::Vertical) => Cone::Horizontal,
        };
        let fb = b
            .filters()
            .iter()
            .find(|f| f.scale == fa.scale && f.cone == swapped && f.shear == fa.shear)
            .expect("partner filter");
        for y in 0..h {
            for x in 0..w {
                let va = fa.even_spectrum()[y * w + x];
                let vb = fb.even_spectrum()[x * h + y];
                assert!((va - vb).abs() <= 1e-6, "scale {} shear {}", fa.scale, fa.shear);
            }
        }
    }
}

#[test]
fn calibration_is_a_fixed_point() {
    let sys = build_system(small_params(), 32, 32).unwrap();
    let gains = sys.scale_gain().to_vec();
    let again = calibrate_scales(sys).unwrap();
    for (g0, g1) in gains.iter().zip(again.scale_gain()) {
        assert!((g0 - g1).abs() <= 1e-12 * g0.abs());
    }
}

fn calibrated_odd_at_edge(sys: &ShearletSystem, contrast: f64) -> Vec<f64> {
    let (w, h) = sys.dims();
    let data = calibration_step(w, h).into_iter().map(|v| v * contrast).collect();
    let vol = analyze(sys, &GrayImage::new(w, h, data).unwrap()).unwrap();
    let o = sys.vertical_edge_orientation();
    let coeffs = coefficients_at(&vol, w / 4, h / 2).unwrap();
    (0..sys.scale_count())
        .map(|j| coeffs[sys.filter_index(j, o)].1.im)
        .collect()
}

#[test]
fn calibrated_step_has_unit_odd_response_and_scales_linearly() {
    let sys = build_system(SystemParams::edge_default(), 128, 96).unwrap();
    for v in calibrated_odd_at_edge(&sys, 1.0) {
        assert!((v.abs() - 1.0).abs() <= 1e-6, "{v}");
    }
    for (one, two) in calibrated_odd_at_edge(&sys, 1.0)
        .iter()
        .zip(calibrated_odd_at_edge(&sys, 2.0))
    {
        assert!((two - 2.0 * one).abs() <= 1e-9);
    }
}

#[test]
fn constant_image_has_zero_coefficients() {
    let sys = build_system(small_params(), 32, 24).unwrap();
    let vol = analyze(&sys, &GrayImage::filled(32, 24, 137.0)).unwrap();
    assert!(max_abs(&vol) <= 1e-9 * 137.0);
}

#[test]
fn symmetric_input_gives_symmetric_even_response() {
    let n = 32;
    let sys = build_system(small_params(), n, n).unwrap();
    let img = GrayImage::from_fn(n, n, |x, y| {
        let dx = (x as f64 - 16.0).abs();
        let dy = (y as f64 - 16.0).abs();
        if dx <= 3.0 && dy <= 6.0 { 100.0 } else { 0.0 }
    });
    let vol = analyze(&sys, &img).unwrap();
    let o = sys.vertical_edge_orientation();
    for j in 0..sys.scale_count() {
        let plane = vol.plane(sys.filter_index(j, o));
        for y in 0..n {
            for x in 0..n {
                let a = plane[y * n + x].re;
                let b = plane[((32 - y) % n) * n + (32 - x) % n].re;
                assert!((a - b).abs() <= 1e-9 * 100.0);
            }
        }
    }
}

#[test]
fn analyze_rejects_bad_input() {
    let sys = build_system(small_params(), 32, 32).unwrap();
    assert!(matches!(
        analyze(&sys, &GrayImage::filled(32, 31, 0.0)),
        Err(Error::DimensionMismatch { .. })
    ));
    let mut img = GrayImage::filled(32, 32, 0.0);
    img.set(3, 4, f64::NAN);
    assert!(matches!(analyze(&sys, &img), Err(Error::NonFinite { x: 3, y: 4 })));
    let vol = analyze(&sys, &GrayImage::filled(32, 32, 1.0)).unwrap();
    assert!(coefficients_at(&vol, 32, 0).is_err());
    assert_eq!(coefficients_at(&vol, 1, 2).unwrap().len(), sys.filters().len());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn analyze_is_linear(
        f in image_strategy(24, 20),
        g in image_strategy(24, 20),
        a in -3.0f64..3.0,
    ) {
        let sys = build_system(small_params(), 24, 20).unwrap();
        let combo = GrayImage::new(
            24,
            20,
            f.data().iter().zip(g.data()).map(|(x, y)| a * x + y).collect(),
        )
        .unwrap();
        let (vf, vg, vc) = (
            analyze(&sys, &f).unwrap(),
            analyze(&sys, &g).unwrap(),
            analyze(&sys, &combo).unwrap(),
        );
        let scale = max_abs(&vc).max(a.abs() * max_abs(&vf) + max_abs(&vg));
        for i in 0..sys.filters().len() {
            for ((c, x), y) in vc.plane(i).iter().zip(vf.plane(i)).zip(vg.plane(i)) {
                prop_assert!((c - (x * a + y)).norm() <= 1e-10 * scale);
            }
        }
    }

    #[test]
    fn analyze_is_shift_covariant(
        f in image_strategy(24, 20),
        dx in -30isize..30,
        dy in -30isize..30,
    ) {
        let sys = build_system(small_params(), 24, 20).unwrap();
        let base = analyze(&sys, &f).unwrap();
        let moved = analyze(&sys, &f.shifted(dx, dy)).unwrap();
        let tol = 1e-10 * max_abs(&base);
        for i in 0..sys.filters().len() {
            for y in 0..20 {
                for x in 0..24 {
                    let sx = (x as isize - dx).rem_euclid(24) as usize;
                    let sy = (y as isize - dy).rem_euclid(20) as usize;
                    prop_assert!((moved.get(i, x, y) - base.get(i, sx, sy)).norm() <= tol);
                }
            }
        }
    }

    #[test]
    fn negation_negates_every_coefficient(f in image_strategy(24, 20)) {
        let sys = build_system(small_params(), 24, 20).unwrap();
        let base = analyze(&sys, &f).unwrap();
        let neg = analyze(&sys, &f.map(|v| -v)).unwrap();
        for i in 0..sys.filters().len() {
            for (a, b) in base.plane(i).iter().zip(neg.plane(i)) {
                prop_assert_eq!(*a, -*b);
            }
        }
    }
}
