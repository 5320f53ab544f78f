#![allow(dead_code)]

use coshrem::measures::{DetectionParams, Polarity};
use coshrem::{GrayImage, SystemParams};
use proptest::prelude::*;

pub fn small_params() -> SystemParams {
    SystemParams {
        wavelet_support: 16.0,
        gaussian_support: 16.0,
        scales_per_octave: 1,
        octaves: 2.0,
        shear_level: 2,
        alpha: 0.5,
    }
}

pub fn loose_detection() -> DetectionParams {
    DetectionParams {
        min_contrast: 1.0,
        epsilon_factor: 0.5,
        pivot_scales: vec![0, 1],
        polarity: Polarity::Both,
    }
}

/// Random 8-bit-range image of the given size.
pub fn image_strategy(width: usize, height: usize) -> impl Strategy<Value = GrayImage> {
    prop::collection::vec(0.0f64..255.0, width * height)
        .prop_map(move |data| GrayImage::new(width, height, data).unwrap())
}

/// Naive 2D DFT, `X[k] = Σ x[n] e^{∓2πi k·n / N}` (forward when `inverse` is false, unnormalized).
pub fn naive_dft(
    data: &[num_complex::Complex64],
    width: usize,
    height: usize,
    inverse: bool,
) -> Vec<num_complex::Complex64> {
    use std::f64::consts::PI;
    let sign = if inverse { 1.0 } else { -1.0 };
    let mut out = vec![num_complex::Complex64::new(0.0, 0.0); width * height];
    for k2 in 0..height {
        for k1 in 0..width {
            let mut acc = num_complex::Complex64::new(0.0, 0.0);
            for n2 in 0..height {
                for n1 in 0..width {
                    let phase = sign
                        * 2.0
                        * PI
                        * ((k1 * n1) as f64 / width as f64 + (k2 * n2) as f64 / height as f64);
                    acc += data[n2 * width + n1] * num_complex::Complex64::from_polar(1.0, phase);
                }
            }
            out[k2 * width + k1] = acc;
        }
    }
    out
}

/// Signed frequency index of DFT bin `k` on an `n`-point grid.
pub fn signed_bin(k: usize, n: usize) -> isize {
    if k <= n / 2 {
        k as isize
    } else {
        k as isize - n as isize
    }
}
