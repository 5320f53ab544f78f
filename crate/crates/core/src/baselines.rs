//! Gradient-based reference detectors: Canny and Sobel.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{BinaryMap, GrayImage};
use crate::postprocess::{hysteresis_values, thin};

/// Canny configuration: explicit smoothing and quantile thresholds, or the
/// automatic configuration (σ = √2, Otsu high threshold, low = 0.4 · high).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum CannyParams {
    #[serde(rename_all = "camelCase")]
    Explicit {
        sigma: f64,
        /// Quantiles of the nonzero gradient magnitude.
        low_frac: f64,
        high_frac: f64,
    },
    Auto,
}

impl CannyParams {
    /// Fixed parameters tuned for the worst cell of the EDGE-512 corruption grid.
    pub fn tuned() -> Self {
        CannyParams::Explicit {
            sigma: 3.5,
            low_frac: 0.8,
            high_frac: 0.93,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let CannyParams::Explicit {
            sigma,
            low_frac,
            high_frac,
        } = *self
        {
            if !(sigma >= 0.0) || !sigma.is_finite() {
                return Err(Error::param("sigma", "must be nonnegative"));
            }
            if !(0.0..=1.0).contains(&low_frac) || !(0.0..=1.0).contains(&high_frac) {
                return Err(Error::param("lowFrac", "quantiles must lie in [0, 1]"));
            }
            if low_frac > high_frac {
                return Err(Error::param("lowFrac", "must not exceed highFrac"));
            }
        }
        Ok(())
    }
}

/// Sampled Gaussian truncated at `4σ` and normalized to unit sum.
pub fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    if sigma <= 0.0 {
        return vec![1.0];
    }
    let radius = (4.0 * sigma).ceil() as isize;
    let mut k: Vec<f64> = (-radius..=radius)
        .map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= sum);
    k
}

/// Half-sample symmetric reflection of index `i` into `0..n`.
#[inline]
fn reflect(i: isize, n: usize) -> usize {
    let period = 2 * n as isize;
    let m = i.rem_euclid(period);
    if m < n as isize {
        m as usize
    } else {
        (period - 1 - m) as usize
    }
}

/// Separable Gaussian blur with symmetric reflection at the borders.
///
/// `σ = 0` returns the input unchanged; the image sum is preserved.
pub fn gaussian_blur(image: &GrayImage, sigma: f64) -> GrayImage {
    if sigma <= 0.0 {
        return image.clone();
    }
    let k = gaussian_kernel(sigma);
    let r = (k.len() / 2) as isize;
    let (w, h) = image.dims();
    let src = image.data();
    let mut tmp = vec![0.0; w * h];
    for y in 0..h {
        let row = &src[y * w..(y + 1) * w];
        for x in 0..w {
            tmp[y * w + x] = k
                .iter()
                .enumerate()
                .map(|(i, kv)| kv * row[reflect(x as isize + i as isize - r, w)])
                .sum();
        }
    }
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            out[y * w + x] = k
                .iter()
                .enumerate()
                .map(|(i, kv)| kv * tmp[reflect(y as isize + i as isize - r, h) * w + x])
                .sum();
        }
    }
    GrayImage::new(w, h, out).expect("dimensions unchanged")
}

/// 3×3 Sobel derivatives `(gx, gy)` with replicated borders; `gy` points down.
pub fn sobel_gradients(image: &GrayImage) -> (Vec<f64>, Vec<f64>) {
    let (w, h) = image.dims();
    let at = |x: isize, y: isize| {
        let xc = x.clamp(0, w as isize - 1) as usize;
        let yc = y.clamp(0, h as isize - 1) as usize;
        image.get(xc, yc)
    };
    let mut gx = vec![0.0; w * h];
    let mut gy = vec![0.0; w * h];
    for y in 0..h as isize {
        for x in 0..w as isize {
            let i = y as usize * w + x as usize;
            gx[i] = (at(x + 1, y - 1) + 2.0 * at(x + 1, y) + at(x + 1, y + 1))
                - (at(x - 1, y - 1) + 2.0 * at(x - 1, y) + at(x - 1, y + 1));
            gy[i] = (at(x - 1, y + 1) + 2.0 * at(x, y + 1) + at(x + 1, y + 1))
                - (at(x - 1, y - 1) + 2.0 * at(x, y - 1) + at(x + 1, y - 1));
        }
    }
    (gx, gy)
}

fn magnitude(gx: &[f64], gy: &[f64]) -> Vec<f64> {
    gx.iter().zip(gy).map(|(a, b)| a.hypot(*b)).collect()
}

/// Sobel magnitude thresholded at `threshold · max`, before thinning.
pub fn sobel_magnitude_mask(image: &GrayImage, threshold: f64) -> Result<BinaryMap> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(Error::param("threshold", "must lie in [0, 1]"));
    }
    let (gx, gy) = sobel_gradients(image);
    let mag = magnitude(&gx, &gy);
    let max = mag.iter().copied().fold(0.0, f64::max);
    let cut = threshold * max;
    let (w, h) = image.dims();
    BinaryMap::from_mask(w, h, mag.iter().map(|&m| m > cut).collect())
}

/// Sobel detector: global magnitude threshold followed by thinning.
pub fn sobel(image: &GrayImage, threshold: f64) -> Result<BinaryMap> {
    Ok(thin(&sobel_magnitude_mask(image, threshold)?))
}

/// Otsu threshold of nonnegative values over 256 equal bins in `[0, max]`.
pub fn otsu_threshold(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(0.0, f64::max);
    if max <= 0.0 {
        return 0.0;
    }
    const BINS: usize = 256;
    let mut hist = [0usize; BINS];
    for &v in values {
        let b = ((v / max) * BINS as f64).floor() as usize;
        hist[b.min(BINS - 1)] += 1;
    }
    let total = values.len() as f64;
    let sum_all: f64 = hist.iter().enumerate().map(|(i, &c)| i as f64 * c as f64).sum();
    let (mut w0, mut sum0) = (0.0, 0.0);
    let (mut best, mut best_bin) = (-1.0, 0);
    for (i, &c) in hist.iter().enumerate() {
        w0 += c as f64;
        sum0 += i as f64 * c as f64;
        let w1 = total - w0;
        if w0 == 0.0 || w1 == 0.0 {
            continue;
        }
        let m0 = sum0 / w0;
        let m1 = (sum_all - sum0) / w1;
        let between = w0 * w1 * (m0 - m1) * (m0 - m1);
        if between > best {
            best = between;
            best_bin = i;
        }
    }
    (best_bin + 1) as f64 / BINS as f64 * max
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::INFINITY;
    }
    let pos = (q * (sorted.len() - 1) as f64).round() as usize;
    sorted[pos.min(sorted.len() - 1)]
}

/// Non-maximum suppression along the gradient direction quantized to 4 bins.
fn non_maximum_suppression(gx: &[f64], gy: &[f64], mag: &[f64], w: usize, h: usize) -> Vec<f64> {
    let mut out = vec![f64::NEG_INFINITY; w * h];
    let at = |x: isize, y: isize| {
        if x < 0 || y < 0 || x >= w as isize || y >= h as isize {
            0.0
        } else {
            mag[y as usize * w + x as usize]
        }
    };
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            let m = mag[i];
            if m <= 0.0 {
                continue;
            }
            let angle = gy[i].atan2(gx[i]).to_degrees().rem_euclid(180.0);
            let (dx, dy) = if !(22.5..157.5).contains(&angle) {
                (1, 0)
            } else if angle < 67.5 {
                (1, 1)
            } else if angle < 112.5 {
                (0, 1)
            } else {
                (-1, 1)
            };
            let (xi, yi) = (x as isize, y as isize);
            let behind = at(xi - dx, yi - dy);
            let ahead = at(xi + dx, yi + dy);
            if m > behind && m >= ahead {
                out[i] = m;
            }
        }
    }
    out
}

/// Canny edge detector; the output is one pixel wide after suppression.
pub fn canny(image: &GrayImage, params: &CannyParams) -> Result<BinaryMap> {
    params.validate()?;
    let sigma = match *params {
        CannyParams::Explicit { sigma, .. } => sigma,
        CannyParams::Auto => std::f64::consts::SQRT_2,
    };
    let (w, h) = image.dims();
    let smooth = gaussian_blur(image, sigma);
    let (gx, gy) = sobel_gradients(&smooth);
    let mag = magnitude(&gx, &gy);
    let (low, high) = match *params {
        CannyParams::Explicit {
            low_frac,
            high_frac,
            ..
        } => {
            let mut nz: Vec<f64> = mag.iter().copied().filter(|&m| m > 0.0).collect();
            nz.sort_by(f64::total_cmp);
            (quantile(&nz, low_frac), quantile(&nz, high_frac))
        }
        CannyParams::Auto => {
            let high = otsu_threshold(&mag);
            (0.4 * high, high)
        }
    };
    let nms = non_maximum_suppression(&gx, &gy, &mag, w, h);
    if !high.is_finite() {
        return Ok(BinaryMap::new(w, h));
    }
    let low = low.max(f64::MIN_POSITIVE);
    Ok(hysteresis_values(&nms, w, h, low, high.max(low)))
}
