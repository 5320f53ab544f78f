//! Pratt's figure of merit and the exact Euclidean distance transform.

use crate::error::{Error, Result};
use crate::image::BinaryMap;

/// The usual scaling constant of the figure of merit.
pub const PRATT_A: f64 = 1.0 / 9.0;

/// Euclidean distance from every pixel to the nearest reference pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMap {
    width: usize,
    height: usize,
    squared: Vec<f64>,
}

impl DistanceMap {
    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.squared[y * self.width + x].sqrt()
    }

    pub fn squared(&self, x: usize, y: usize) -> f64 {
        self.squared[y * self.width + x]
    }
}

/// Lower envelope of parabolas (Felzenszwalb & Huttenlocher). Infinite
/// entries contribute no parabola.
fn edt_1d(f: &[f64], v: &mut [usize], z: &mut [f64], out: &mut [f64]) {
    let mut k: usize = 0;
    let mut any = false;
    for q in 0..f.len() {
        if f[q].is_infinite() {
            continue;
        }
        if !any {
            any = true;
            v[0] = q;
            z[0] = f64::NEG_INFINITY;
            z[1] = f64::INFINITY;
            continue;
        }
        let mut s;
        loop {
            let p = v[k];
            s = ((f[q] + (q * q) as f64) - (f[p] + (p * p) as f64)) / (2.0 * (q - p) as f64);
            if s <= z[k] {
                k -= 1;
            } else {
                break;
            }
        }
        k += 1;
        v[k] = q;
        z[k] = s;
        z[k + 1] = f64::INFINITY;
    }
    if !any {
        out.iter_mut().for_each(|o| *o = f64::INFINITY);
        return;
    }
    k = 0;
    for (q, o) in out.iter_mut().enumerate() {
        while z[k + 1] < q as f64 {
            k += 1;
        }
        let d = q as f64 - v[k] as f64;
        *o = d * d + f[v[k]];
    }
}

/// Exact Euclidean distance transform of a nonempty reference map.
pub fn distance_transform(reference: &BinaryMap) -> Result<DistanceMap> {
    if reference.is_empty() {
        return Err(Error::EmptyReference);
    }
    let (w, h) = reference.dims();
    let n = w.max(h);
    let mut grid: Vec<f64> = reference
        .mask()
        .iter()
        .map(|&on| if on { 0.0 } else { f64::INFINITY })
        .collect();
    let (mut f, mut out) = (vec![0.0; n], vec![0.0; n]);
    let (mut v, mut z) = (vec![0usize; n], vec![0.0; n + 1]);
    for x in 0..w {
        for y in 0..h {
            f[y] = grid[y * w + x];
        }
        edt_1d(&f[..h], &mut v, &mut z, &mut out[..h]);
        for y in 0..h {
            grid[y * w + x] = out[y];
        }
    }
    for y in 0..h {
        f[..w].copy_from_slice(&grid[y * w..(y + 1) * w]);
        edt_1d(&f[..w], &mut v, &mut z, &mut out[..w]);
        grid[y * w..(y + 1) * w].copy_from_slice(&out[..w]);
    }
    Ok(DistanceMap {
        width: w,
        height: h,
        squared: grid,
    })
}

/// Pratt's figure of merit of `detected` against `truth`.
///
/// Both maps empty scores 1; an empty detection against a nonempty truth
/// scores 0.
pub fn pfom(detected: &BinaryMap, truth: &BinaryMap, a: f64) -> Result<f64> {
    if detected.dims() != truth.dims() {
        return Err(Error::DimensionMismatch {
            expected: truth.dims(),
            actual: detected.dims(),
        });
    }
    if !(a > 0.0) || !a.is_finite() {
        return Err(Error::param("a", "must be positive"));
    }
    let (nd, nt) = (detected.count_on(), truth.count_on());
    match (nd, nt) {
        (0, 0) => return Ok(1.0),
        (0, _) => return Ok(0.0),
        (_, 0) => return Ok(0.0),
        _ => {}
    }
    let dist = distance_transform(truth)?;
    let sum: f64 = detected
        .on_pixels()
        .map(|(x, y)| 1.0 / (1.0 + a * dist.squared(x, y)))
        .sum();
    Ok(sum / nd.max(nt) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pythagorean_distance() {
        let mut r = BinaryMap::new(10, 10);
        r.set(1, 2, true);
        let d = distance_transform(&r).unwrap();
        assert_eq!(d.get(1, 2), 0.0);
        assert_eq!(d.get(4, 6), 5.0);
        assert!(distance_transform(&BinaryMap::new(3, 3)).is_err());
    }

    #[test]
    fn single_pixel_pfom() {
        let mut t = BinaryMap::new(10, 10);
        t.set(2, 2, true);
        let mut d = BinaryMap::new(10, 10);
        d.set(5, 2, true);
        assert!((pfom(&d, &t, PRATT_A).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(pfom(&t, &t, PRATT_A).unwrap(), 1.0);
        assert_eq!(pfom(&BinaryMap::new(10, 10), &t, PRATT_A).unwrap(), 0.0);
        let e = BinaryMap::new(10, 10);
        assert_eq!(pfom(&e, &e, PRATT_A).unwrap(), 1.0);
    }

    #[test]
    fn far_pixel_lowers_score() {
        let t = BinaryMap::from_fn(20, 20, |x, y| y == 10 && x < 15);
        let mut d = t.clone();
        let base = pfom(&d, &t, PRATT_A).unwrap();
        d.set(0, 0, true);
        assert!(pfom(&d, &t, PRATT_A).unwrap() < base);
    }
}
