//! Raster types and color renders of detection layers.
//!
//! Intensities are carried as `f64` on a nominal `[0, 255]` scale and are
//! never clamped here; clamping only happens when an image is encoded.

use crate::error::{Error, Result};
use crate::measures::{CurvatureMap, MeasureMap, OrientationMap};

/// Smallest side length accepted by the transform.
pub const MIN_TRANSFORM_SIDE: usize = 8;

/// Real-valued grayscale raster, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::param(
                "data",
                format!("expected {} values, got {}", width * height, data.len()),
            ));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: f64) {
        self.data[y * self.width + x] = value;
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Circular shift: the pixel at `(x, y)` moves to `(x + dx, y + dy)` modulo the size.
    pub fn shifted(&self, dx: isize, dy: isize) -> Self {
        let (w, h) = (self.width as isize, self.height as isize);
        Self::from_fn(self.width, self.height, |x, y| {
            let sx = (x as isize - dx).rem_euclid(w) as usize;
            let sy = (y as isize - dy).rem_euclid(h) as usize;
            self.get(sx, sy)
        })
    }

    /// Rotation by 90° counter-clockwise as seen on screen (rows grow downward).
    pub fn rotated_ccw(&self) -> Self {
        let (w, h) = (self.width, self.height);
        Self::from_fn(h, w, |x, y| self.get(w - 1 - y, x))
    }

    pub(crate) fn check_finite(&self) -> Result<()> {
        match self.data.iter().position(|v| !v.is_finite()) {
            Some(i) => Err(Error::NonFinite {
                x: i % self.width,
                y: i / self.width,
            }),
            None => Ok(()),
        }
    }
}

/// Boolean raster, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMap {
    width: usize,
    height: usize,
    mask: Vec<bool>,
}

impl BinaryMap {
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            mask: vec![false; width * height],
        }
    }

    pub fn from_mask(width: usize, height: usize, mask: Vec<bool>) -> Result<Self> {
        if mask.len() != width * height {
            return Err(Error::param(
                "mask",
                format!("expected {} values, got {}", width * height, mask.len()),
            ));
        }
        Ok(Self {
            width,
            height,
            mask,
        })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut mask = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                mask.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            mask,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.mask[y * self.width + x]
    }

    /// Out-of-bounds coordinates read as background.
    #[inline]
    pub fn get_signed(&self, x: isize, y: isize) -> bool {
        x >= 0
            && y >= 0
            && (x as usize) < self.width
            && (y as usize) < self.height
            && self.mask[y as usize * self.width + x as usize]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, on: bool) {
        self.mask[y * self.width + x] = on;
    }

    pub fn count_on(&self) -> usize {
        self.mask.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.mask.iter().any(|&b| b)
    }

    pub fn on_pixels(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.mask
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(move |(i, _)| (i % self.width, i / self.width))
    }

    /// Number of on-pixels among the 8 neighbors of `(x, y)`.
    pub fn neighbor_count(&self, x: usize, y: usize) -> usize {
        let (x, y) = (x as isize, y as isize);
        NEIGHBORS_8
            .iter()
            .filter(|(dx, dy)| self.get_signed(x + dx, y + dy))
            .count()
    }

    pub fn shifted(&self, dx: isize, dy: isize) -> Self {
        let (w, h) = (self.width as isize, self.height as isize);
        Self::from_fn(self.width, self.height, |x, y| {
            let sx = (x as isize - dx).rem_euclid(w) as usize;
            let sy = (y as isize - dy).rem_euclid(h) as usize;
            self.get(sx, sy)
        })
    }
}

/// 8-neighborhood offsets in ring order starting east, counter-clockwise on screen.
pub(crate) const NEIGHBORS_8: [(isize, isize); 8] = [
    (1, 0),
    (1, -1),
    (0, -1),
    (-1, -1),
    (-1, 0),
    (-1, 1),
    (0, 1),
    (1, 1),
];

/// 8-bit RGB raster, interleaved.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbImage {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl RgbImage {
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            data: vec![0; width * height * 3],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Interleaved `r, g, b` bytes.
    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn get(&self, x: usize, y: usize) -> [u8; 3] {
        let i = (y * self.width + x) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    pub fn set(&mut self, x: usize, y: usize, rgb: [u8; 3]) {
        let i = (y * self.width + x) * 3;
        self.data[i..i + 3].copy_from_slice(&rgb);
    }
}

pub const DARK_RED: [u8; 3] = [139, 0, 0];
pub const LIGHT_BLUE: [u8; 3] = [173, 216, 230];
/// Color of pixels where an angle layer is undefined.
pub const UNDEFINED_COLOR: [u8; 3] = [255, 255, 255];
pub const BACKGROUND_GAIN: f64 = 1.5;

/// What to paint over the background in [`render_overlay`].
#[derive(Debug, Clone, Copy)]
pub enum Overlay<'a> {
    Binary(&'a BinaryMap),
    Measure(&'a MeasureMap),
}

/// Angle layer for [`render_anglemap`].
#[derive(Debug, Clone, Copy)]
pub enum AngleLayer<'a> {
    Orientation(&'a OrientationMap),
    Curvature(&'a CurvatureMap),
}

fn blend(a: [u8; 3], b: [u8; 3], t: f64) -> [u8; 3] {
    let t = t.clamp(0.0, 1.0);
    let mix = |p: u8, q: u8| (p as f64 * (1.0 - t) + q as f64 * t).round() as u8;
    [mix(a[0], b[0]), mix(a[1], b[1]), mix(a[2], b[2])]
}

/// Brightened grayscale background with the detection painted in dark red.
///
/// Binary maps paint on-pixels opaquely; measure maps blend red over the
/// background with opacity equal to the measure value.
pub fn render_overlay(base: &GrayImage, detection: Overlay<'_>) -> Result<RgbImage> {
    let dims = match detection {
        Overlay::Binary(b) => b.dims(),
        Overlay::Measure(m) => m.dims(),
    };
    if dims != base.dims() {
        return Err(Error::DimensionMismatch {
            expected: base.dims(),
            actual: dims,
        });
    }
    let mut out = RgbImage::new(base.width(), base.height());
    for y in 0..base.height() {
        for x in 0..base.width() {
            let g = (base.get(x, y) * BACKGROUND_GAIN).clamp(0.0, 255.0).round() as u8;
            let alpha = match detection {
                Overlay::Binary(b) => {
                    if b.get(x, y) {
                        1.0
                    } else {
                        0.0
                    }
                }
                Overlay::Measure(m) => m.get(x, y),
            };
            out.set(x, y, blend([g, g, g], DARK_RED, alpha));
        }
    }
    Ok(out)
}

/// Position on the light-blue to dark-red ramp for a value of a layer.
pub fn colormap(t: f64) -> [u8; 3] {
    blend(LIGHT_BLUE, DARK_RED, t)
}

/// Color-coded orientation or curvature.
///
/// Orientations are shown as deviation from horizontal over `[0°, 90°]`;
/// `range_deg` sets the saturation point of curvature renders and is ignored
/// for orientations.
pub fn render_anglemap(values: AngleLayer<'_>, range_deg: f64) -> Result<RgbImage> {
    if !(range_deg > 0.0) {
        return Err(Error::param("range", "must be positive"));
    }
    let (w, h) = match values {
        AngleLayer::Orientation(o) => o.dims(),
        AngleLayer::Curvature(c) => c.dims(),
    };
    let mut out = RgbImage::new(w, h);
    for y in 0..h {
        for x in 0..w {
            let t = match values {
                AngleLayer::Orientation(o) => o.get(x, y).map(|theta| {
                    let theta = theta.rem_euclid(180.0);
                    theta.min(180.0 - theta) / 90.0
                }),
                AngleLayer::Curvature(c) => c.get(x, y).map(|k| (k / range_deg).min(1.0)),
            };
            out.set(x, y, t.map_or(UNDEFINED_COLOR, colormap));
        }
    }
    Ok(out)
}
