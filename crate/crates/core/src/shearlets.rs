//! Frequency-domain bank of complex cone-adapted shearlets.
//!
//! Every filter is stored through its even-symmetric part, a real and
//! nonnegative spectrum. The odd-symmetric partner is its Hilbert transform
//! along the filter's primary axis, `odd = -i·sign(ξ_axis)·even`, so the
//! complex filter `even + i·odd` never has to be stored.
//!
//! Construction of the even spectrum for scale `j` and a horizontal-cone
//! filter with slope `k = s / 2^L`:
//!
//! ```text
//! even(ω1, ω2) = B_j(ω1) · exp(-(ω2/ω1 - k)² / (2 w_j²))
//! B_j(ω)       = (ω σ_j)² · exp(-(ω σ_j)² / 2)          (Mexican hat)
//! σ_j          = waveletSupport / 8 · 2^(-j / scalesPerOctave)
//! τ_j          = gaussianSupport / 8 · 2^(-α j / scalesPerOctave)
//! w_j          = σ_j / (√2 τ_j)
//! ```
//!
//! `σ_j` is the spatial width of the Mexican hat across the structure and
//! `τ_j` the width of the Gaussian along it; `w_j` is the slope width of the
//! transverse Gaussian seen at the band's peak frequency `√2 / σ_j`. Scale 0
//! is the coarsest. Vertical-cone filters swap `ω1` and `ω2`. The two cones
//! meet on the diagonals, where one filter per diagonal is kept: the average
//! of the horizontal and vertical constructions, whose Hilbert axis is the
//! diagonal itself.

use std::f64::consts::{PI, SQRT_2};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::fft::{signed_index, Fft2d};
use crate::image::MIN_TRANSFORM_SIDE;

/// Largest accepted shear level; `L = 6` already gives 258 orientations.
pub const MAX_SHEAR_LEVEL: u32 = 6;

/// The six parameters that define a shearlet system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SystemParams {
    /// Effective support (pixels) of the coarsest Mexican hat, `8σ`.
    pub wavelet_support: f64,
    /// Effective support (pixels) of the coarsest transverse Gaussian, `8τ`.
    pub gaussian_support: f64,
    pub scales_per_octave: u32,
    pub octaves: f64,
    pub shear_level: u32,
    /// Anisotropy in `[0, 1]`; 1 keeps the filter aspect fixed across scales.
    pub alpha: f64,
}

impl SystemParams {
    /// Defaults used for edge detection.
    pub fn edge_default() -> Self {
        Self {
            wavelet_support: 70.0,
            gaussian_support: 50.0,
            scales_per_octave: 2,
            octaves: 2.5,
            shear_level: 3,
            alpha: 0.5,
        }
    }

    /// Defaults used for ridge detection; the scales bracket lines a few pixels wide.
    pub fn ridge_default() -> Self {
        Self {
            wavelet_support: 40.0,
            gaussian_support: 60.0,
            scales_per_octave: 4,
            octaves: 0.75,
            shear_level: 3,
            alpha: 0.8,
        }
    }

    /// Number of scales, `round(octaves · scalesPerOctave)`.
    pub fn scale_count(&self) -> usize {
        (self.octaves * self.scales_per_octave as f64).round() as usize
    }

    /// Orientations per scale, `2·(2^(L+1) + 1) − 2`.
    pub fn orientation_count(&self) -> usize {
        2 * ((1usize << (self.shear_level + 1)) + 1) - 2
    }

    pub fn filter_count(&self) -> usize {
        self.scale_count() * self.orientation_count()
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::param("alpha", "must lie in [0, 1]"));
        }
        if self.scales_per_octave < 1 {
            return Err(Error::param("scalesPerOctave", "must be at least 1"));
        }
        if !(self.octaves > 0.0) || !self.octaves.is_finite() {
            return Err(Error::param("octaves", "must be positive"));
        }
        if self.scale_count() < 1 {
            return Err(Error::param(
                "octaves",
                "octaves × scalesPerOctave must round to at least one scale",
            ));
        }
        if self.shear_level > MAX_SHEAR_LEVEL {
            return Err(Error::param(
                "shearLevel",
                format!("must be at most {MAX_SHEAR_LEVEL}"),
            ));
        }
        if !(self.wavelet_support > 0.0) || !self.wavelet_support.is_finite() {
            return Err(Error::param("waveletSupport", "must be positive"));
        }
        if !(self.gaussian_support > 0.0) || !self.gaussian_support.is_finite() {
            return Err(Error::param("gaussianSupport", "must be positive"));
        }
        Ok(())
    }

    /// Spatial widths of scale `j`.
    pub fn scale_geometry(&self, j: usize) -> ScaleGeometry {
        let step = j as f64 / self.scales_per_octave as f64;
        let sigma = self.wavelet_support / 8.0 * 2f64.powf(-step);
        let tau = self.gaussian_support / 8.0 * 2f64.powf(-self.alpha * step);
        ScaleGeometry {
            sigma,
            tau,
            slope_width: sigma / (SQRT_2 * tau),
        }
    }
}

impl Default for SystemParams {
    fn default() -> Self {
        Self::edge_default()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaleGeometry {
    /// Mexican hat width across the structure (pixels).
    pub sigma: f64,
    /// Gaussian width along the structure (pixels).
    pub tau: f64,
    /// Width of the angular window in slope units.
    pub slope_width: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Cone {
    Horizontal,
    Vertical,
}

/// One orientation of the bank; identical across scales.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Orientation {
    pub cone: Cone,
    pub shear: i32,
    /// Tangent angle (degrees, `[0, 180)`, counter-clockwise from the +x axis
    /// with y pointing up) of the structures this orientation responds to most.
    pub angle: f64,
    /// Direction of the Hilbert axis in `(ω_x, ω_row)`.
    pub axis: [i8; 2],
}

impl Orientation {
    fn slope(&self, shear_level: u32) -> f64 {
        self.shear as f64 / (1u32 << shear_level) as f64
    }
}

fn angle_from_slope(cone: Cone, k: f64) -> f64 {
    let deg = match cone {
        Cone::Horizontal => 90.0 - k.atan().to_degrees(),
        Cone::Vertical => k.atan().to_degrees(),
    };
    deg.rem_euclid(180.0)
}

/// Orientations sorted by nominal tangent angle, starting at 0°.
pub fn orientation_table(shear_level: u32) -> Vec<Orientation> {
    let n = 1i32 << shear_level;
    let mut list = Vec::new();
    for s in -n..=n {
        let axis = if s == n {
            [1, 1]
        } else if s == -n {
            [1, -1]
        } else {
            [1, 0]
        };
        list.push(Orientation {
            cone: Cone::Horizontal,
            shear: s,
            angle: angle_from_slope(Cone::Horizontal, s as f64 / n as f64),
            axis,
        });
    }
    for s in -(n - 1)..=(n - 1) {
        list.push(Orientation {
            cone: Cone::Vertical,
            shear: s,
            angle: angle_from_slope(Cone::Vertical, s as f64 / n as f64),
            axis: [0, 1],
        });
    }
    list.sort_by(|a, b| a.angle.total_cmp(&b.angle));
    list
}

/// One complex shearlet, stored as its even spectrum (without scale gain).
#[derive(Debug, Clone)]
pub struct ShearletFilter {
    pub scale: usize,
    pub orientation: usize,
    pub cone: Cone,
    pub shear: i32,
    pub nominal_angle: f64,
    pub axis: [i8; 2],
    spectrum: Vec<f32>,
}

impl ShearletFilter {
    /// Real, nonnegative even spectrum on the DFT grid (row-major, bin order).
    pub fn even_spectrum(&self) -> &[f32] {
        &self.spectrum
    }

    fn is_diagonal(&self) -> bool {
        self.axis[0] != 0 && self.axis[1] != 0
    }
}

/// Sign of the projection of DFT bin `(k1, k2)` onto a Hilbert axis.
#[inline]
pub(crate) fn axis_sign(axis: [i8; 2], k1: isize, k2: isize, width: usize, height: usize) -> f64 {
    let p = axis[0] as f64 * k1 as f64 / width as f64 + axis[1] as f64 * k2 as f64 / height as f64;
    if p > 0.0 {
        1.0
    } else if p < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// A calibrated bank of complex shearlets for one image size.
#[derive(Debug, Clone)]
pub struct ShearletSystem {
    params: SystemParams,
    width: usize,
    height: usize,
    orientations: Vec<Orientation>,
    filters: Vec<ShearletFilter>,
    scale_gain: Vec<f64>,
    cache_key: String,
}

/// Builds and calibrates a system for `width × height` images.
pub fn build_system(params: SystemParams, width: usize, height: usize) -> Result<ShearletSystem> {
    ShearletSystem::build(params, width, height)
}

impl ShearletSystem {
    pub fn build(params: SystemParams, width: usize, height: usize) -> Result<Self> {
        check_size(&params, width, height)?;
        let orientations = orientation_table(params.shear_level);
        let n_or = orientations.len();
        let filters: Vec<ShearletFilter> = (0..params.filter_count())
            .into_par_iter()
            .map(|index| {
                let (scale, o) = (index / n_or, index % n_or);
                let orient = orientations[o];
                ShearletFilter {
                    scale,
                    orientation: o,
                    cone: orient.cone,
                    shear: orient.shear,
                    nominal_angle: orient.angle,
                    axis: orient.axis,
                    spectrum: even_spectrum(&params, scale, &orient, width, height),
                }
            })
            .collect();
        let system = Self {
            params,
            width,
            height,
            orientations,
            filters,
            scale_gain: vec![1.0; params.scale_count()],
            cache_key: cache_key(&params, width, height),
        };
        calibrate_scales(system)
    }

    /// Reassembles a system from stored spectra and gains, e.g. from a cache file.
    pub fn from_parts(
        params: SystemParams,
        width: usize,
        height: usize,
        spectra: Vec<Vec<f32>>,
        scale_gain: Vec<f64>,
    ) -> Result<Self> {
        check_size(&params, width, height)?;
        if spectra.len() != params.filter_count() {
            return Err(Error::param(
                "spectra",
                format!("expected {} filters, got {}", params.filter_count(), spectra.len()),
            ));
        }
        if spectra.iter().any(|s| s.len() != width * height) {
            return Err(Error::param("spectra", "spectrum size does not match the grid"));
        }
        if scale_gain.len() != params.scale_count() || scale_gain.iter().any(|g| !(*g > 0.0)) {
            return Err(Error::param("scaleGain", "one positive gain per scale required"));
        }
        let orientations = orientation_table(params.shear_level);
        let n_or = orientations.len();
        let filters = spectra
            .into_iter()
            .enumerate()
            .map(|(index, spectrum)| {
                let orient = orientations[index % n_or];
                ShearletFilter {
                    scale: index / n_or,
                    orientation: index % n_or,
                    cone: orient.cone,
                    shear: orient.shear,
                    nominal_angle: orient.angle,
                    axis: orient.axis,
                    spectrum,
                }
            })
            .collect();
        Ok(Self {
            params,
            width,
            height,
            orientations,
            filters,
            scale_gain,
            cache_key: cache_key(&params, width, height),
        })
    }

    pub fn params(&self) -> &SystemParams {
        &self.params
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

    pub fn filters(&self) -> &[ShearletFilter] {
        &self.filters
    }

    pub fn filter(&self, scale: usize, orientation: usize) -> &ShearletFilter {
        &self.filters[self.filter_index(scale, orientation)]
    }

    /// Filters are stored scale-major: index = `scale · N_or + orientation`.
    pub fn filter_index(&self, scale: usize, orientation: usize) -> usize {
        scale * self.orientations.len() + orientation
    }

    pub fn scale_count(&self) -> usize {
        self.scale_gain.len()
    }

    pub fn orientation_count(&self) -> usize {
        self.orientations.len()
    }

    pub fn orientations(&self) -> &[Orientation] {
        &self.orientations
    }

    pub fn scale_gain(&self) -> &[f64] {
        &self.scale_gain
    }

    pub fn cache_key(&self) -> &str {
        &self.cache_key
    }

    /// Approximate heap size of the stored spectra in bytes.
    pub fn spectra_bytes(&self) -> usize {
        self.filters.len() * self.width * self.height * std::mem::size_of::<f32>()
    }

    /// Orientation index of the unsheared horizontal-cone filter (tangent 90°).
    pub fn vertical_edge_orientation(&self) -> usize {
        self.orientations
            .iter()
            .position(|o| o.cone == Cone::Horizontal && o.shear == 0)
            .expect("every table has an unsheared horizontal filter")
    }

    /// Complex spectrum `even + i·odd` of a filter (without gain).
    pub fn complex_spectrum(&self, filter: usize) -> Vec<Complex64> {
        let f = &self.filters[filter];
        self.grid_map(f, |e, sign| Complex64::new(e * (1.0 + sign), 0.0))
    }

    /// Odd spectrum `-i·sign(ξ_axis)·even` of a filter (without gain).
    pub fn odd_spectrum(&self, filter: usize) -> Vec<Complex64> {
        let f = &self.filters[filter];
        self.grid_map(f, |e, sign| Complex64::new(0.0, -sign * e))
    }

    fn grid_map(&self, f: &ShearletFilter, op: impl Fn(f64, f64) -> Complex64) -> Vec<Complex64> {
        let mut out = Vec::with_capacity(self.width * self.height);
        for k2 in 0..self.height {
            let s2 = signed_index(k2, self.height);
            for k1 in 0..self.width {
                let s1 = signed_index(k1, self.width);
                let sign = axis_sign(f.axis, s1, s2, self.width, self.height);
                out.push(op(f.spectrum[k2 * self.width + k1] as f64, sign));
            }
        }
        out
    }

    /// Tangent angle at a fractional orientation position.
    ///
    /// `offset ∈ [-0.5, 0.5]` moves from orientation `index` towards its
    /// cyclic neighbor; the slope is interpolated linearly within the cone
    /// of the non-diagonal endpoint and converted to an angle.
    pub fn refined_angle(&self, index: usize, offset: f64) -> f64 {
        let n = self.orientations.len();
        let a = self.orientations[index];
        if offset == 0.0 || n < 2 {
            return a.angle;
        }
        let b = if offset > 0.0 {
            self.orientations[(index + 1) % n]
        } else {
            self.orientations[(index + n - 1) % n]
        };
        let is_diag = |o: &Orientation| o.axis[0] != 0 && o.axis[1] != 0;
        let cone = if is_diag(&a) { b.cone } else { a.cone };
        let level = self.params.shear_level;
        let (ka, kb) = (a.slope(level), b.slope(level));
        let t = offset.abs().min(0.5);
        angle_from_slope(cone, ka + t * (kb - ka))
    }
}

fn check_size(params: &SystemParams, width: usize, height: usize) -> Result<()> {
    params.validate()?;
    if width < MIN_TRANSFORM_SIDE || height < MIN_TRANSFORM_SIDE {
        return Err(Error::ImageTooSmall {
            width,
            height,
            min: MIN_TRANSFORM_SIDE,
        });
    }
    let side = width.min(height) as f64;
    if params.wavelet_support > side || params.gaussian_support > side {
        return Err(Error::param(
            "waveletSupport",
            format!(
                "supports ({}, {}) exceed the smallest image side {side}",
                params.wavelet_support, params.gaussian_support
            ),
        ));
    }
    Ok(())
}

#[inline]
fn cone_value(along: f64, across: f64, slope: f64, g: &ScaleGeometry) -> f64 {
    if along == 0.0 {
        return 0.0;
    }
    let r = along * g.sigma;
    let band = r * r * (-0.5 * r * r).exp();
    let u = across / along - slope;
    band * (-0.5 * (u / g.slope_width).powi(2)).exp()
}

fn even_spectrum(
    params: &SystemParams,
    scale: usize,
    orient: &Orientation,
    width: usize,
    height: usize,
) -> Vec<f32> {
    let g = params.scale_geometry(scale);
    let k = orient.slope(params.shear_level);
    let diagonal = orient.axis[0] != 0 && orient.axis[1] != 0;
    let mut out = vec![0f32; width * height];
    for k2 in 0..height {
        if height.is_multiple_of(2) && k2 == height / 2 {
            continue;
        }
        let w2 = 2.0 * PI * signed_index(k2, height) as f64 / height as f64;
        for k1 in 0..width {
            if width.is_multiple_of(2) && k1 == width / 2 {
                continue;
            }
            let w1 = 2.0 * PI * signed_index(k1, width) as f64 / width as f64;
            let v = if diagonal {
                0.5 * (cone_value(w1, w2, k, &g) + cone_value(w2, w1, k, &g))
            } else {
                match orient.cone {
                    Cone::Horizontal => cone_value(w1, w2, k, &g),
                    Cone::Vertical => cone_value(w2, w1, k, &g),
                }
            };
            out[k2 * width + k1] = v as f32;
        }
    }
    out
}

/// Column of the rising edge in the calibration image.
pub(crate) fn calibration_edge_column(width: usize) -> usize {
    width / 4
}

/// Periodic pair of ideal unit steps: rising at `width/4`, falling half a
/// period later, with the half-intensity sample on each step's center pixel.
pub fn calibration_step(width: usize, height: usize) -> Vec<f64> {
    let c1 = calibration_edge_column(width);
    let c2 = c1 + width / 2;
    let row: Vec<f64> = (0..width)
        .map(|x| {
            if x == c1 || x == c2 {
                0.5
            } else if x > c1 && x < c2 {
                1.0
            } else {
                0.0
            }
        })
        .collect();
    (0..height).flat_map(|_| row.iter().copied()).collect()
}

/// Sets one gain per scale so that the unsheared horizontal-cone filter's
/// odd response to the calibration step peaks at exactly 1.
///
/// Gains are recomputed from the stored spectra, so calibrating twice is a
/// no-op.
pub fn calibrate_scales(mut system: ShearletSystem) -> Result<ShearletSystem> {
    let (w, h) = system.dims();
    let fft = Fft2d::new(w, h);
    let mut step: Vec<Complex64> = calibration_step(w, h)
        .into_iter()
        .map(|v| Complex64::new(v, 0.0))
        .collect();
    fft.forward(&mut step);
    let o = system.vertical_edge_orientation();
    let gains: Vec<f64> = (0..system.scale_count())
        .into_par_iter()
        .map(|j| {
            let f = system.filter(j, o);
            let mut buf = step.clone();
            apply_filter(&mut buf, f, 1.0, w, h);
            fft.inverse(&mut buf);
            let peak = buf.iter().map(|c| c.im.abs()).fold(0.0, f64::max);
            if peak > 1e-12 {
                Ok(1.0 / peak)
            } else {
                Err(Error::DegenerateFilter { scale: j })
            }
        })
        .collect::<Result<_>>()?;
    system.scale_gain = gains;
    Ok(system)
}

/// Multiplies an image spectrum in place by the correlation kernel of the
/// complex filter: `even · (1 − sign(ξ_axis)) · gain`. The inverse transform
/// then holds the even coefficients in the real part and the odd ones in the
/// imaginary part.
pub(crate) fn apply_filter(
    spectrum: &mut [Complex64],
    filter: &ShearletFilter,
    gain: f64,
    width: usize,
    height: usize,
) {
    let even = &filter.spectrum;
    if !filter.is_diagonal() && filter.axis == [1, 0] {
        for k2 in 0..height {
            let row = &mut spectrum[k2 * width..(k2 + 1) * width];
            let erow = &even[k2 * width..(k2 + 1) * width];
            for (k1, (v, &e)) in row.iter_mut().zip(erow).enumerate() {
                let s1 = signed_index(k1, width);
                let m = if s1 > 0 {
                    0.0
                } else if s1 < 0 {
                    2.0
                } else {
                    1.0
                };
                *v *= e as f64 * m * gain;
            }
        }
        return;
    }
    for k2 in 0..height {
        let s2 = signed_index(k2, height);
        for k1 in 0..width {
            let s1 = signed_index(k1, width);
            let i = k2 * width + k1;
            let sign = axis_sign(filter.axis, s1, s2, width, height);
            spectrum[i] *= even[i] as f64 * (1.0 - sign) * gain;
        }
    }
}

/// Deterministic SHA-256 digest of the system parameters and grid size.
pub fn cache_key(params: &SystemParams, width: usize, height: usize) -> String {
    let mut hasher = Sha256::new();
    hasher.update(b"coshrem-system-v1");
    hasher.update(params.wavelet_support.to_le_bytes());
    hasher.update(params.gaussian_support.to_le_bytes());
    hasher.update(params.scales_per_octave.to_le_bytes());
    hasher.update(params.octaves.to_le_bytes());
    hasher.update(params.shear_level.to_le_bytes());
    hasher.update(params.alpha.to_le_bytes());
    hasher.update((width as u64).to_le_bytes());
    hasher.update((height as u64).to_le_bytes());
    hex::encode(hasher.finalize())
}
