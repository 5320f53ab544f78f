//! Complex shearlet coefficients by frequency-domain multiplication.
//!
//! Convolution is circular: structures near one border see the opposite
//! border. Pad images by at least `waveletSupport` pixels if that matters.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fft::Fft2d;
use crate::image::GrayImage;
use crate::shearlets::{apply_filter, ShearletSystem};

/// Coefficients of one image against every filter of a system.
///
/// Planes are stored per filter; the real part of a coefficient is the even
/// (symmetric) response, the imaginary part the odd one.
#[derive(Debug, Clone)]
pub struct CoefficientVolume {
    width: usize,
    height: usize,
    cache_key: String,
    planes: Vec<Vec<Complex64>>,
}

impl CoefficientVolume {
    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn filter_count(&self) -> usize {
        self.planes.len()
    }

    /// Cache key of the system the volume was computed with.
    pub fn cache_key(&self) -> &str {
        &self.cache_key
    }

    pub fn plane(&self, filter: usize) -> &[Complex64] {
        &self.planes[filter]
    }

    pub fn get(&self, filter: usize, x: usize, y: usize) -> Complex64 {
        self.planes[filter][y * self.width + x]
    }

    pub(crate) fn check_system(&self, system: &ShearletSystem) -> Result<()> {
        if self.cache_key != system.cache_key() || self.planes.len() != system.filters().len() {
            return Err(Error::SystemMismatch);
        }
        Ok(())
    }
}

/// Shared state for transforming one image: its spectrum and the FFT plan.
pub(crate) struct Analyzer<'a> {
    system: &'a ShearletSystem,
    fft: Fft2d,
    spectrum: Vec<Complex64>,
}

impl<'a> Analyzer<'a> {
    pub fn new(system: &'a ShearletSystem, image: &GrayImage) -> Result<Self> {
        if image.dims() != system.dims() {
            return Err(Error::DimensionMismatch {
                expected: system.dims(),
                actual: image.dims(),
            });
        }
        image.check_finite()?;
        let (w, h) = system.dims();
        let fft = Fft2d::new(w, h);
        let mut spectrum: Vec<Complex64> = image
            .data()
            .iter()
            .map(|&v| Complex64::new(v, 0.0))
            .collect();
        fft.forward(&mut spectrum);
        Ok(Self {
            system,
            fft,
            spectrum,
        })
    }

    pub fn system(&self) -> &ShearletSystem {
        self.system
    }

    /// Coefficient plane of one filter, gain applied.
    pub fn filter_plane(&self, filter: usize) -> Vec<Complex64> {
        let f = &self.system.filters()[filter];
        let gain = self.system.scale_gain()[f.scale];
        let (w, h) = self.system.dims();
        let mut buf = self.spectrum.clone();
        apply_filter(&mut buf, f, gain, w, h);
        self.fft.inverse(&mut buf);
        buf
    }

    /// Planes of all scales at one orientation, coarsest first.
    pub fn orientation_planes(&self, orientation: usize) -> Vec<Vec<Complex64>> {
        (0..self.system.scale_count())
            .map(|j| self.filter_plane(self.system.filter_index(j, orientation)))
            .collect()
    }
}

/// Analyzes `image` with every filter of `system`.
///
/// Memory grows with `width · height · filters · 16` bytes; large images are
/// better served by the streaming measures in [`crate::measures`].
pub fn analyze(system: &ShearletSystem, image: &GrayImage) -> Result<CoefficientVolume> {
    let analyzer = Analyzer::new(system, image)?;
    let planes = (0..system.filters().len())
        .into_par_iter()
        .map(|i| analyzer.filter_plane(i))
        .collect();
    Ok(CoefficientVolume {
        width: system.width(),
        height: system.height(),
        cache_key: system.cache_key().to_string(),
        planes,
    })
}

/// All coefficients at one pixel, in filter-index order.
pub fn coefficients_at(
    volume: &CoefficientVolume,
    x: usize,
    y: usize,
) -> Result<Vec<(usize, Complex64)>> {
    if x >= volume.width || y >= volume.height {
        return Err(Error::OutOfBounds {
            x,
            y,
            width: volume.width,
            height: volume.height,
        });
    }
    Ok((0..volume.planes.len())
        .map(|i| (i, volume.get(i, x, y)))
        .collect())
}
