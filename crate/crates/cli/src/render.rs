//! PNG layers and summary statistics of a detection.

use std::str::FromStr;

use coshrem::image::{render_anglemap, render_overlay, AngleLayer, Overlay};
use coshrem::measures::median;
use coshrem::pipeline::{CacheLookup, Detection};
use coshrem::{GrayImage, OrientationMap};
use serde::{Deserialize, Serialize};

use crate::io::{self, ImageIoError};

/// Curvature (degrees per pixel) rendered at full saturation.
pub const CURVATURE_RANGE: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Layer {
    Measure,
    Overlay,
    Orientation,
    Curvature,
    Skeleton,
}

impl Layer {
    pub const ALL: [Layer; 5] = [
        Layer::Measure,
        Layer::Overlay,
        Layer::Orientation,
        Layer::Curvature,
        Layer::Skeleton,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Layer::Measure => "measure",
            Layer::Overlay => "overlay",
            Layer::Orientation => "orientation",
            Layer::Curvature => "curvature",
            Layer::Skeleton => "skeleton",
        }
    }
}

impl FromStr for Layer {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Layer::ALL
            .into_iter()
            .find(|l| l.as_str() == s)
            .ok_or_else(|| format!("unknown layer `{s}`"))
    }
}

/// Orientation restricted to skeleton pixels, the only ones worth coloring.
fn skeleton_orientation(det: &Detection) -> OrientationMap {
    let (w, h) = det.skeleton.dims();
    let values = det
        .skeleton
        .mask()
        .iter()
        .zip(det.orientation.values())
        .map(|(&on, &theta)| if on { theta } else { None })
        .collect();
    OrientationMap::from_values(w, h, values).expect("same dimensions")
}

/// Encodes one layer as PNG.
pub fn render_layer(base: &GrayImage, det: &Detection, layer: Layer) -> Result<Vec<u8>, ImageIoError> {
    match layer {
        Layer::Measure => io::measure_png(&det.measure),
        Layer::Skeleton => io::binary_png(&det.skeleton),
        Layer::Overlay => io::rgb_png(&render_overlay(base, Overlay::Binary(&det.skeleton))?),
        Layer::Orientation => {
            let masked = skeleton_orientation(det);
            io::rgb_png(&render_anglemap(AngleLayer::Orientation(&masked), CURVATURE_RANGE)?)
        }
        Layer::Curvature => io::rgb_png(&render_anglemap(
            AngleLayer::Curvature(&det.curvature),
            CURVATURE_RANGE,
        )?),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DetectionStats {
    pub width: usize,
    pub height: usize,
    pub measure_max: f64,
    pub measure_mean: f64,
    /// Pixels with a positive measure.
    pub measure_nonzero: usize,
    pub skeleton_pixels: usize,
    /// Skeleton pixels without an orientation estimate.
    pub skipped_pixels: usize,
    /// Median absolute curvature along the skeleton, degrees per pixel.
    pub median_curvature: Option<f64>,
}

impl DetectionStats {
    pub fn of(det: &Detection) -> Self {
        let values = det.measure.values();
        let (width, height) = det.measure.dims();
        Self {
            width,
            height,
            measure_max: det.measure.max(),
            measure_mean: values.iter().sum::<f64>() / values.len() as f64,
            measure_nonzero: values.iter().filter(|&&m| m > 0.0).count(),
            skeleton_pixels: det.skeleton.count_on(),
            skipped_pixels: det.skipped.len(),
            median_curvature: median(det.curvature.defined().map(f64::abs)),
        }
    }
}

/// Time split of one detection, milliseconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Timings {
    /// Constructing the shearlet system; 0 when it came from a cache.
    pub build_ms: f64,
    /// Fetching a cached system from memory or disk.
    pub load_ms: f64,
    pub detect_ms: f64,
    pub total_ms: f64,
}

impl Timings {
    pub fn new(lookup: &CacheLookup, detect_ms: f64, total_ms: f64) -> Self {
        Self {
            build_ms: lookup.build_ms,
            load_ms: lookup.load_ms,
            detect_ms,
            total_ms,
        }
    }
}
