//! Complex shearlet-based edge and ridge measures.
//!
//! The crate builds a bank of complex (even + i·odd) cone-adapted shearlets in
//! the frequency domain, analyzes grayscale images against it and turns the
//! coefficients into phase-congruency style edge and ridge measures. Every
//! detected pixel also carries a tangent orientation, and thinned detections
//! yield curvature along traced curves.
//!
//! Besides the measures themselves the crate ships what is needed to benchmark
//! them: synthetic phantoms with analytic ground truth, the corruption
//! pipeline (blur, Gaussian and Poisson noise), Canny/Sobel baselines and
//! Pratt's figure of merit.
//!
//! ```no_run
//! use coshrem::{phantoms, pipeline::{DetectorConfig, Detector}};
//!
//! let (image, _truth) = phantoms::generate(&phantoms::PhantomSpec::edge_512()).unwrap();
//! let detector = Detector::new(DetectorConfig::edge_default(), image.width(), image.height()).unwrap();
//! let result = detector.detect(&image).unwrap();
//! println!("{} edge pixels", result.skeleton.count_on());
//! ```

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
mod error;
mod fft;
pub mod image;
pub mod measures;
pub mod metrics;
pub mod phantoms;
pub mod pipeline;
pub mod postprocess;
pub mod shearlets;
pub mod xform;

pub use error::{Error, Result};
pub use image::{BinaryMap, GrayImage, RgbImage};
pub use measures::{DetectionParams, MeasureKind, MeasureMap, OrientationMap, Polarity};
pub use shearlets::{ShearletSystem, SystemParams};
