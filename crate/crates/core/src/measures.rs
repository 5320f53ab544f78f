//! Edge and ridge measures, pivot orientations, tangent angles and curvature.
//!
//! At every pixel the orientation whose primary coefficients (odd for edges,
//! even for ridges) carry the most energy over the pivot scales is chosen.
//! With `p_j` the primary and `q_j` the quadrature coefficients of that
//! orientation across all `J` scales,
//!
//! ```text
//! M = max(0, (|Σ p_j| − Σ |q_j|) / (J · max |p_j| + ε))
//! ```
//!
//! and `M = 0` wherever `max |p_j| < minContrast`. An ideal edge has equal
//! odd responses at every scale and no even response, so `M = 1` there.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{BinaryMap, GrayImage};
use crate::postprocess::trace_curves;
use crate::shearlets::{Cone, Orientation, ShearletSystem};
use crate::xform::{Analyzer, CoefficientVolume};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeasureKind {
    Edge,
    Ridge,
}

impl MeasureKind {
    pub fn as_str(self) -> &'static str {
        match self {
            MeasureKind::Edge => "edge",
            MeasureKind::Ridge => "ridge",
        }
    }
}

/// Which sign of `Σ p_j` is kept: rising edges / bright ridges are positive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    Positive,
    Negative,
    Both,
}

impl Polarity {
    fn accepts(self, sum: f64) -> bool {
        match self {
            Polarity::Positive => sum > 0.0,
            Polarity::Negative => sum < 0.0,
            Polarity::Both => true,
        }
    }
}

/// The four parameters of the detection stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DetectionParams {
    /// Floor on `max |p_j|` (intensity units) below which the measure is 0.
    pub min_contrast: f64,
    /// `ε = epsilonFactor · minContrast`.
    pub epsilon_factor: f64,
    /// Scale indices whose primary magnitudes decide the pivot orientation.
    pub pivot_scales: Vec<usize>,
    pub polarity: Polarity,
}

impl DetectionParams {
    pub fn edge_default() -> Self {
        Self {
            min_contrast: 90.0,
            epsilon_factor: 0.5,
            pivot_scales: vec![0, 1, 2],
            polarity: Polarity::Both,
        }
    }

    pub fn ridge_default() -> Self {
        Self {
            min_contrast: 100.0,
            epsilon_factor: 0.1,
            pivot_scales: vec![0, 1, 2],
            polarity: Polarity::Positive,
        }
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon_factor * self.min_contrast
    }

    /// Checks the parameters against a system with `scales` scales.
    pub fn validate(&self, scales: usize) -> Result<()> {
        if !(self.min_contrast > 0.0) || !self.min_contrast.is_finite() {
            return Err(Error::param("minContrast", "must be positive"));
        }
        if !(self.epsilon_factor > 0.0) || !self.epsilon_factor.is_finite() {
            return Err(Error::param("epsilonFactor", "must be positive"));
        }
        if self.pivot_scales.is_empty() {
            return Err(Error::param("pivotScales", "must not be empty"));
        }
        if let Some(&bad) = self.pivot_scales.iter().find(|&&j| j >= scales) {
            return Err(Error::param(
                "pivotScales",
                format!("scale {bad} does not exist (system has {scales} scales)"),
            ));
        }
        Ok(())
    }
}

/// Per-pixel measure in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasureMap {
    width: usize,
    height: usize,
    kind: MeasureKind,
    values: Vec<f64>,
}

impl MeasureMap {
    pub fn from_values(
        width: usize,
        height: usize,
        values: Vec<f64>,
        kind: MeasureKind,
    ) -> Result<Self> {
        if values.len() != width * height {
            return Err(Error::DimensionMismatch {
                expected: (width, height),
                actual: (values.len(), 1),
            });
        }
        if let Some(i) = values.iter().position(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::param(
                "measure",
                format!("value {} at index {i} is outside [0, 1]", values[i]),
            ));
        }
        Ok(Self {
            width,
            height,
            kind,
            values,
        })
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

    pub fn kind(&self) -> MeasureKind {
        self.kind
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[y * self.width + x]
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }
}

/// Winning orientation per pixel plus the pivot objective at it and its two
/// cyclic neighbors, used for sub-shear refinement.
#[derive(Debug, Clone)]
pub struct PivotMap {
    width: usize,
    height: usize,
    orientations: Vec<Orientation>,
    index: Vec<u16>,
    neighborhood: Vec<[f32; 3]>,
}

/// The pivot filter identity at one pixel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pivot {
    pub orientation: usize,
    pub cone: Cone,
    pub shear: i32,
    pub nominal_angle: f64,
}

impl PivotMap {
    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn get(&self, x: usize, y: usize) -> Pivot {
        let o = self.index[y * self.width + x] as usize;
        let orient = self.orientations[o];
        Pivot {
            orientation: o,
            cone: orient.cone,
            shear: orient.shear,
            nominal_angle: orient.angle,
        }
    }

    /// Pivot objective at the previous, winning and next orientation.
    pub fn objectives(&self, x: usize, y: usize) -> [f32; 3] {
        self.neighborhood[y * self.width + x]
    }
}

/// Tangent angle in degrees, `[0, 180)`, where defined.
#[derive(Debug, Clone, PartialEq)]
pub struct OrientationMap {
    width: usize,
    height: usize,
    values: Vec<Option<f64>>,
}

/// Curvature magnitude in degrees per pixel of arclength, where defined.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureMap {
    width: usize,
    height: usize,
    values: Vec<Option<f64>>,
}

macro_rules! optional_map {
    ($name:ident) => {
        impl $name {
            pub fn from_values(width: usize, height: usize, values: Vec<Option<f64>>) -> Result<Self> {
                if values.len() != width * height {
                    return Err(Error::DimensionMismatch {
                        expected: (width, height),
                        actual: (values.len(), 1),
                    });
                }
                Ok(Self {
                    width,
                    height,
                    values,
                })
            }

            pub fn dims(&self) -> (usize, usize) {
                (self.width, self.height)
            }

            pub fn values(&self) -> &[Option<f64>] {
                &self.values
            }

            pub fn get(&self, x: usize, y: usize) -> Option<f64> {
                self.values[y * self.width + x]
            }

            /// Defined values, row-major.
            pub fn defined(&self) -> impl Iterator<Item = f64> + '_ {
                self.values.iter().flatten().copied()
            }
        }
    };
}

optional_map!(OrientationMap);
optional_map!(CurvatureMap);

/// Keeps, per pixel, the best orientation seen so far.
struct Accumulator {
    kind: MeasureKind,
    scales: usize,
    n_or: usize,
    pixels: usize,
    pivot_scales: Vec<usize>,
    best_obj: Vec<f64>,
    best_idx: Vec<u16>,
    best_p: Vec<f32>,
    best_q: Vec<f32>,
    objectives: Vec<f32>,
}

impl Accumulator {
    fn new(kind: MeasureKind, system: &ShearletSystem, pivot_scales: &[usize]) -> Self {
        let pixels = system.width() * system.height();
        let scales = system.scale_count();
        let n_or = system.orientation_count();
        Self {
            kind,
            scales,
            n_or,
            pixels,
            pivot_scales: pivot_scales.to_vec(),
            best_obj: vec![f64::NEG_INFINITY; pixels],
            best_idx: vec![0; pixels],
            best_p: vec![0.0; pixels * scales],
            best_q: vec![0.0; pixels * scales],
            objectives: vec![0.0; pixels * n_or],
        }
    }

    #[inline]
    fn split(&self, c: Complex64) -> (f64, f64) {
        match self.kind {
            MeasureKind::Edge => (c.im, c.re),
            MeasureKind::Ridge => (c.re, c.im),
        }
    }

    /// Orientations must be pushed in increasing index order so that ties
    /// go to the lowest index.
    fn push(&mut self, orientation: usize, planes: &[&[Complex64]]) {
        for i in 0..self.pixels {
            let obj: f64 = self
                .pivot_scales
                .iter()
                .map(|&j| self.split(planes[j][i]).0.abs())
                .sum();
            self.objectives[i * self.n_or + orientation] = obj as f32;
            if obj > self.best_obj[i] {
                self.best_obj[i] = obj;
                self.best_idx[i] = orientation as u16;
                for (j, plane) in planes.iter().enumerate() {
                    let (p, q) = self.split(plane[i]);
                    self.best_p[i * self.scales + j] = p as f32;
                    self.best_q[i * self.scales + j] = q as f32;
                }
            }
        }
    }

    fn finish(
        self,
        system: &ShearletSystem,
        det: &DetectionParams,
    ) -> Result<(MeasureMap, PivotMap)> {
        let (w, h) = system.dims();
        let j = self.scales;
        let eps = det.epsilon();
        let values: Vec<f64> = (0..self.pixels)
            .map(|i| {
                measure_value(
                    &self.best_p[i * j..(i + 1) * j],
                    &self.best_q[i * j..(i + 1) * j],
                    det.min_contrast,
                    eps,
                    det.polarity,
                )
            })
            .collect();
        let n = self.n_or;
        let neighborhood = (0..self.pixels)
            .map(|i| {
                let o = self.best_idx[i] as usize;
                let row = &self.objectives[i * n..(i + 1) * n];
                [row[(o + n - 1) % n], row[o], row[(o + 1) % n]]
            })
            .collect();
        let measure = MeasureMap::from_values(w, h, values, self.kind)?;
        let pivot = PivotMap {
            width: w,
            height: h,
            orientations: system.orientations().to_vec(),
            index: self.best_idx,
            neighborhood,
        };
        Ok((measure, pivot))
    }
}

/// The measure at one pixel from primary and quadrature coefficients across scales.
pub fn measure_value(
    primary: &[f32],
    quadrature: &[f32],
    min_contrast: f64,
    epsilon: f64,
    polarity: Polarity,
) -> f64 {
    let mut sum = 0.0;
    let mut peak: f64 = 0.0;
    let mut spread = 0.0;
    for (&p, &q) in primary.iter().zip(quadrature) {
        let (p, q) = (p as f64, q as f64);
        sum += p;
        peak = peak.max(p.abs());
        spread += q.abs();
    }
    if peak < min_contrast || !polarity.accepts(sum) {
        return 0.0;
    }
    let v = (sum.abs() - spread) / (primary.len() as f64 * peak + epsilon);
    v.clamp(0.0, 1.0)
}

fn measure_from_volume(
    kind: MeasureKind,
    volume: &CoefficientVolume,
    system: &ShearletSystem,
    det: &DetectionParams,
) -> Result<(MeasureMap, PivotMap)> {
    volume.check_system(system)?;
    det.validate(system.scale_count())?;
    let mut acc = Accumulator::new(kind, system, &det.pivot_scales);
    for o in 0..system.orientation_count() {
        let planes: Vec<&[Complex64]> = (0..system.scale_count())
            .map(|j| volume.plane(system.filter_index(j, o)))
            .collect();
        acc.push(o, &planes);
    }
    acc.finish(system, det)
}

/// Edge measure from a precomputed coefficient volume.
pub fn edge_measure(
    volume: &CoefficientVolume,
    system: &ShearletSystem,
    det: &DetectionParams,
) -> Result<(MeasureMap, PivotMap)> {
    measure_from_volume(MeasureKind::Edge, volume, system, det)
}

/// Ridge measure from a precomputed coefficient volume: even and odd swap roles.
pub fn ridge_measure(
    volume: &CoefficientVolume,
    system: &ShearletSystem,
    det: &DetectionParams,
) -> Result<(MeasureMap, PivotMap)> {
    measure_from_volume(MeasureKind::Ridge, volume, system, det)
}

/// Computes a measure directly from an image, one orientation at a time.
///
/// Equivalent to [`analyze`](crate::xform::analyze) followed by
/// [`edge_measure`] or [`ridge_measure`] but keeps only `J` coefficient
/// planes per worker in memory.
pub fn measure_image(
    system: &ShearletSystem,
    image: &GrayImage,
    kind: MeasureKind,
    det: &DetectionParams,
) -> Result<(MeasureMap, PivotMap)> {
    det.validate(system.scale_count())?;
    let analyzer = Analyzer::new(system, image)?;
    let mut acc = Accumulator::new(kind, system, &det.pivot_scales);
    let n_or = system.orientation_count();
    let batch = rayon::current_num_threads().max(1);
    let mut start = 0;
    while start < n_or {
        let end = (start + batch).min(n_or);
        let computed: Vec<Vec<Vec<Complex64>>> = {
            use rayon::prelude::*;
            (start..end)
                .into_par_iter()
                .map(|o| analyzer.orientation_planes(o))
                .collect()
        };
        for (k, planes) in computed.iter().enumerate() {
            let refs: Vec<&[Complex64]> = planes.iter().map(|p| p.as_slice()).collect();
            acc.push(start + k, &refs);
        }
        start = end;
    }
    acc.finish(analyzer.system(), det)
}

/// Vertex offset of the parabola through `(−1, a)`, `(0, b)`, `(1, c)`,
/// clamped to `[−0.5, 0.5]`.
pub fn parabolic_offset(a: f64, b: f64, c: f64) -> f64 {
    let denom = a - 2.0 * b + c;
    if denom >= 0.0 || !denom.is_finite() {
        return 0.0;
    }
    (0.5 * (a - c) / denom).clamp(-0.5, 0.5)
}

/// Tangent angles where the measure is positive, refined between the
/// pivot and its orientation neighbors.
pub fn orientation_map(
    measure: &MeasureMap,
    pivot: &PivotMap,
    system: &ShearletSystem,
) -> Result<OrientationMap> {
    if measure.dims() != pivot.dims() {
        return Err(Error::DimensionMismatch {
            expected: measure.dims(),
            actual: pivot.dims(),
        });
    }
    if pivot.orientations.len() != system.orientation_count() {
        return Err(Error::SystemMismatch);
    }
    let (w, h) = measure.dims();
    let values = (0..w * h)
        .map(|i| {
            if measure.values[i] <= 0.0 {
                return None;
            }
            let [a, b, c] = pivot.neighborhood[i];
            let offset = parabolic_offset(a as f64, b as f64, c as f64);
            Some(system.refined_angle(pivot.index[i] as usize, offset))
        })
        .collect();
    OrientationMap::from_values(w, h, values)
}

/// Maps an angle difference into `(−90, 90]`.
pub fn wrap180(delta: f64) -> f64 {
    let mut d = delta.rem_euclid(180.0);
    if d > 90.0 {
        d -= 180.0;
    }
    d
}

/// Curvature along the traced curves of a thinned skeleton.
///
/// Returns the map and the skeleton pixels skipped because their
/// orientation is undefined.
pub fn curvature_along(
    skeleton: &BinaryMap,
    orient: &OrientationMap,
) -> Result<(CurvatureMap, Vec<(usize, usize)>)> {
    if skeleton.dims() != orient.dims() {
        return Err(Error::DimensionMismatch {
            expected: skeleton.dims(),
            actual: orient.dims(),
        });
    }
    let (w, h) = skeleton.dims();
    let chains = trace_curves(skeleton)?;
    let mut values = vec![None; w * h];
    let skipped: Vec<(usize, usize)> = skeleton
        .on_pixels()
        .filter(|&(x, y)| orient.get(x, y).is_none())
        .collect();
    for chain in &chains {
        let pts = &chain.pixels;
        let n = pts.len();
        if n < 3 {
            continue;
        }
        let step = |a: (usize, usize), b: (usize, usize)| {
            if a.0 != b.0 && a.1 != b.1 {
                std::f64::consts::SQRT_2
            } else {
                1.0
            }
        };
        let range = if chain.closed { 0..n } else { 1..n - 1 };
        for i in range {
            let prev = pts[(i + n - 1) % n];
            let next = pts[(i + 1) % n];
            let cur = pts[i];
            if skeleton.neighbor_count(cur.0, cur.1) > 2 {
                continue;
            }
            let (Some(t0), Some(t1)) = (orient.get(prev.0, prev.1), orient.get(next.0, next.1))
            else {
                continue;
            };
            let ds = step(prev, cur) + step(cur, next);
            values[cur.1 * w + cur.0] = Some(wrap180(t1 - t0).abs() / ds);
        }
    }
    Ok((CurvatureMap::from_values(w, h, values)?, skipped))
}

/// Median of a list of values, `None` when empty.
pub fn median(values: impl IntoIterator<Item = f64>) -> Option<f64> {
    let mut v: Vec<f64> = values.into_iter().collect();
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ideal_edge_values() {
        let p = [1.0f32; 4];
        let q = [0.0f32; 4];
        let v = measure_value(&p, &q, 0.1, 0.0, Polarity::Both);
        assert_eq!(v, 1.0);
        let v = measure_value(&p, &q, 0.1, 0.4, Polarity::Both);
        assert!((v - 4.0 / 4.4).abs() < 1e-12);
        assert_eq!(measure_value(&p, &q, 2.0, 0.4, Polarity::Both), 0.0);
        assert_eq!(measure_value(&p, &q, 0.1, 0.4, Polarity::Negative), 0.0);
        let n = [-1.0f32; 4];
        assert!((measure_value(&n, &q, 0.1, 0.4, Polarity::Negative) - 4.0 / 4.4).abs() < 1e-12);
    }

    #[test]
    fn quadrature_energy_lowers_measure() {
        let p = [1.0f32, 1.0];
        let v = measure_value(&p, &[0.5, 0.5], 0.1, 0.0, Polarity::Both);
        assert!((v - 0.5).abs() < 1e-12);
        assert_eq!(measure_value(&p, &[2.0, 2.0], 0.1, 0.0, Polarity::Both), 0.0);
    }

    #[test]
    fn parabola_vertex() {
        // samples of −(x − 0.3)²
        let f = |x: f64| -(x - 0.3) * (x - 0.3);
        assert!((parabolic_offset(f(-1.0), f(0.0), f(1.0)) - 0.3).abs() < 1e-12);
        assert_eq!(parabolic_offset(1.0, 1.0, 1.0), 0.0);
        assert_eq!(parabolic_offset(0.0, 1.0, 1.5), 0.5);
        assert_eq!(parabolic_offset(0.0, 1.0, 10.0), 0.0);
    }

    #[test]
    fn wrap_convention() {
        assert_eq!(wrap180(179.0), -1.0);
        assert_eq!(wrap180(-179.0), 1.0);
        assert_eq!(wrap180(90.0), 90.0);
        assert_eq!(wrap180(-90.0), 90.0);
        assert_eq!(wrap180(10.0), 10.0);
    }

    #[test]
    fn detection_params_validation() {
        let ok = DetectionParams::edge_default();
        assert!(ok.validate(3).is_ok());
        assert!(ok.validate(2).is_err());
        let bad = DetectionParams {
            min_contrast: 0.0,
            ..ok.clone()
        };
        assert!(bad.validate(3).is_err());
        let bad = DetectionParams {
            pivot_scales: vec![],
            ..ok
        };
        assert!(bad.validate(3).is_err());
    }

    #[test]
    fn median_of_values() {
        assert_eq!(median([3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median([4.0, 1.0, 2.0, 3.0]), Some(2.5));
        assert_eq!(median(std::iter::empty()), None);
    }
}
