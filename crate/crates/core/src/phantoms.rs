//! Synthetic test images with analytic ground truth, and the corruption
//! pipeline (Gaussian blur, additive Gaussian noise, Poisson resampling).
//!
//! Coordinates are in pixels with the center of pixel `(x, y)` at `(x, y)`
//! and `y` pointing down. Tangent angles in the ground truth follow the
//! measure convention: degrees in `[0, 180)`, counter-clockwise from the +x
//! axis with `y` pointing up.
//!
//! Random numbers come from ChaCha8 seeded with `seed_from_u64`, so a given
//! seed reproduces the same corruption on every platform.

use std::collections::HashMap;
use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::baselines::gaussian_blur;
use crate::error::{Error, Result};
use crate::image::{BinaryMap, GrayImage};
use crate::measures::{CurvatureMap, OrientationMap};
use crate::postprocess::thin;

pub const PHANTOM_SPEC_VERSION: u32 = 1;

/// Sub-samples per axis used for anti-aliased coverage.
const SUPERSAMPLE: usize = 8;
/// Boundary sampling step in pixels.
const SAMPLE_STEP: f64 = 0.1;
/// Polyline vertices whose adjacent segments are both shorter than this are
/// treated as samples of a smooth curve when computing curvature.
const SMOOTH_SEGMENT: f64 = 4.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Primitive {
    Circle {
        center: [f64; 2],
        radius: f64,
    },
    Segment {
        p0: [f64; 2],
        p1: [f64; 2],
    },
    /// Points `center + radius · (cos t, sin t)` for `t` from `startDeg` to
    /// `endDeg` (image coordinates, so positive `t` turns clockwise on screen).
    #[serde(rename_all = "camelCase")]
    Arc {
        center: [f64; 2],
        radius: f64,
        start_deg: f64,
        end_deg: f64,
    },
    Polyline {
        points: Vec<[f64; 2]>,
        closed: bool,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PhantomMode {
    /// Filled regions; the region boundaries are the ground truth.
    Edge,
    /// Stroked curves; the centerlines are the ground truth.
    Ridge,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PhantomSpec {
    pub version: u32,
    pub width: usize,
    pub height: usize,
    pub primitives: Vec<Primitive>,
    pub mode: PhantomMode,
    pub foreground: f64,
    pub background: f64,
    /// Stroke width in ridge mode.
    pub stroke_width: f64,
}

/// Ground-truth curve pixels with their analytic tangent and curvature.
#[derive(Debug, Clone)]
pub struct GroundTruth {
    pub curves: BinaryMap,
    pub tangent: OrientationMap,
    /// Degrees per pixel; undefined at sharp corners.
    pub curvature: CurvatureMap,
}

impl PhantomSpec {
    /// 512² edge phantom: two overlapping discs, a rotated rectangle and a
    /// band with a sinusoidal upper boundary.
    pub fn edge_512() -> Self {
        Self {
            version: PHANTOM_SPEC_VERSION,
            width: 512,
            height: 512,
            primitives: standard_shapes(true),
            mode: PhantomMode::Edge,
            foreground: 200.0,
            background: 20.0,
            stroke_width: 3.0,
        }
    }

    /// The outlines of [`PhantomSpec::edge_512`] stroked 3 px wide.
    pub fn ridge_512() -> Self {
        Self {
            version: PHANTOM_SPEC_VERSION,
            width: 512,
            height: 512,
            primitives: standard_shapes(false),
            mode: PhantomMode::Ridge,
            foreground: 200.0,
            background: 20.0,
            stroke_width: 3.0,
        }
    }

    /// A single circle centered in a `size × size` image.
    pub fn circle(size: usize, radius: f64, mode: PhantomMode) -> Self {
        let c = (size as f64 - 1.0) / 2.0;
        Self {
            version: PHANTOM_SPEC_VERSION,
            width: size,
            height: size,
            primitives: vec![Primitive::Circle {
                center: [c, c],
                radius,
            }],
            mode,
            foreground: 200.0,
            background: 20.0,
            stroke_width: 3.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidPhantom(m));
        if self.version != PHANTOM_SPEC_VERSION {
            return bad(format!(
                "unsupported spec version {} (expected {PHANTOM_SPEC_VERSION})",
                self.version
            ));
        }
        if self.width == 0 || self.height == 0 {
            return bad("image size must be positive".into());
        }
        if !self.foreground.is_finite() || !self.background.is_finite() {
            return bad("intensities must be finite".into());
        }
        if self.foreground == self.background {
            return bad("foreground and background intensities must differ".into());
        }
        if self.mode == PhantomMode::Ridge && !(self.stroke_width >= 1.0) {
            return bad("stroke width must be at least 1 px".into());
        }
        let (xmax, ymax) = (self.width as f64 - 1.0, self.height as f64 - 1.0);
        for (i, p) in self.primitives.iter().enumerate() {
            if let Primitive::Polyline { points, closed } = p {
                if points.len() < 2 || (*closed && points.len() < 3) {
                    return bad(format!("primitive {i}: polyline has too few points"));
                }
            }
            if let Primitive::Circle { radius, .. } | Primitive::Arc { radius, .. } = p {
                if !(*radius > 0.0) {
                    return bad(format!("primitive {i}: radius must be positive"));
                }
            }
            if self.mode == PhantomMode::Edge && !p.is_region() {
                return bad(format!(
                    "primitive {i}: edge mode needs closed regions (circles or closed polylines)"
                ));
            }
            let (x0, y0, x1, y1) = p.bounds();
            if !(x0 >= 0.0 && y0 >= 0.0 && x1 <= xmax && y1 <= ymax) {
                return bad(format!("primitive {i} extends beyond the image"));
            }
        }
        Ok(())
    }
}

fn standard_shapes(edge: bool) -> Vec<Primitive> {
    let mut shapes = vec![
        Primitive::Circle {
            center: [170.0, 170.0],
            radius: 100.0,
        },
        Primitive::Circle {
            center: [250.0, 230.0],
            radius: 70.0,
        },
    ];
    let (cx, cy, hw, hh) = (400.0, 140.0, 70.0, 45.0);
    let (s, c) = (30f64.to_radians().sin(), 30f64.to_radians().cos());
    let corners = [(-hw, -hh), (hw, -hh), (hw, hh), (-hw, hh)]
        .iter()
        .map(|&(u, v)| [cx + u * c - v * s, cy + u * s + v * c])
        .collect();
    shapes.push(Primitive::Polyline {
        points: corners,
        closed: true,
    });
    let wave: Vec<[f64; 2]> = (50..=462)
        .map(|x| {
            let x = x as f64;
            [x, 360.0 + 20.0 * (2.0 * PI * x / 128.0).sin()]
        })
        .collect();
    if edge {
        let mut band = wave;
        band.push([462.0, 470.0]);
        band.push([50.0, 470.0]);
        shapes.push(Primitive::Polyline {
            points: band,
            closed: true,
        });
    } else {
        shapes.push(Primitive::Polyline {
            points: wave,
            closed: false,
        });
    }
    shapes
}

/// A point on a curve with its tangent angle and curvature.
#[derive(Debug, Clone, Copy)]
struct Sample {
    x: f64,
    y: f64,
    angle: f64,
    curvature: Option<f64>,
}

fn tangent_angle(dx: f64, dy: f64) -> f64 {
    let a = (-dy).atan2(dx).to_degrees().rem_euclid(180.0);
    if a >= 180.0 {
        0.0
    } else {
        a
    }
}

fn point_segment_distance(p: (f64, f64), a: [f64; 2], b: [f64; 2]) -> f64 {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let len2 = dx * dx + dy * dy;
    let t = if len2 > 0.0 {
        (((p.0 - a[0]) * dx + (p.1 - a[1]) * dy) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    (p.0 - a[0] - t * dx).hypot(p.1 - a[1] - t * dy)
}

impl Primitive {
    fn is_region(&self) -> bool {
        matches!(
            self,
            Primitive::Circle { .. } | Primitive::Polyline { closed: true, .. }
        )
    }

    fn bounds(&self) -> (f64, f64, f64, f64) {
        match self {
            Primitive::Circle { center, radius } => (
                center[0] - radius,
                center[1] - radius,
                center[0] + radius,
                center[1] + radius,
            ),
            Primitive::Segment { p0, p1 } => bounds_of(&[*p0, *p1]),
            Primitive::Arc { .. } => {
                let pts: Vec<[f64; 2]> = self.samples(1.0).iter().map(|s| [s.x, s.y]).collect();
                bounds_of(&pts)
            }
            Primitive::Polyline { points, .. } => bounds_of(points),
        }
    }

    /// Even-odd inside test for regions.
    fn contains(&self, x: f64, y: f64) -> bool {
        match self {
            Primitive::Circle { center, radius } => {
                (x - center[0]).hypot(y - center[1]) < *radius
            }
            Primitive::Polyline {
                points,
                closed: true,
            } => {
                let mut inside = false;
                let n = points.len();
                for i in 0..n {
                    let a = points[i];
                    let b = points[(i + 1) % n];
                    if (a[1] > y) != (b[1] > y) {
                        let xc = a[0] + (y - a[1]) / (b[1] - a[1]) * (b[0] - a[0]);
                        if x < xc {
                            inside = !inside;
                        }
                    }
                }
                inside
            }
            _ => false,
        }
    }

    /// Pieces used for distance queries: `(kind, index)` resolved by [`Primitive::piece_distance`].
    fn piece_count(&self) -> usize {
        match self {
            Primitive::Polyline { points, closed } => {
                if *closed {
                    points.len()
                } else {
                    points.len() - 1
                }
            }
            _ => 1,
        }
    }

    fn piece_distance(&self, piece: usize, p: (f64, f64)) -> f64 {
        match self {
            Primitive::Circle { center, radius } => {
                ((p.0 - center[0]).hypot(p.1 - center[1]) - radius).abs()
            }
            Primitive::Segment { p0, p1 } => point_segment_distance(p, *p0, *p1),
            Primitive::Arc {
                center,
                radius,
                start_deg,
                end_deg,
            } => {
                let (lo, hi) = (start_deg.min(*end_deg), start_deg.max(*end_deg));
                let t = (p.1 - center[1]).atan2(p.0 - center[0]).to_degrees();
                let within = (lo..=hi).contains(&t)
                    || (lo..=hi).contains(&(t + 360.0))
                    || (lo..=hi).contains(&(t - 360.0));
                if within {
                    ((p.0 - center[0]).hypot(p.1 - center[1]) - radius).abs()
                } else {
                    let end = |deg: f64| {
                        let r = deg.to_radians();
                        (p.0 - center[0] - radius * r.cos()).hypot(p.1 - center[1] - radius * r.sin())
                    };
                    end(lo).min(end(hi))
                }
            }
            Primitive::Polyline { points, .. } => {
                let n = points.len();
                point_segment_distance(p, points[piece], points[(piece + 1) % n])
            }
        }
    }

    /// Samples along the curve about `step` pixels apart, tagged with the piece index.
    fn samples_with_piece(&self, step: f64) -> Vec<(usize, Sample)> {
        match self {
            Primitive::Circle { center, radius } => {
                let n = ((2.0 * PI * radius) / step).ceil().max(8.0) as usize;
                let k = (180.0 / PI) / radius;
                (0..n)
                    .map(|i| {
                        let t = 2.0 * PI * i as f64 / n as f64;
                        let s = Sample {
                            x: center[0] + radius * t.cos(),
                            y: center[1] + radius * t.sin(),
                            angle: tangent_angle(-t.sin(), t.cos()),
                            curvature: Some(k),
                        };
                        (0, s)
                    })
                    .collect()
            }
            Primitive::Segment { p0, p1 } => segment_samples(*p0, *p1, step, Some(0.0), Some(0.0))
                .into_iter()
                .map(|s| (0, s))
                .collect(),
            Primitive::Arc {
                center,
                radius,
                start_deg,
                end_deg,
            } => {
                let span = (end_deg - start_deg).to_radians();
                let n = ((span.abs() * radius) / step).ceil().max(2.0) as usize;
                let k = (180.0 / PI) / radius;
                (0..=n)
                    .map(|i| {
                        let t = start_deg.to_radians() + span * i as f64 / n as f64;
                        let s = Sample {
                            x: center[0] + radius * t.cos(),
                            y: center[1] + radius * t.sin(),
                            angle: tangent_angle(-t.sin(), t.cos()),
                            curvature: Some(k),
                        };
                        (0, s)
                    })
                    .collect()
            }
            Primitive::Polyline { points, closed } => {
                let n = points.len();
                let seg_len = |i: usize| {
                    let (a, b) = (points[i % n], points[(i + 1) % n]);
                    (b[0] - a[0]).hypot(b[1] - a[1])
                };
                let pieces = self.piece_count();
                // curvature at each vertex, None at sharp corners
                let vertex_curvature = |v: usize| -> Option<f64> {
                    let interior = *closed || (v > 0 && v < n - 1);
                    if !interior {
                        return Some(0.0);
                    }
                    let prev = (v + n - 1) % n;
                    let (l0, l1) = (seg_len(prev), seg_len(v));
                    let (a, b, c) = (points[prev], points[v], points[(v + 1) % n]);
                    let turn = ((c[1] - b[1]).atan2(c[0] - b[0]) - (b[1] - a[1]).atan2(b[0] - a[0]))
                        .to_degrees();
                    let turn = (turn + 180.0).rem_euclid(360.0) - 180.0;
                    if l0 < SMOOTH_SEGMENT && l1 < SMOOTH_SEGMENT {
                        Some(turn.abs() / (0.5 * (l0 + l1)))
                    } else if turn.abs() < 1e-9 {
                        Some(0.0)
                    } else {
                        None
                    }
                };
                let mut out = Vec::new();
                for piece in 0..pieces {
                    let (a, b) = (points[piece], points[(piece + 1) % n]);
                    let short = seg_len(piece) < SMOOTH_SEGMENT;
                    let k0 = vertex_curvature(piece);
                    let k1 = vertex_curvature((piece + 1) % n);
                    let (k0, k1) = if short {
                        (k0, k1)
                    } else {
                        (k0.map(|_| 0.0), k1.map(|_| 0.0))
                    };
                    for s in segment_samples(a, b, step, k0, k1) {
                        out.push((piece, s));
                    }
                }
                out
            }
        }
    }

    fn samples(&self, step: f64) -> Vec<Sample> {
        self.samples_with_piece(step).into_iter().map(|(_, s)| s).collect()
    }
}

fn bounds_of(points: &[[f64; 2]]) -> (f64, f64, f64, f64) {
    points.iter().fold(
        (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY),
        |(x0, y0, x1, y1), p| (x0.min(p[0]), y0.min(p[1]), x1.max(p[0]), y1.max(p[1])),
    )
}

/// Samples of a straight piece. Curvature is interpolated between the
/// endpoint values; an undefined endpoint (sharp corner) leaves the samples
/// within one pixel of it undefined and the rest straight.
fn segment_samples(a: [f64; 2], b: [f64; 2], step: f64, k0: Option<f64>, k1: Option<f64>) -> Vec<Sample> {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let len = dx.hypot(dy);
    let n = (len / step).ceil().max(1.0) as usize;
    let angle = tangent_angle(dx, dy);
    (0..n)
        .map(|i| {
            let t = i as f64 / n as f64;
            let from_start = t * len;
            let from_end = len - from_start;
            let curvature = match (k0, k1) {
                (None, _) if from_start <= 1.0 => None,
                (_, None) if from_end <= 1.0 => None,
                (Some(u), Some(v)) => Some(u + t * (v - u)),
                _ => Some(0.0),
            };
            Sample {
                x: a[0] + t * dx,
                y: a[1] + t * dy,
                angle,
                curvature,
            }
        })
        .collect()
}

/// Renders a phantom and its ground truth.
pub fn generate(spec: &PhantomSpec) -> Result<(GrayImage, GroundTruth)> {
    spec.validate()?;
    let (w, h) = (spec.width, spec.height);
    let coverage = match spec.mode {
        PhantomMode::Edge => region_coverage(spec),
        PhantomMode::Ridge => stroke_coverage(spec),
    };
    let (b, f) = (spec.background, spec.foreground);
    let image = GrayImage::new(w, h, coverage.iter().map(|c| b + (f - b) * c).collect())?;

    let mut truth_samples = Vec::new();
    for (i, p) in spec.primitives.iter().enumerate() {
        for s in p.samples(SAMPLE_STEP) {
            let hidden = spec.mode == PhantomMode::Edge
                && spec
                    .primitives
                    .iter()
                    .enumerate()
                    .any(|(k, q)| k != i && q.contains(s.x, s.y));
            if !hidden {
                truth_samples.push(s);
            }
        }
    }
    Ok((image, rasterize_truth(w, h, &truth_samples)?))
}

fn rasterize_truth(w: usize, h: usize, samples: &[Sample]) -> Result<GroundTruth> {
    let mut best: HashMap<usize, (f64, Sample)> = HashMap::new();
    let mut raw = BinaryMap::new(w, h);
    for s in samples {
        let (px, py) = (s.x.round(), s.y.round());
        if px < 0.0 || py < 0.0 || px >= w as f64 || py >= h as f64 {
            continue;
        }
        let (px, py) = (px as usize, py as usize);
        raw.set(px, py, true);
        let d = (s.x - px as f64).hypot(s.y - py as f64);
        let entry = best.entry(py * w + px).or_insert((f64::INFINITY, *s));
        if d < entry.0 {
            *entry = (d, *s);
        }
    }
    let curves = thin(&raw);
    let mut tangent = vec![None; w * h];
    let mut curvature = vec![None; w * h];
    for (x, y) in curves.on_pixels() {
        if let Some((_, s)) = best.get(&(y * w + x)) {
            tangent[y * w + x] = Some(s.angle);
            curvature[y * w + x] = s.curvature;
        }
    }
    Ok(GroundTruth {
        curves,
        tangent: OrientationMap::from_values(w, h, tangent)?,
        curvature: CurvatureMap::from_values(w, h, curvature)?,
    })
}

/// Marks pixels within `radius` of any sample, remembering which pieces came close.
fn candidates(spec: &PhantomSpec, radius: f64) -> HashMap<usize, Vec<(usize, usize)>> {
    let (w, h) = (spec.width as isize, spec.height as isize);
    let r = radius.ceil() as isize;
    let mut out: HashMap<usize, Vec<(usize, usize)>> = HashMap::new();
    for (pi, p) in spec.primitives.iter().enumerate() {
        for (piece, s) in p.samples_with_piece(0.25) {
            let (cx, cy) = (s.x.round() as isize, s.y.round() as isize);
            for y in (cy - r).max(0)..=(cy + r).min(h - 1) {
                for x in (cx - r).max(0)..=(cx + r).min(w - 1) {
                    let list = out.entry(y as usize * spec.width + x as usize).or_default();
                    if !list.contains(&(pi, piece)) {
                        list.push((pi, piece));
                    }
                }
            }
        }
    }
    out
}

fn subsample_offsets() -> impl Iterator<Item = (f64, f64)> {
    (0..SUPERSAMPLE * SUPERSAMPLE).map(|k| {
        let (i, j) = (k % SUPERSAMPLE, k / SUPERSAMPLE);
        (
            (i as f64 + 0.5) / SUPERSAMPLE as f64 - 0.5,
            (j as f64 + 0.5) / SUPERSAMPLE as f64 - 0.5,
        )
    })
}

fn region_coverage(spec: &PhantomSpec) -> Vec<f64> {
    let (w, h) = (spec.width, spec.height);
    let inside = |x: f64, y: f64| spec.primitives.iter().any(|p| p.contains(x, y));
    let near = candidates(spec, 1.0);
    let mut cov = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let (fx, fy) = (x as f64, y as f64);
            cov[y * w + x] = if near.contains_key(&(y * w + x)) {
                let hits = subsample_offsets().filter(|&(dx, dy)| inside(fx + dx, fy + dy)).count();
                hits as f64 / (SUPERSAMPLE * SUPERSAMPLE) as f64
            } else if inside(fx, fy) {
                1.0
            } else {
                0.0
            };
        }
    }
    cov
}

fn stroke_coverage(spec: &PhantomSpec) -> Vec<f64> {
    let half = spec.stroke_width / 2.0;
    let near = candidates(spec, half + 1.5);
    let mut cov = vec![0.0; spec.width * spec.height];
    for (&i, pieces) in &near {
        let (fx, fy) = ((i % spec.width) as f64, (i / spec.width) as f64);
        let hits = subsample_offsets()
            .filter(|&(dx, dy)| {
                pieces
                    .iter()
                    .any(|&(p, k)| spec.primitives[p].piece_distance(k, (fx + dx, fy + dy)) <= half)
            })
            .count();
        cov[i] = hits as f64 / (SUPERSAMPLE * SUPERSAMPLE) as f64;
    }
    cov
}

/// Orientation of the straight structures made by [`periodic_step`] and [`periodic_line`].
fn periodic_coordinate(size: usize, angle_deg: f64) -> Result<impl Fn(usize, usize) -> usize> {
    let Some(kind) = [0.0, 45.0, 90.0, 135.0].iter().position(|&a| a == angle_deg) else {
        return Err(Error::InvalidPhantom(format!(
            "periodic structures support 0, 45, 90 and 135 degrees, not {angle_deg}"
        )));
    };
    if size < 8 || !size.is_multiple_of(4) {
        return Err(Error::InvalidPhantom("size must be a multiple of 4, at least 8".into()));
    }
    Ok(move |x: usize, y: usize| match kind {
        0 => y,
        1 => (x + y) % size,
        2 => x,
        _ => (x + size - y) % size,
    })
}

/// Periodic band whose straight edges have tangent `angle_deg`
/// (0, 45, 90 or 135). Intensity rises from `low` to `high` at coordinate
/// `size/4` and falls back half a period later; the edge pixels carry the
/// mean of both levels.
pub fn periodic_step(size: usize, angle_deg: f64, low: f64, high: f64) -> Result<(GrayImage, GroundTruth)> {
    let u = periodic_coordinate(size, angle_deg)?;
    let (c1, c2) = (size / 4, size / 4 + size / 2);
    let image = GrayImage::from_fn(size, size, |x, y| {
        let v = u(x, y);
        if v == c1 || v == c2 {
            0.5 * (low + high)
        } else if v > c1 && v < c2 {
            high
        } else {
            low
        }
    });
    let curves = BinaryMap::from_fn(size, size, |x, y| {
        let v = u(x, y);
        v == c1 || v == c2
    });
    Ok((image, straight_truth(curves, angle_deg)?))
}

/// Periodic line of `width` pixels (odd) centered at coordinate `size/2`,
/// tangent `angle_deg`.
pub fn periodic_line(
    size: usize,
    angle_deg: f64,
    width: usize,
    background: f64,
    foreground: f64,
) -> Result<(GrayImage, GroundTruth)> {
    if width.is_multiple_of(2) || width >= size / 2 {
        return Err(Error::InvalidPhantom("line width must be odd and below size/2".into()));
    }
    let u = periodic_coordinate(size, angle_deg)?;
    let c = size / 2;
    let half = width / 2;
    let image = GrayImage::from_fn(size, size, |x, y| {
        if u(x, y).abs_diff(c) <= half {
            foreground
        } else {
            background
        }
    });
    let curves = BinaryMap::from_fn(size, size, |x, y| u(x, y) == c);
    Ok((image, straight_truth(curves, angle_deg)?))
}

fn straight_truth(curves: BinaryMap, angle: f64) -> Result<GroundTruth> {
    let (w, h) = curves.dims();
    let tangent = curves.mask().iter().map(|&on| on.then_some(angle)).collect();
    let curvature = curves.mask().iter().map(|&on| on.then_some(0.0)).collect();
    Ok(GroundTruth {
        tangent: OrientationMap::from_values(w, h, tangent)?,
        curvature: CurvatureMap::from_values(w, h, curvature)?,
        curves,
    })
}

/// Gaussian blur followed by additive white Gaussian noise; no clamping.
pub fn corrupt(image: &GrayImage, sigma_blur: f64, sigma_noise: f64, seed: u64) -> Result<GrayImage> {
    if !(sigma_blur >= 0.0) || !sigma_blur.is_finite() {
        return Err(Error::param("sigmaBlur", "must be nonnegative"));
    }
    if !(sigma_noise >= 0.0) || !sigma_noise.is_finite() {
        return Err(Error::param("sigmaNoise", "must be nonnegative"));
    }
    let blurred = gaussian_blur(image, sigma_blur);
    if sigma_noise == 0.0 {
        return Ok(blurred);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, sigma_noise).expect("finite nonnegative sigma");
    let (w, h) = blurred.dims();
    let data = blurred
        .into_data()
        .into_iter()
        .map(|v| v + normal.sample(&mut rng))
        .collect();
    GrayImage::new(w, h, data)
}

/// Result of [`poissonize`].
#[derive(Debug, Clone)]
pub struct Poissonized {
    pub image: GrayImage,
    /// Pixels that were negative and floored to 0 before sampling.
    pub floored: usize,
}

/// Replaces every pixel `v` by `10 · Poisson(v / 10)`.
pub fn poissonize(image: &GrayImage, seed: u64) -> Poissonized {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut floored = 0;
    let data = image
        .data()
        .iter()
        .map(|&v| {
            if v < 0.0 {
                floored += 1;
            }
            let lambda = v.max(0.0) / 10.0;
            if lambda > 0.0 {
                let p = Poisson::new(lambda).expect("positive finite rate");
                10.0 * p.sample(&mut rng)
            } else {
                0.0
            }
        })
        .collect();
    Poissonized {
        image: GrayImage::new(image.width(), image.height(), data).expect("same dimensions"),
        floored,
    }
}

/// Seed for one cell of a corruption grid.
pub fn cell_seed(master: u64, cell: usize) -> u64 {
    master ^ cell as u64
}
