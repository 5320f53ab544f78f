//! File-based commands behind the CLI.

use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::Context;
use coshrem::metrics::pfom;
use coshrem::phantoms::{generate, PhantomSpec};
use coshrem::pipeline::{Detector, DetectorConfig};
use coshrem::postprocess::thin;
use serde::Serialize;
use serde_json::json;

use crate::bench::Cell;
use crate::io;
use crate::render::{render_layer, DetectionStats, Layer, Timings};
use crate::syscache::{DiskCache, LayeredCache};

#[derive(Debug, thiserror::Error)]
pub enum CommandError {
    #[error("input file not found: {}", .0.display())]
    MissingInput(PathBuf),
    #[error(transparent)]
    Failed(#[from] anyhow::Error),
}

impl CommandError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CommandError::MissingInput(_) => 2,
            CommandError::Failed(_) => 1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct DetectRequest {
    pub input: PathBuf,
    pub config: DetectorConfig,
    pub out_dir: PathBuf,
    /// Directory of stored systems; `None` always builds.
    pub cache_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct DetectSummary {
    pub input: PathBuf,
    pub config: DetectorConfig,
    pub cache_key: String,
    pub cache_hit: bool,
    pub timings: Timings,
    pub stats: DetectionStats,
    pub outputs: Vec<PathBuf>,
}

/// Writes every file or none: on failure the files already written are removed.
fn write_all_or_nothing(files: &[(PathBuf, Vec<u8>)]) -> anyhow::Result<()> {
    for (i, (path, bytes)) in files.iter().enumerate() {
        if let Err(e) = io::write_file(path, bytes) {
            for (done, _) in &files[..i] {
                let _ = std::fs::remove_file(done);
            }
            return Err(e.into());
        }
    }
    Ok(())
}

/// Runs a detection and writes the 16-bit measure PGM, the binary skeleton
/// PGM, overlay, orientation and curvature PNGs and a JSON summary named
/// after the input file.
pub fn detect(req: &DetectRequest) -> Result<DetectSummary, CommandError> {
    if !req.input.is_file() {
        return Err(CommandError::MissingInput(req.input.clone()));
    }
    let start = Instant::now();
    let image = io::load_gray(&req.input).context("reading input image")?;
    let cache = LayeredCache::new(1, req.cache_dir.clone().map(DiskCache::new));
    let (system, lookup) = cache
        .get_or_build(req.config.system, image.width(), image.height())
        .context("building shearlet system")?;
    let detector = Detector::with_system(req.config.clone(), system.clone()).context("configuring detector")?;
    let detection = detector.detect(&image).context("detection failed")?;

    let stem = req
        .input
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("image")
        .to_string();
    let name = |suffix: &str| req.out_dir.join(format!("{stem}.{suffix}"));
    let mut files = vec![
        (name("measure.pgm"), io::measure_pgm16(&detection.measure)),
        (name("skeleton.pgm"), io::binary_pgm(&detection.skeleton)),
    ];
    for layer in [Layer::Overlay, Layer::Orientation, Layer::Curvature] {
        let png = render_layer(&image, &detection, layer).context("rendering")?;
        files.push((name(&format!("{}.png", layer.as_str())), png));
    }
    let summary_path = name("summary.json");
    let mut outputs: Vec<PathBuf> = files.iter().map(|f| f.0.clone()).collect();
    outputs.push(summary_path.clone());
    let summary = DetectSummary {
        input: req.input.clone(),
        config: req.config.clone(),
        cache_key: system.cache_key().to_string(),
        cache_hit: lookup.hit,
        timings: Timings::new(&lookup, detection.detect_ms, start.elapsed().as_secs_f64() * 1e3),
        stats: DetectionStats::of(&detection),
        outputs,
    };
    files.push((summary_path, serde_json::to_vec_pretty(&summary).context("serializing summary")?));
    std::fs::create_dir_all(&req.out_dir)
        .with_context(|| format!("creating {}", req.out_dir.display()))?;
    write_all_or_nothing(&files)?;
    Ok(summary)
}

#[derive(Debug, Clone)]
pub struct PhantomRequest {
    pub spec: PhantomSpec,
    pub corruption: Cell,
    /// Output path without extension.
    pub out: PathBuf,
}

fn with_suffix(stem: &Path, suffix: &str) -> PathBuf {
    let mut s = stem.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

/// Writes `<out>.pgm` (corrupted phantom), `<out>.truth.pgm` and a
/// `<out>.json` sidecar with the phantom spec, corruption and per-pixel truth.
pub fn phantom(req: &PhantomRequest) -> anyhow::Result<Vec<PathBuf>> {
    let (clean, truth) = generate(&req.spec).context("generating phantom")?;
    let image = req.corruption.corrupt(&clean)?;
    let pixels: Vec<_> = truth
        .curves
        .on_pixels()
        .map(|(x, y)| {
            json!({
                "x": x,
                "y": y,
                "tangent": truth.tangent.get(x, y),
                "curvature": truth.curvature.get(x, y),
            })
        })
        .collect();
    let c = &req.corruption;
    let sidecar = json!({
        "spec": req.spec,
        "corruption": {"blur": c.blur, "noise": c.noise, "poisson": c.poisson, "seed": c.seed},
        "truth": pixels,
    });
    if let Some(parent) = req.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    let paths = vec![
        with_suffix(&req.out, ".pgm"),
        with_suffix(&req.out, ".truth.pgm"),
        with_suffix(&req.out, ".json"),
    ];
    io::save_gray(&image, &paths[0])?;
    io::write_file(&paths[1], &io::binary_pgm(&truth.curves))?;
    io::write_file(&paths[2], &serde_json::to_vec_pretty(&sidecar)?)?;
    Ok(paths)
}

/// PFOM of a detection image against a truth image; nonzero pixels are on.
pub fn pfom_files(detected: &Path, truth: &Path, a: f64, thin_first: bool) -> anyhow::Result<f64> {
    let mut d = io::load_binary(detected).with_context(|| format!("reading {}", detected.display()))?;
    let t = io::load_binary(truth).with_context(|| format!("reading {}", truth.display()))?;
    if thin_first {
        d = thin(&d);
    }
    Ok(pfom(&d, &t, a)?)
}
