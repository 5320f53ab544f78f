//! Corruption-grid benchmark: every detector on every corrupted phantom.

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use anyhow::Context;
use coshrem::baselines::{canny, sobel, CannyParams};
use coshrem::metrics::{pfom, PRATT_A};
use coshrem::phantoms::{cell_seed, corrupt, generate, poissonize, PhantomSpec};
use coshrem::pipeline::{Detector, DetectorConfig};
use coshrem::postprocess::thin;
use coshrem::{BinaryMap, GrayImage};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Which phantom a benchmark runs on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum PhantomSource {
    /// `edge-512` or `ridge-512`.
    Builtin(String),
    Spec(PhantomSpec),
    /// JSON file holding a phantom spec.
    Path(PathBuf),
}

impl PhantomSource {
    pub fn resolve(&self) -> anyhow::Result<PhantomSpec> {
        match self {
            PhantomSource::Builtin(name) => builtin_phantom(name),
            PhantomSource::Spec(spec) => Ok(spec.clone()),
            PhantomSource::Path(path) => {
                let text = std::fs::read_to_string(path)
                    .with_context(|| format!("reading phantom spec {}", path.display()))?;
                Ok(serde_json::from_str(&text)
                    .with_context(|| format!("parsing phantom spec {}", path.display()))?)
            }
        }
    }
}

pub fn builtin_phantom(name: &str) -> anyhow::Result<PhantomSpec> {
    match name {
        "edge-512" => Ok(PhantomSpec::edge_512()),
        "ridge-512" => Ok(PhantomSpec::ridge_512()),
        other => anyhow::bail!("unknown phantom `{other}` (expected edge-512 or ridge-512)"),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct CorruptionGrid {
    pub blur: Vec<f64>,
    pub noise: Vec<f64>,
    #[serde(default = "no_poisson")]
    pub poisson: Vec<bool>,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

fn no_poisson() -> Vec<bool> {
    vec![false]
}

fn default_seed() -> u64 {
    1
}

impl CorruptionGrid {
    /// The 4 × 5 blur/noise grid.
    pub fn standard() -> Self {
        Self {
            blur: vec![0.0, 0.5, 1.0, 1.5],
            noise: vec![0.0, 20.0, 50.0, 80.0, 100.0],
            poisson: no_poisson(),
            seed: default_seed(),
        }
    }

    /// Cells in blur-major, then noise, then Poisson order.
    pub fn cells(&self) -> Vec<Cell> {
        let mut cells = Vec::new();
        for (bi, &blur) in self.blur.iter().enumerate() {
            for (ni, &noise) in self.noise.iter().enumerate() {
                let index = bi * self.noise.len() + ni;
                for &poisson in &self.poisson {
                    cells.push(Cell {
                        blur,
                        noise,
                        poisson,
                        seed: cell_seed(self.seed, index),
                    });
                }
            }
        }
        cells
    }
}

/// One corruption setting. Cells differing only in `poisson` share the
/// Gaussian noise realization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub blur: f64,
    pub noise: f64,
    pub poisson: bool,
    pub seed: u64,
}

/// Offset separating the Poisson stream from the Gaussian one.
const POISSON_STREAM: u64 = 0x9e37_79b9_7f4a_7c15;

impl Cell {
    pub fn corrupt(&self, clean: &GrayImage) -> coshrem::Result<GrayImage> {
        let img = corrupt(clean, self.blur, self.noise, self.seed)?;
        Ok(if self.poisson {
            poissonize(&img, self.seed ^ POISSON_STREAM).image
        } else {
            img
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DetectorSpec {
    Coshrem { name: String, config: DetectorConfig },
    Canny { name: String, params: CannyParams },
    Sobel { name: String, threshold: f64 },
}

impl DetectorSpec {
    pub fn name(&self) -> &str {
        match self {
            DetectorSpec::Coshrem { name, .. }
            | DetectorSpec::Canny { name, .. }
            | DetectorSpec::Sobel { name, .. } => name,
        }
    }

    pub fn coshrem_edge() -> Self {
        DetectorSpec::Coshrem {
            name: "coshrem-edge".into(),
            config: DetectorConfig::edge_default(),
        }
    }

    pub fn coshrem_ridge() -> Self {
        DetectorSpec::Coshrem {
            name: "coshrem-ridge".into(),
            config: DetectorConfig::ridge_default(),
        }
    }

    pub fn canny_tuned() -> Self {
        DetectorSpec::Canny {
            name: "canny-tuned".into(),
            params: CannyParams::tuned(),
        }
    }

    pub fn canny_auto() -> Self {
        DetectorSpec::Canny {
            name: "canny-auto".into(),
            params: CannyParams::Auto,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct BenchConfig {
    pub phantom: PhantomSource,
    pub grid: CorruptionGrid,
    pub detectors: Vec<DetectorSpec>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    /// Wall times make reports differ between runs; without them the CSV is
    /// byte-identical for a fixed seed.
    #[serde(default = "yes")]
    pub record_timing: bool,
}

fn yes() -> bool {
    true
}

impl BenchConfig {
    /// Standard grid on EDGE-512 with CoShREM and both Canny variants.
    pub fn standard_edge() -> Self {
        Self {
            phantom: PhantomSource::Builtin("edge-512".into()),
            grid: CorruptionGrid::standard(),
            detectors: vec![
                DetectorSpec::coshrem_edge(),
                DetectorSpec::canny_tuned(),
                DetectorSpec::canny_auto(),
            ],
            output_dir: None,
            record_timing: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct BenchRow {
    pub detector: String,
    pub blur: f64,
    pub noise: f64,
    pub poisson: bool,
    /// Absent when the detector failed on this cell.
    pub pfom: Option<f64>,
    pub ms: f64,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Environment {
    pub version: String,
    pub seed: u64,
    pub threads: usize,
    pub os: String,
    pub arch: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    pub environment: Environment,
}

impl BenchReport {
    pub fn row(&self, detector: &str, blur: f64, noise: f64, poisson: bool) -> Option<&BenchRow> {
        self.rows.iter().find(|r| {
            r.detector == detector && r.blur == blur && r.noise == noise && r.poisson == poisson
        })
    }

    /// `detector,blur,noise,poisson,pfom,ms` with a header row.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["detector", "blur", "noise", "poisson", "pfom", "ms"])
            .expect("in-memory write");
        for r in &self.rows {
            w.write_record([
                r.detector.clone(),
                r.blur.to_string(),
                r.noise.to_string(),
                (r.poisson as u8).to_string(),
                r.pfom.map(|p| format!("{p:.6}")).unwrap_or_default(),
                format!("{:.1}", r.ms),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
    }

    /// Writes `report.csv` and `report.json` into `dir`.
    pub fn write(&self, dir: &Path) -> anyhow::Result<()> {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        std::fs::write(dir.join("report.csv"), self.to_csv())?;
        std::fs::write(dir.join("report.json"), serde_json::to_string_pretty(self)?)?;
        Ok(())
    }
}

/// Per-detector state shared by all cells.
enum Prepared {
    Coshrem(Arc<Detector>),
    Canny(CannyParams),
    Sobel(f64),
    Failed(String),
}

fn prepare(spec: &DetectorSpec, width: usize, height: usize) -> Prepared {
    match spec {
        DetectorSpec::Coshrem { config, .. } => match Detector::new(config.clone(), width, height) {
            Ok(d) => Prepared::Coshrem(Arc::new(d)),
            Err(e) => Prepared::Failed(e.to_string()),
        },
        DetectorSpec::Canny { params, .. } => match params.validate() {
            Ok(()) => Prepared::Canny(*params),
            Err(e) => Prepared::Failed(e.to_string()),
        },
        DetectorSpec::Sobel { threshold, .. } => Prepared::Sobel(*threshold),
    }
}

fn run_detector(prepared: &Prepared, img: &GrayImage) -> Result<BinaryMap, String> {
    let raw = match prepared {
        Prepared::Coshrem(d) => return d.detect(img).map(|r| r.skeleton).map_err(|e| e.to_string()),
        Prepared::Canny(p) => canny(img, p),
        Prepared::Sobel(t) => sobel(img, *t),
        Prepared::Failed(msg) => return Err(msg.clone()),
    };
    raw.map(|b| thin(&b)).map_err(|e| e.to_string())
}

/// Runs every detector on every cell. Cells run in parallel; rows come out
/// detector-major in cell order. Detector failures are recorded per row.
pub fn run_grid(config: &BenchConfig) -> anyhow::Result<BenchReport> {
    let spec = config.phantom.resolve()?;
    let (clean, truth) = generate(&spec).context("generating phantom")?;
    let (w, h) = clean.dims();
    let prepared: Vec<Prepared> = config.detectors.iter().map(|d| prepare(d, w, h)).collect();
    let cells = config.grid.cells();
    let per_cell: Vec<Vec<BenchRow>> = cells
        .par_iter()
        .map(|cell| {
            let image = cell.corrupt(&clean);
            config
                .detectors
                .iter()
                .zip(&prepared)
                .map(|(spec, prep)| {
                    let start = Instant::now();
                    let outcome = image
                        .as_ref()
                        .map_err(|e| e.to_string())
                        .and_then(|img| run_detector(prep, img))
                        .and_then(|det| pfom(&det, &truth.curves, PRATT_A).map_err(|e| e.to_string()));
                    let ms = if config.record_timing {
                        start.elapsed().as_secs_f64() * 1e3
                    } else {
                        0.0
                    };
                    BenchRow {
                        detector: spec.name().to_string(),
                        blur: cell.blur,
                        noise: cell.noise,
                        poisson: cell.poisson,
                        pfom: outcome.as_ref().ok().copied(),
                        ms,
                        error: outcome.err(),
                    }
                })
                .collect()
        })
        .collect();
    let mut rows = Vec::with_capacity(cells.len() * config.detectors.len());
    for d in 0..config.detectors.len() {
        rows.extend(per_cell.iter().map(|r| r[d].clone()));
    }
    Ok(BenchReport {
        rows,
        environment: Environment {
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed: config.grid.seed,
            threads: rayon::current_num_threads(),
            os: std::env::consts::OS.to_string(),
            arch: std::env::consts::ARCH.to_string(),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cells_are_blur_major_with_shared_gaussian_seeds() {
        let grid = CorruptionGrid {
            blur: vec![0.0, 1.0],
            noise: vec![10.0, 20.0, 30.0],
            poisson: vec![false, true],
            seed: 5,
        };
        let cells = grid.cells();
        assert_eq!(cells.len(), 12);
        assert_eq!((cells[2].blur, cells[2].noise, cells[2].poisson), (0.0, 20.0, false));
        assert_eq!(cells[2].seed, cells[3].seed);
        assert_eq!(cells[6].seed, cell_seed(5, 3));
    }

    #[test]
    fn config_json_defaults() {
        let cfg: BenchConfig = serde_json::from_str(
            r#"{"phantom": {"builtin": "edge-512"},
                "grid": {"blur": [0], "noise": [0]},
                "detectors": [{"kind": "sobel", "name": "s", "threshold": 0.3}]}"#,
        )
        .unwrap();
        assert_eq!(cfg.grid.seed, 1);
        assert_eq!(cfg.grid.poisson, vec![false]);
        assert!(cfg.record_timing);
        let back: BenchConfig = serde_json::from_str(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(back, cfg);
    }
}
