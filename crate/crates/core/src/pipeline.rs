//! End-to-end detection with reusable shearlet systems.

use std::collections::HashMap;
use std::sync::{Arc, RwLock};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{BinaryMap, GrayImage};
use crate::measures::{
    curvature_along, measure_image, orientation_map, CurvatureMap, DetectionParams, MeasureKind,
    MeasureMap, OrientationMap,
};
use crate::postprocess::{hysteresis_threshold, thin};
use crate::shearlets::{cache_key, ShearletSystem, SystemParams};

/// Hysteresis thresholds as fractions of the measure's maximum of 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub low: f64,
    pub high: f64,
}

impl Thresholds {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.low) {
            return Err(Error::param("low", "must lie in [0, 1]"));
        }
        if !(0.0..=1.0).contains(&self.high) {
            return Err(Error::param("high", "must lie in [0, 1]"));
        }
        if self.low > self.high {
            return Err(Error::param("low", "must not exceed `high`"));
        }
        Ok(())
    }
}

/// Everything needed to run one detection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorConfig {
    pub mode: MeasureKind,
    pub system: SystemParams,
    pub detection: DetectionParams,
    pub thresholds: Thresholds,
}

impl DetectorConfig {
    pub fn edge_default() -> Self {
        Self {
            mode: MeasureKind::Edge,
            system: SystemParams::edge_default(),
            detection: DetectionParams::edge_default(),
            thresholds: Thresholds {
                low: 0.3,
                high: 0.5,
            },
        }
    }

    pub fn ridge_default() -> Self {
        Self {
            mode: MeasureKind::Ridge,
            system: SystemParams::ridge_default(),
            detection: DetectionParams::ridge_default(),
            thresholds: Thresholds {
                low: 0.3,
                high: 0.5,
            },
        }
    }

    pub fn default_for(mode: MeasureKind) -> Self {
        match mode {
            MeasureKind::Edge => Self::edge_default(),
            MeasureKind::Ridge => Self::ridge_default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.system.validate()?;
        self.detection.validate(self.system.scale_count())?;
        self.thresholds.validate()
    }
}

/// Output of one detection.
#[derive(Debug, Clone)]
pub struct Detection {
    pub measure: MeasureMap,
    pub orientation: OrientationMap,
    /// Thinned hysteresis output.
    pub skeleton: BinaryMap,
    pub curvature: CurvatureMap,
    /// Skeleton pixels without an orientation estimate.
    pub skipped: Vec<(usize, usize)>,
    /// Milliseconds spent on measure, orientation and post-processing.
    pub detect_ms: f64,
}

/// A configuration bound to a built system.
#[derive(Debug, Clone)]
pub struct Detector {
    config: DetectorConfig,
    system: Arc<ShearletSystem>,
}

impl Detector {
    /// Builds a fresh system for `width × height` images.
    pub fn new(config: DetectorConfig, width: usize, height: usize) -> Result<Self> {
        config.validate()?;
        let system = Arc::new(ShearletSystem::build(config.system, width, height)?);
        Ok(Self { config, system })
    }

    /// Uses an existing system, which must match the configuration.
    pub fn with_system(config: DetectorConfig, system: Arc<ShearletSystem>) -> Result<Self> {
        config.validate()?;
        if *system.params() != config.system {
            return Err(Error::SystemMismatch);
        }
        Ok(Self { config, system })
    }

    pub fn config(&self) -> &DetectorConfig {
        &self.config
    }

    pub fn system(&self) -> &Arc<ShearletSystem> {
        &self.system
    }

    pub fn detect(&self, image: &GrayImage) -> Result<Detection> {
        let start = Instant::now();
        let (measure, pivot) =
            measure_image(&self.system, image, self.config.mode, &self.config.detection)?;
        let orientation = orientation_map(&measure, &pivot, &self.system)?;
        let t = self.config.thresholds;
        let skeleton = thin(&hysteresis_threshold(&measure, t.low, t.high)?);
        let (curvature, skipped) = curvature_along(&skeleton, &orientation)?;
        Ok(Detection {
            measure,
            orientation,
            skeleton,
            curvature,
            skipped,
            detect_ms: start.elapsed().as_secs_f64() * 1e3,
        })
    }
}

/// How a system was obtained from a [`SystemCache`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CacheLookup {
    pub hit: bool,
    /// Time spent constructing the system; 0 on a hit.
    pub build_ms: f64,
    /// Time spent on the lookup itself.
    pub load_ms: f64,
}

/// Shared, bounded store of built systems keyed by [`cache_key`].
///
/// Many readers may look up systems concurrently; a miss builds outside the
/// lock and inserts under a short write lock.
#[derive(Debug)]
pub struct SystemCache {
    capacity: usize,
    entries: RwLock<HashMap<String, (u64, Arc<ShearletSystem>)>>,
    clock: std::sync::atomic::AtomicU64,
}

impl SystemCache {
    pub fn new(capacity: usize) -> Self {
        Self {
            capacity: capacity.max(1),
            entries: RwLock::new(HashMap::new()),
            clock: Default::default(),
        }
    }

    fn tick(&self) -> u64 {
        self.clock.fetch_add(1, std::sync::atomic::Ordering::Relaxed)
    }

    pub fn len(&self) -> usize {
        self.entries.read().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, key: &str) -> Option<Arc<ShearletSystem>> {
        let mut entries = self.entries.write().expect("cache lock");
        let stamp = self.tick();
        entries.get_mut(key).map(|e| {
            e.0 = stamp;
            e.1.clone()
        })
    }

    /// Inserts a system, evicting the least recently used entry when full.
    pub fn insert(&self, system: Arc<ShearletSystem>) {
        let mut entries = self.entries.write().expect("cache lock");
        let key = system.cache_key().to_string();
        if !entries.contains_key(&key) && entries.len() >= self.capacity {
            if let Some(oldest) = entries
                .iter()
                .min_by_key(|(_, (stamp, _))| *stamp)
                .map(|(k, _)| k.clone())
            {
                entries.remove(&oldest);
            }
        }
        let stamp = self.tick();
        entries.insert(key, (stamp, system));
    }

    /// Returns the cached system or builds and stores it.
    pub fn get_or_build(
        &self,
        params: SystemParams,
        width: usize,
        height: usize,
    ) -> Result<(Arc<ShearletSystem>, CacheLookup)> {
        let start = Instant::now();
        let key = cache_key(&params, width, height);
        if let Some(system) = self.get(&key) {
            return Ok((
                system,
                CacheLookup {
                    hit: true,
                    build_ms: 0.0,
                    load_ms: start.elapsed().as_secs_f64() * 1e3,
                },
            ));
        }
        let build = Instant::now();
        let system = Arc::new(ShearletSystem::build(params, width, height)?);
        let build_ms = build.elapsed().as_secs_f64() * 1e3;
        self.insert(system.clone());
        Ok((
            system,
            CacheLookup {
                hit: false,
                build_ms,
                load_ms: 0.0,
            },
        ))
    }
}

impl Default for SystemCache {
    fn default() -> Self {
        Self::new(4)
    }
}
