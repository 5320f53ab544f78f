//! On-disk store of built shearlet systems, one file per cache key.
//!
//! File layout (little endian): 8-byte magic, `u32` format version, the six
//! system parameters, width and height, the per-scale gains and then every
//! filter's even spectrum as `f32`.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use coshrem::pipeline::{CacheLookup, SystemCache};
use coshrem::shearlets::cache_key;
use coshrem::{ShearletSystem, SystemParams};

const MAGIC: &[u8; 8] = b"CSHRMSYS";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum CacheFileError {
    #[error("cache file I/O: {0}")]
    Io(#[from] std::io::Error),
    #[error("not a system cache file")]
    BadMagic,
    #[error("cache file format version {0} is not supported (expected {FORMAT_VERSION})")]
    Version(u32),
    #[error("cache file describes a different system")]
    Mismatch,
    #[error(transparent)]
    System(#[from] coshrem::Error),
}

/// Directory of cache files.
#[derive(Debug, Clone)]
pub struct DiskCache {
    dir: PathBuf,
}

impl DiskCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path_for(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.shs"))
    }

    /// Loads the system for `params` at `width × height`, if a valid file exists.
    pub fn load(
        &self,
        params: &SystemParams,
        width: usize,
        height: usize,
    ) -> Result<Option<ShearletSystem>, CacheFileError> {
        let path = self.path_for(&cache_key(params, width, height));
        let file = match File::open(&path) {
            Ok(f) => f,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(e.into()),
        };
        let system = read_system(&mut BufReader::with_capacity(1 << 20, file))?;
        if system.params() != params || system.dims() != (width, height) {
            return Err(CacheFileError::Mismatch);
        }
        Ok(Some(system))
    }

    /// Writes the system atomically (temporary file, then rename).
    pub fn store(&self, system: &ShearletSystem) -> Result<PathBuf, CacheFileError> {
        fs::create_dir_all(&self.dir)?;
        let path = self.path_for(system.cache_key());
        let tmp = self
            .dir
            .join(format!(".{}.{}.tmp", system.cache_key(), std::process::id()));
        {
            let mut out = BufWriter::with_capacity(1 << 20, File::create(&tmp)?);
            write_system(&mut out, system)?;
            out.flush()?;
        }
        fs::rename(&tmp, &path)?;
        Ok(path)
    }
}

pub fn write_system(out: &mut impl Write, system: &ShearletSystem) -> std::io::Result<()> {
    let p = system.params();
    out.write_all(MAGIC)?;
    out.write_all(&FORMAT_VERSION.to_le_bytes())?;
    out.write_all(&p.wavelet_support.to_le_bytes())?;
    out.write_all(&p.gaussian_support.to_le_bytes())?;
    out.write_all(&p.scales_per_octave.to_le_bytes())?;
    out.write_all(&p.octaves.to_le_bytes())?;
    out.write_all(&p.shear_level.to_le_bytes())?;
    out.write_all(&p.alpha.to_le_bytes())?;
    out.write_all(&(system.width() as u64).to_le_bytes())?;
    out.write_all(&(system.height() as u64).to_le_bytes())?;
    for g in system.scale_gain() {
        out.write_all(&g.to_le_bytes())?;
    }
    let mut buf = Vec::with_capacity(system.width() * system.height() * 4);
    for f in system.filters() {
        buf.clear();
        buf.extend(f.even_spectrum().iter().flat_map(|v| v.to_le_bytes()));
        out.write_all(&buf)?;
    }
    Ok(())
}

fn read_array<const N: usize>(r: &mut impl Read) -> std::io::Result<[u8; N]> {
    let mut b = [0; N];
    r.read_exact(&mut b)?;
    Ok(b)
}

fn read_f64(r: &mut impl Read) -> std::io::Result<f64> {
    read_array(r).map(f64::from_le_bytes)
}

fn read_u32(r: &mut impl Read) -> std::io::Result<u32> {
    read_array(r).map(u32::from_le_bytes)
}

pub fn read_system(r: &mut impl Read) -> Result<ShearletSystem, CacheFileError> {
    if &read_array::<8>(r)? != MAGIC {
        return Err(CacheFileError::BadMagic);
    }
    let version = read_u32(r)?;
    if version != FORMAT_VERSION {
        return Err(CacheFileError::Version(version));
    }
    let params = SystemParams {
        wavelet_support: read_f64(r)?,
        gaussian_support: read_f64(r)?,
        scales_per_octave: read_u32(r)?,
        octaves: read_f64(r)?,
        shear_level: read_u32(r)?,
        alpha: read_f64(r)?,
    };
    params.validate()?;
    let width = u64::from_le_bytes(read_array(r)?) as usize;
    let height = u64::from_le_bytes(read_array(r)?) as usize;
    let n = width.checked_mul(height).ok_or(CacheFileError::Mismatch)?;
    let gains = (0..params.scale_count())
        .map(|_| read_f64(r))
        .collect::<std::io::Result<Vec<_>>>()?;
    let mut raw = vec![0u8; n * 4];
    let mut spectra = Vec::with_capacity(params.filter_count());
    for _ in 0..params.filter_count() {
        r.read_exact(&mut raw)?;
        spectra.push(
            raw.chunks_exact(4)
                .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
                .collect(),
        );
    }
    Ok(ShearletSystem::from_parts(params, width, height, spectra, gains)?)
}

/// Memory cache in front of an optional disk cache.
///
/// Misses are resolved under a single build lock, so concurrent requests for
/// the same system never construct it twice.
#[derive(Debug)]
pub struct LayeredCache {
    memory: SystemCache,
    disk: Option<DiskCache>,
    build_lock: std::sync::Mutex<()>,
}

impl LayeredCache {
    pub fn new(capacity: usize, disk: Option<DiskCache>) -> Self {
        Self {
            memory: SystemCache::new(capacity),
            disk,
            build_lock: std::sync::Mutex::new(()),
        }
    }

    pub fn disk(&self) -> Option<&DiskCache> {
        self.disk.as_ref()
    }

    /// Returns the system, reporting whether it was found (memory or disk) and
    /// how long building or loading took. Unreadable cache files are rebuilt.
    pub fn get_or_build(
        &self,
        params: SystemParams,
        width: usize,
        height: usize,
    ) -> coshrem::Result<(Arc<ShearletSystem>, CacheLookup)> {
        let start = Instant::now();
        let key = cache_key(&params, width, height);
        if let Some(system) = self.memory.get(&key) {
            return Ok((system, hit(start)));
        }
        let _guard = self.build_lock.lock().unwrap_or_else(|e| e.into_inner());
        if let Some(system) = self.memory.get(&key) {
            return Ok((system, hit(start)));
        }
        if let Some(disk) = &self.disk {
            if let Ok(Some(system)) = disk.load(&params, width, height) {
                let system = Arc::new(system);
                self.memory.insert(system.clone());
                return Ok((system, hit(start)));
            }
        }
        let build = Instant::now();
        let system = Arc::new(ShearletSystem::build(params, width, height)?);
        let build_ms = build.elapsed().as_secs_f64() * 1e3;
        if let Some(disk) = &self.disk {
            // a failed write only costs a rebuild next time
            let _ = disk.store(&system);
        }
        self.memory.insert(system.clone());
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

fn hit(start: Instant) -> CacheLookup {
    CacheLookup {
        hit: true,
        build_ms: 0.0,
        load_ms: start.elapsed().as_secs_f64() * 1e3,
    }
}
