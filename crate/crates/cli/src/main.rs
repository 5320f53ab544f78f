use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use coshrem::metrics::PRATT_A;
use coshrem::phantoms::{PhantomMode, PhantomSpec};
use coshrem::pipeline::DetectorConfig;
use coshrem::{MeasureKind, Polarity};
use coshrem_cli::bench::{builtin_phantom, run_grid, BenchConfig, Cell};
use coshrem_cli::commands::{self, CommandError, DetectRequest, PhantomRequest};
use coshrem_cli::server::{self, AppState};
use coshrem_cli::syscache::{DiskCache, LayeredCache};

#[derive(Parser)]
#[command(name = "coshrem", version, about = "Shearlet edge and ridge detection")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a (corrupted) phantom with its ground truth.
    Phantom(PhantomArgs),
    /// Detect edges or ridges in an image.
    Detect(DetectArgs),
    /// Run the corruption-grid benchmark from a JSON config.
    Bench(BenchArgs),
    /// Pratt's figure of merit of a detection against a truth image.
    Pfom(PfomArgs),
    /// Serve the HTTP API.
    Serve(ServeArgs),
}

#[derive(Args)]
struct PhantomArgs {
    /// `edge-512`, `ridge-512` or `circle`.
    #[arg(long, default_value = "edge-512", conflicts_with = "spec")]
    preset: String,
    /// JSON phantom spec instead of a preset.
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Circle preset: image side.
    #[arg(long, default_value_t = 256)]
    size: usize,
    /// Circle preset: radius in pixels.
    #[arg(long, default_value_t = 100.0)]
    radius: f64,
    /// Circle preset: draw a 3 px ring instead of a disc.
    #[arg(long)]
    ridge: bool,
    #[arg(long, default_value_t = 0.0)]
    blur: f64,
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    #[arg(long)]
    poisson: bool,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Output path without extension.
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Args)]
struct ParamArgs {
    #[arg(long, value_enum, default_value = "edge")]
    mode: ModeArg,
    /// JSON detector config; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    wavelet_support: Option<f64>,
    #[arg(long)]
    gaussian_support: Option<f64>,
    #[arg(long)]
    scales_per_octave: Option<u32>,
    #[arg(long)]
    octaves: Option<f64>,
    #[arg(long)]
    shear_level: Option<u32>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    min_contrast: Option<f64>,
    #[arg(long)]
    epsilon_factor: Option<f64>,
    /// Comma-separated scale indices.
    #[arg(long, value_delimiter = ',')]
    pivot_scales: Option<Vec<usize>>,
    #[arg(long, value_enum)]
    polarity: Option<PolarityArg>,
    #[arg(long)]
    low: Option<f64>,
    #[arg(long)]
    high: Option<f64>,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum ModeArg {
    Edge,
    Ridge,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum PolarityArg {
    Positive,
    Negative,
    Both,
}

impl ParamArgs {
    fn resolve(&self) -> anyhow::Result<DetectorConfig> {
        let mut c = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .with_context(|| format!("reading {}", path.display()))?;
                serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
            }
            None => DetectorConfig::default_for(match self.mode {
                ModeArg::Edge => MeasureKind::Edge,
                ModeArg::Ridge => MeasureKind::Ridge,
            }),
        };
        let s = &mut c.system;
        s.wavelet_support = self.wavelet_support.unwrap_or(s.wavelet_support);
        s.gaussian_support = self.gaussian_support.unwrap_or(s.gaussian_support);
        s.scales_per_octave = self.scales_per_octave.unwrap_or(s.scales_per_octave);
        s.octaves = self.octaves.unwrap_or(s.octaves);
        s.shear_level = self.shear_level.unwrap_or(s.shear_level);
        s.alpha = self.alpha.unwrap_or(s.alpha);
        let d = &mut c.detection;
        d.min_contrast = self.min_contrast.unwrap_or(d.min_contrast);
        d.epsilon_factor = self.epsilon_factor.unwrap_or(d.epsilon_factor);
        if let Some(p) = &self.pivot_scales {
            d.pivot_scales = p.clone();
        }
        if let Some(p) = self.polarity {
            d.polarity = match p {
                PolarityArg::Positive => Polarity::Positive,
                PolarityArg::Negative => Polarity::Negative,
                PolarityArg::Both => Polarity::Both,
            };
        }
        c.thresholds.low = self.low.unwrap_or(c.thresholds.low);
        c.thresholds.high = self.high.unwrap_or(c.thresholds.high);
        c.validate()?;
        Ok(c)
    }
}

#[derive(Args)]
struct DetectArgs {
    image: PathBuf,
    #[command(flatten)]
    params: ParamArgs,
    /// Directory for the output files.
    #[arg(long, short, default_value = ".")]
    out: PathBuf,
    /// Directory of stored shearlet systems.
    #[arg(long, default_value_os_t = default_cache_dir())]
    cache_dir: PathBuf,
    /// Always build the system and store nothing.
    #[arg(long)]
    no_cache: bool,
}

#[derive(Args)]
struct BenchArgs {
    /// JSON bench config; the standard EDGE-512 grid if omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the config's output directory.
    #[arg(long, short)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Write 0 in the `ms` column so reruns are byte-identical.
    #[arg(long)]
    no_timing: bool,
}

#[derive(Args)]
struct PfomArgs {
    detected: PathBuf,
    truth: PathBuf,
    /// Scaling constant of the figure of merit.
    #[arg(long, default_value_t = PRATT_A)]
    a: f64,
    /// Thin the detection before scoring.
    #[arg(long)]
    thin: bool,
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1:8080")]
    bind: String,
    #[arg(long, default_value_os_t = default_cache_dir())]
    cache_dir: PathBuf,
    /// Systems kept in memory.
    #[arg(long, default_value_t = 4)]
    memory_systems: usize,
}

fn default_cache_dir() -> PathBuf {
    std::env::var_os("XDG_CACHE_HOME")
        .map(PathBuf::from)
        .unwrap_or_else(std::env::temp_dir)
        .join("coshrem")
}

fn phantom(args: PhantomArgs) -> anyhow::Result<()> {
    let spec = match &args.spec {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
        }
        None if args.preset == "circle" => {
            let mode = if args.ridge { PhantomMode::Ridge } else { PhantomMode::Edge };
            PhantomSpec::circle(args.size, args.radius, mode)
        }
        None => builtin_phantom(&args.preset)?,
    };
    let req = PhantomRequest {
        spec,
        corruption: Cell {
            blur: args.blur,
            noise: args.noise,
            poisson: args.poisson,
            seed: args.seed,
        },
        out: args.out,
    };
    for path in commands::phantom(&req)? {
        println!("{}", path.display());
    }
    Ok(())
}

fn detect(args: DetectArgs) -> Result<(), CommandError> {
    let req = DetectRequest {
        input: args.image,
        config: args.params.resolve()?,
        out_dir: args.out,
        cache_dir: (!args.no_cache).then_some(args.cache_dir),
    };
    let summary = commands::detect(&req)?;
    println!(
        "{} skeleton pixels; system {} ({:.0} ms build, {:.0} ms load), detection {:.0} ms",
        summary.stats.skeleton_pixels,
        if summary.cache_hit { "cached" } else { "built" },
        summary.timings.build_ms,
        summary.timings.load_ms,
        summary.timings.detect_ms,
    );
    for path in &summary.outputs {
        println!("{}", path.display());
    }
    Ok(())
}

fn bench(args: BenchArgs) -> anyhow::Result<()> {
    let mut config = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            serde_json::from_str::<BenchConfig>(&text).with_context(|| format!("parsing {}", path.display()))?
        }
        None => BenchConfig::standard_edge(),
    };
    if let Some(seed) = args.seed {
        config.grid.seed = seed;
    }
    if args.no_timing {
        config.record_timing = false;
    }
    let report = run_grid(&config)?;
    match args.out.or(config.output_dir) {
        Some(dir) => {
            report.write(&dir)?;
            eprintln!("wrote {}", dir.join("report.csv").display());
        }
        None => print!("{}", report.to_csv()),
    }
    for row in report.rows.iter().filter(|r| r.error.is_some()) {
        eprintln!(
            "{} at blur {} noise {}: {}",
            row.detector,
            row.blur,
            row.noise,
            row.error.as_deref().unwrap_or_default()
        );
    }
    Ok(())
}

fn serve(args: ServeArgs) -> anyhow::Result<()> {
    let cache = LayeredCache::new(args.memory_systems, Some(DiskCache::new(args.cache_dir)));
    let state = Arc::new(AppState::new(cache));
    tokio::runtime::Runtime::new()?.block_on(server::serve(&args.bind, state))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Phantom(a) => phantom(a).map_err(CommandError::from),
        Command::Detect(a) => detect(a),
        Command::Bench(a) => bench(a).map_err(CommandError::from),
        Command::Pfom(a) => commands::pfom_files(&a.detected, &a.truth, a.a, a.thin)
            .map(|score| println!("{score:.6}"))
            .map_err(CommandError::from),
        Command::Serve(a) => serve(a).map_err(CommandError::from),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
