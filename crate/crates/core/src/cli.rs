//! `generate | run | evaluate` batch commands.
//!
//! All paths live under `--output`:
//!
//! ```text
//! dataset/                   frames written by `generate`
//! runs/<method>/frame_0000.rd.bin       range × Doppler, f32 LE (re, im)
//! runs/<method>/frame_0000.traces.json  per-chirp traces (imfrac only)
//! runs/<method>/run.json                configuration of the run
//! metrics.csv                one row per (frame, method)
//! ecdf.json                  method → metric → [[value, F(value)], ...]
//! ```

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::evaluation::{ecdf, evaluate_map, MetricsRecord, METRIC_NAMES};
use crate::experiment::{ground_truth, process_frame, Method, PipelineConfig};
use crate::simulator::{
    read_frame, read_manifest, read_matrix, synth_frame, write_frame, write_manifest, write_matrix, DatasetManifest,
    ScenarioConfig, MANIFEST_VERSION,
};

pub const CONFIG_VERSION: u32 = 1;

pub const EXIT_BAD_CONFIG: i32 = 2;
pub const EXIT_MISSING_INPUT: i32 = 3;

/// Everything a batch command needs. Loaded from `--config`, then overridden by flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub version: u32,
    pub seed: u64,
    pub frames: usize,
    pub methods: Vec<Method>,
    /// Worker threads; `None` uses every core.
    pub threads: Option<usize>,
    /// Dataset directory, relative to the output directory.
    pub dataset: PathBuf,
    pub scenario: ScenarioConfig,
    pub pipeline: PipelineConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            version: CONFIG_VERSION,
            seed: 0,
            frames: 250,
            methods: Method::ALL.to_vec(),
            threads: None,
            dataset: PathBuf::from("dataset"),
            scenario: ScenarioConfig::default(),
            pipeline: PipelineConfig::default(),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "fracmit", version, about = "FMCW interference mitigation experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a dataset of interfered and clean frames.
    Generate(Flags),
    /// Mitigate every frame with every selected method.
    Run(Flags),
    /// Score run outputs against the ground truth.
    Evaluate(Flags),
}

#[derive(Debug, Clone, clap::Args)]
pub struct Flags {
    #[arg(long)]
    pub output: PathBuf,
    /// JSON run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub frames: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Comma-separated method names.
    #[arg(long, value_delimiter = ',')]
    pub methods: Option<Vec<String>>,
    #[arg(long)]
    pub m_angles: Option<usize>,
    /// Largest search angle in degrees.
    #[arg(long)]
    pub alpha_max: Option<f64>,
    #[arg(long)]
    pub guard: Option<usize>,
    #[arg(long)]
    pub beta_db: Option<f64>,
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("bad configuration: {0}")]
    BadConfig(String),
    #[error("missing input: {0}")]
    MissingInput(String),
    #[error(transparent)]
    Failed(#[from] Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::BadConfig(_) => EXIT_BAD_CONFIG,
            CliError::MissingInput(_) => EXIT_MISSING_INPUT,
            CliError::Failed(_) => 1,
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn bad(e: impl std::fmt::Display) -> CliError {
    CliError::BadConfig(e.to_string())
}

/// Maps "file not found" to a missing-input error.
fn reading(path: &Path) -> impl FnOnce(Error) -> CliError + '_ {
    move |e| match e {
        Error::Io(io) if io.kind() == io::ErrorKind::NotFound => CliError::MissingInput(path.display().to_string()),
        e => CliError::Failed(e),
    }
}

impl Flags {
    /// Config file contents with the flag overrides applied, validated.
    pub fn resolve(&self) -> CliResult<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => {
                let text = fs::read_to_string(p).map_err(|e| bad(format!("{}: {e}", p.display())))?;
                let cfg: RunConfig = serde_json::from_str(&text).map_err(|e| bad(format!("{}: {e}", p.display())))?;
                if cfg.version != CONFIG_VERSION {
                    return Err(bad(format!(
                        "config version {} is not supported (expected {CONFIG_VERSION})",
                        cfg.version
                    )));
                }
                cfg
            }
            None => RunConfig::default(),
        };
        if let Some(v) = self.frames {
            cfg.frames = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(names) = &self.methods {
            cfg.methods = names.iter().map(|n| n.trim().parse()).collect::<Result<_, _>>().map_err(bad)?;
        }
        let m = &mut cfg.pipeline.mitigation;
        if let Some(v) = self.m_angles {
            m.m_angles = v;
        }
        if let Some(v) = self.alpha_max {
            m.alpha_max_deg = v;
        }
        if let Some(v) = self.guard {
            m.guard_cells = v;
        }
        if let Some(v) = self.beta_db {
            m.threshold_db = v;
        }
        if let Some(v) = self.threads {
            cfg.threads = Some(v);
        }
        if cfg.methods.is_empty() {
            return Err(bad("no methods selected"));
        }
        if cfg.threads == Some(0) {
            return Err(bad("--threads must be positive"));
        }
        cfg.scenario.validate().map_err(bad)?;
        cfg.pipeline
            .mitigation
            .validate(cfg.scenario.victim.n_fast)
            .map_err(bad)?;
        Ok(cfg)
    }
}

fn frame_file(dir: &Path, index: usize, suffix: &str) -> PathBuf {
    dir.join(format!("frame_{index:04}.{suffix}"))
}

fn method_dir(output: &Path, method: Method) -> PathBuf {
    output.join("runs").join(method.name())
}

fn in_pool<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> CliResult<T> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        b = b.num_threads(n);
    }
    let pool = b.build().map_err(|e| CliError::Failed(Error::InvalidArgument(e.to_string())))?;
    Ok(pool.install(f))
}

pub fn cmd_generate(output: &Path, cfg: &RunConfig) -> CliResult<DatasetManifest> {
    let dir = output.join(&cfg.dataset);
    fs::create_dir_all(&dir).map_err(Error::from)?;
    let stats = in_pool(cfg.threads, || {
        (0..cfg.frames)
            .into_par_iter()
            .map(|i| {
                let f = synth_frame(&cfg.scenario, cfg.seed, i as u64)?;
                write_frame(&dir, i, &f)?;
                Ok((f.objects.len(), f.interferers.len(), f.components.len()))
            })
            .collect::<crate::Result<Vec<_>>>()
    })??;
    let manifest = DatasetManifest {
        version: MANIFEST_VERSION,
        seed: cfg.seed,
        frames: cfg.frames,
        scenario: cfg.scenario.clone(),
        object_counts: stats.iter().map(|s| s.0).collect(),
        interferer_counts: stats.iter().map(|s| s.1).collect(),
        segment_counts: stats.iter().map(|s| s.2).collect(),
    };
    write_manifest(&dir, &manifest)?;
    Ok(manifest)
}

fn open_dataset(output: &Path, cfg: &RunConfig) -> CliResult<(PathBuf, DatasetManifest)> {
    let dir = output.join(&cfg.dataset);
    let manifest = read_manifest(&dir).map_err(|e| match e {
        Error::Format(msg) => bad(msg),
        e => reading(&dir)(e),
    })?;
    Ok((dir, manifest))
}

/// Frames to process: the first `cfg.frames` of the dataset.
fn frame_count(cfg: &RunConfig, manifest: &DatasetManifest) -> usize {
    cfg.frames.min(manifest.frames)
}

pub fn cmd_run(output: &Path, cfg: &RunConfig) -> CliResult<()> {
    let (data, manifest) = open_dataset(output, cfg)?;
    let victim = manifest.scenario.victim;
    cfg.pipeline.mitigation.validate(victim.n_fast).map_err(bad)?;
    for &m in &cfg.methods {
        let dir = method_dir(output, m);
        fs::create_dir_all(&dir).map_err(Error::from)?;
        fs::write(dir.join("run.json"), serde_json::to_string_pretty(cfg).map_err(Error::from)?).map_err(Error::from)?;
    }
    in_pool(cfg.threads, || {
        (0..frame_count(cfg, &manifest)).into_par_iter().try_for_each(|i| {
            let frame = read_frame(&data, i, &manifest.scenario).map_err(reading(&data))?;
            for &m in &cfg.methods {
                let out = process_frame(&frame, m, &victim, &cfg.pipeline)?;
                let dir = method_dir(output, m);
                write_matrix(&frame_file(&dir, i, "rd.bin"), &out.rd)?;
                if m == Method::Imfrac {
                    fs::write(
                        frame_file(&dir, i, "traces.json"),
                        serde_json::to_string(&out.traces).map_err(Error::from)?,
                    )
                    .map_err(Error::from)?;
                }
            }
            Ok(())
        })
    })?
}

pub fn cmd_evaluate(output: &Path, cfg: &RunConfig) -> CliResult<Vec<MetricsRecord>> {
    let (data, manifest) = open_dataset(output, cfg)?;
    let victim = manifest.scenario.victim;
    let (rows, cols) = (victim.n_fast / 2, victim.n_slow);
    let per_frame = in_pool(cfg.threads, || {
        (0..frame_count(cfg, &manifest))
            .into_par_iter()
            .map(|i| {
                let frame = read_frame(&data, i, &manifest.scenario).map_err(reading(&data))?;
                let (truth, det) = ground_truth(&frame, &victim, &cfg.pipeline.cfar)?;
                cfg.methods
                    .iter()
                    .map(|&m| {
                        let path = frame_file(&method_dir(output, m), i, "rd.bin");
                        let pred = read_matrix(&path, rows, cols).map_err(reading(&path))?;
                        Ok(evaluate_map(i, m.name(), pred.view(), truth.view(), det.view(), &cfg.pipeline.cfar)?)
                    })
                    .collect::<CliResult<Vec<_>>>()
            })
            .collect::<CliResult<Vec<_>>>()
    })??;
    let records: Vec<MetricsRecord> = per_frame.into_iter().flatten().collect();

    let mut csv = String::from(MetricsRecord::CSV_HEADER);
    csv.push('\n');
    for r in &records {
        csv.push_str(&r.to_csv_row());
        csv.push('\n');
    }
    fs::write(output.join("metrics.csv"), csv).map_err(Error::from)?;

    let mut curves: BTreeMap<&str, BTreeMap<&str, Vec<(f64, f64)>>> = BTreeMap::new();
    for &m in &cfg.methods {
        let entry = curves.entry(m.name()).or_default();
        for name in METRIC_NAMES {
            let vals: Vec<f64> = records
                .iter()
                .filter(|r| r.method == m.name())
                .filter_map(|r| r.metric(name))
                .filter(|v| v.is_finite())
                .collect();
            let curve = if vals.is_empty() { Vec::new() } else { ecdf(&vals)? };
            entry.insert(name, curve);
        }
    }
    fs::write(output.join("ecdf.json"), serde_json::to_string_pretty(&curves).map_err(Error::from)?)
        .map_err(Error::from)?;
    Ok(records)
}

pub fn execute(cli: Cli) -> CliResult<()> {
    let mut stdout = io::stdout().lock();
    match cli.command {
        Command::Generate(f) => {
            let cfg = f.resolve()?;
            let m = cmd_generate(&f.output, &cfg)?;
            let _ = writeln!(stdout, "generated {} frames in {}", m.frames, f.output.join(&cfg.dataset).display());
        }
        Command::Run(f) => {
            let cfg = f.resolve()?;
            cmd_run(&f.output, &cfg)?;
            let _ = writeln!(stdout, "wrote runs for {} methods to {}", cfg.methods.len(), f.output.join("runs").display());
        }
        Command::Evaluate(f) => {
            let cfg = f.resolve()?;
            let records = cmd_evaluate(&f.output, &cfg)?;
            let _ = writeln!(stdout, "{:<16} {:>12} {:>10} {:>10}", "method", "median mse", "median f1", "median far");
            for &m in &cfg.methods {
                let of = |name: &str| {
                    crate::evaluation::median(records.iter().filter(|r| r.method == m.name()).map(|r| r.metric(name)))
                };
                let show = |v: Option<f64>| v.map(|x| format!("{x:.4e}")).unwrap_or_else(|| "-".into());
                let _ = writeln!(stdout, "{:<16} {:>12} {:>10} {:>10}", m.name(), show(of("mse")), show(of("f1")), show(of("far")));
            }
        }
    }
    Ok(())
}

/// Parses `args` (including the program name) and runs the command. Returns the
/// process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_BAD_CONFIG } else { 0 };
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
