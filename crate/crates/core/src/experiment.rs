//! Whole runs: batch sourcing, the cycle loop, and on-disk artifacts.
//!
//! A run directory holds `telemetry.csv`, `action_histogram.csv`,
//! `manifest.json`, and either `coverage.json` (mixture data) or
//! `samples-*.pgm` grids (image data).

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::config::{FscoConfig, Preset};
use crate::controller::{
    compute_reward, AgentPolicy, ConstantPolicy, ControlParams, CycleRecord, FixedRateLoop, FscoLoop,
};
use crate::data::{load_mnist, mode_coverage, sample_mixture, write_image_grid, Coverage, Dataset, MixtureSpec};
use crate::ddpg::DdpgAgent;
use crate::error::{FscoError, Result};
use crate::gan::GanPair;
use crate::par;
use crate::rng::{stream, Rng, Stream};
use crate::telemetry::write_telemetry;
use crate::tensor::Tensor;

pub const IMAGES_FILE: &str = "train-images-idx3-ubyte";
pub const LABELS_FILE: &str = "train-labels-idx1-ubyte";
/// Samples per emitted image grid (4 × 4).
pub const GRID_SAMPLES: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RunMode {
    /// Agent-controlled discriminator step size.
    Fsco,
    /// Standalone fixed-rate loop at `u ≡ 1`.
    Baseline,
    /// Controller loop driven by a constant action instead of the agent.
    Constant(f64),
}

impl RunMode {
    pub fn label(&self) -> String {
        match self {
            RunMode::Fsco => "fsco".into(),
            RunMode::Baseline => "baseline".into(),
            RunMode::Constant(u) => format!("constant-{u}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunStatus {
    Completed,
    NumericAbort,
    IoError,
}

/// Counts of `u` in 20 equal bins over `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ActionHistogram {
    pub counts: [u64; ActionHistogram::BINS],
    /// Actions below 0.05, the "waiting" band.
    pub waiting: u64,
    pub total: u64,
}

impl ActionHistogram {
    pub const BINS: usize = 20;
    pub const WAIT_BELOW: f64 = 0.05;

    pub fn from_actions(actions: impl IntoIterator<Item = f64>) -> Self {
        let mut h = ActionHistogram::default();
        for u in actions {
            let bin = ((u * Self::BINS as f64) as usize).min(Self::BINS - 1);
            h.counts[bin] += 1;
            h.waiting += (u < Self::WAIT_BELOW) as u64;
            h.total += 1;
        }
        h
    }

    pub fn merge(&mut self, other: &ActionHistogram) {
        for (a, b) in self.counts.iter_mut().zip(other.counts) {
            *a += b;
        }
        self.waiting += other.waiting;
        self.total += other.total;
    }

    pub fn waiting_fraction(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.waiting as f64 / self.total as f64
        }
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("bin_lo,bin_hi,count,fraction\n");
        let w = 1.0 / Self::BINS as f64;
        for (i, &c) in self.counts.iter().enumerate() {
            let frac = if self.total == 0 { 0.0 } else { c as f64 / self.total as f64 };
            let _ = writeln!(s, "{:.2},{:.2},{c},{frac:.6}", i as f64 * w, (i + 1) as f64 * w);
        }
        s
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub records: Vec<CycleRecord>,
    pub total_cycles: u64,
    pub status: RunStatus,
    pub message: Option<String>,
    pub coverage: Option<Coverage>,
    pub histogram: ActionHistogram,
    /// Final generator draws used for coverage or the last image grid.
    pub final_samples: Option<Tensor>,
}

/// Serialized as `manifest.json`, once per run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    /// `FscoConfig::to_text` of the effective configuration.
    pub config: String,
    pub seed: u64,
    pub mode: String,
    pub started: String,
    pub finished: String,
    pub out_dir: PathBuf,
    pub status: RunStatus,
    pub cycles_completed: u64,
    pub total_cycles: u64,
    pub message: Option<String>,
    pub coverage: Option<Coverage>,
    pub waiting_fraction: f64,
}

impl RunManifest {
    pub fn config(&self) -> Result<FscoConfig> {
        FscoConfig::parse(&self.config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| FscoError::io(path, e))?;
        serde_json::from_str(&text)
            .map_err(|e| FscoError::Format { offset: e.column(), msg: format!("{}: {e}", path.display()) })
    }
}

pub fn mixture_spec(cfg: &FscoConfig) -> Result<MixtureSpec> {
    MixtureSpec::ring(cfg.mixture_modes, cfg.mixture_radius, cfg.mixture_sigma)
}

/// Image data for the configured preset; `None` for the mixture stream.
pub fn load_dataset(cfg: &FscoConfig) -> Result<Option<Dataset>> {
    match cfg.preset {
        Preset::Synthetic => Ok(None),
        Preset::Mnist28 => {
            let dir = cfg.data_dir.as_deref().ok_or_else(|| FscoError::Config {
                line: 0,
                key: "data_dir".into(),
                msg: "image preset needs a data directory (set data_dir or FSCO_DATA_DIR)".into(),
            })?;
            load_mnist(&dir.join(IMAGES_FILE), &dir.join(LABELS_FILE)).map(Some)
        }
    }
}

/// `cycles` when set, otherwise `epochs × ⌈N / batch⌉`.
pub fn total_cycles(cfg: &FscoConfig, dataset_len: Option<usize>) -> u64 {
    match (cfg.cycles, dataset_len) {
        (Some(c), _) => c,
        (None, Some(n)) => cfg.epochs * n.div_ceil(cfg.batch) as u64,
        (None, None) => 0,
    }
}

enum Batches {
    Mixture { spec: MixtureSpec, batch: usize, rng: Rng },
    Images { data: Dataset, order: Vec<usize>, pos: usize, batch: usize, rng: Rng },
}

impl Batches {
    fn new(cfg: &FscoConfig, dataset: Option<Dataset>) -> Result<Self> {
        let rng = stream(cfg.seed, Stream::Data);
        Ok(match dataset {
            None => Batches::Mixture { spec: mixture_spec(cfg)?, batch: cfg.batch, rng },
            Some(data) => {
                let order = (0..data.len()).collect();
                Batches::Images { data, order, pos: usize::MAX, batch: cfg.batch, rng }
            }
        })
    }

    fn data_dim(&self) -> usize {
        match self {
            Batches::Mixture { .. } => 2,
            Batches::Images { data, .. } => data.data_dim(),
        }
    }

    /// Mixture draws are fresh each call; images walk a per-epoch shuffle
    /// and the last batch of an epoch may be short.
    fn next(&mut self) -> Result<Tensor> {
        match self {
            Batches::Mixture { spec, batch, rng } => Ok(sample_mixture(spec, *batch, rng)?.samples().clone()),
            Batches::Images { data, order, pos, batch, rng } => {
                if *pos >= order.len() {
                    order.shuffle(rng);
                    *pos = 0;
                }
                let end = (*pos + *batch).min(order.len());
                let rows = data.samples().gather_rows(&order[*pos..end]);
                *pos = end;
                Ok(rows)
            }
        }
    }
}

enum Runner {
    Agent(Box<FscoLoop<AgentPolicy>>),
    Constant(Box<FscoLoop<ConstantPolicy>>),
    Fixed { inner: Box<FixedRateLoop>, eta_d_base: f64 },
}

impl Runner {
    fn new(cfg: &FscoConfig, mode: RunMode, data_dim: usize) -> Result<Self> {
        let gan = GanPair::mlp(
            cfg.noise_dim,
            data_dim,
            &cfg.g_hidden,
            &cfg.d_hidden,
            cfg.gan_options(),
            &mut stream(cfg.seed, Stream::GanInit),
        )?;
        let params = ControlParams {
            eta_g: cfg.eta_g,
            eta_d_base: cfg.eta_d_base,
            u_floor: cfg.u_floor,
            ema_window: cfg.ema_window,
        };
        Ok(match mode {
            RunMode::Fsco => {
                let agent = DdpgAgent::new(cfg.ddpg(), &mut stream(cfg.seed, Stream::AgentInit))?;
                let policy = AgentPolicy::new(agent, cfg.seed);
                Runner::Agent(Box::new(FscoLoop::new(gan, policy, params, cfg.seed)))
            }
            RunMode::Constant(u) => {
                Runner::Constant(Box::new(FscoLoop::new(gan, ConstantPolicy(u), params, cfg.seed)))
            }
            RunMode::Baseline => Runner::Fixed {
                inner: Box::new(FixedRateLoop::new(gan, cfg.eta_g, cfg.eta_d_base, cfg.seed)),
                eta_d_base: cfg.eta_d_base,
            },
        })
    }

    fn step(&mut self, step: u64, real: &Tensor) -> Result<CycleRecord> {
        match self {
            Runner::Agent(l) => l.run_cycle(real),
            Runner::Constant(l) => l.run_cycle(real),
            Runner::Fixed { inner, eta_d_base } => {
                let started = Instant::now();
                let report = inner.run_cycle(real)?;
                let reward = compute_reward(report.g_loss, report.d_loss).map_err(|e| e.at_cycle(step))?;
                Ok(CycleRecord {
                    step,
                    g_loss: report.g_loss,
                    d_loss: report.d_loss,
                    action_u: 1.0,
                    eta_fsco_d: *eta_d_base * 1.0,
                    reward,
                    wall_time: started.elapsed().as_secs_f64(),
                })
            }
        }
    }

    fn gan(&self) -> &GanPair {
        match self {
            Runner::Agent(l) => &l.gan,
            Runner::Constant(l) => &l.gan,
            Runner::Fixed { inner, .. } => &inner.gan,
        }
    }
}

/// Runs every cycle of `cfg` in `mode`. With `out` set, artifacts go to that
/// (existing) directory. A numeric failure ends the run early with status
/// `NumericAbort` and keeps everything recorded up to that point; other
/// failures are returned as errors.
pub fn run_experiment(cfg: &FscoConfig, mode: RunMode, out: Option<&Path>) -> Result<RunOutcome> {
    cfg.validate()?;
    if let RunMode::Constant(u) = mode {
        crate::controller::modulate_step_size(cfg.eta_d_base, u, cfg.u_floor)?;
    }
    let empty = |total_cycles| RunOutcome {
        records: Vec::new(),
        total_cycles,
        status: RunStatus::Completed,
        message: None,
        coverage: None,
        histogram: ActionHistogram::default(),
        final_samples: None,
    };
    if cfg.cycles == Some(0) || cfg.epochs == 0 && cfg.cycles.is_none() {
        return Ok(empty(0));
    }
    let dataset = load_dataset(cfg)?;
    let total = total_cycles(cfg, dataset.as_ref().map(Dataset::len));
    if total == 0 {
        return Ok(empty(0));
    }
    let mut batches = Batches::new(cfg, dataset)?;
    let mut runner = Runner::new(cfg, mode, batches.data_dim())?;
    let mut sample_rng = stream(cfg.seed, Stream::Samples);
    let images = cfg.preset == Preset::Mnist28;

    let mut records = Vec::with_capacity(total as usize);
    let mut status = RunStatus::Completed;
    let mut message = None;
    for step in 0..total {
        let real = batches.next()?;
        match runner.step(step, &real) {
            Ok(r) => records.push(r),
            Err(e) if e.is_numeric() => {
                status = RunStatus::NumericAbort;
                message = Some(match records.last() {
                    Some(r) => format!("{e} (last completed cycle {})", r.step),
                    None => format!("{e} (no cycle completed)"),
                });
                break;
            }
            Err(e) => return Err(e),
        }
        if images && cfg.sample_every > 0 && (step + 1) % cfg.sample_every == 0 && step + 1 < total {
            if let Some(dir) = out {
                let grid = runner.gan().generate(GRID_SAMPLES, &mut sample_rng)?;
                write_image_grid(&grid, &dir.join(format!("samples-{:06}.pgm", step + 1)))?;
            }
        }
    }

    let histogram = ActionHistogram::from_actions(records.iter().map(|r| r.action_u));
    let mut coverage = None;
    let mut final_samples = None;
    if status == RunStatus::Completed {
        if images {
            let grid = runner.gan().generate(GRID_SAMPLES, &mut sample_rng)?;
            if let Some(dir) = out {
                write_image_grid(&grid, &dir.join("samples-final.pgm"))?;
            }
            final_samples = Some(grid);
        } else {
            let points = runner.gan().generate(cfg.coverage_samples, &mut sample_rng)?;
            coverage = Some(mode_coverage(&points, &mixture_spec(cfg)?, cfg.coverage_radius)?);
            final_samples = Some(points);
        }
    }

    if let Some(dir) = out {
        write_telemetry(&records, &dir.join("telemetry.csv"))?;
        write_file(&dir.join("action_histogram.csv"), &histogram.to_csv())?;
        if let Some(c) = &coverage {
            write_file(&dir.join("coverage.json"), &to_json(c)?)?;
        }
    }
    Ok(RunOutcome { records, total_cycles: total, status, message, coverage, histogram, final_samples })
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| FscoError::io(path, e))
}

fn to_json<T: Serialize>(v: &T) -> Result<String> {
    serde_json::to_string_pretty(v).map_err(|e| FscoError::State(format!("serialization failed: {e}")))
}

fn timestamp() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

/// Creates `<root>/<preset>-seed<seed>-<timestamp>`, adding a numeric suffix
/// rather than reusing an existing directory.
pub fn create_run_dir(root: &Path, cfg: &FscoConfig) -> Result<PathBuf> {
    std::fs::create_dir_all(root).map_err(|e| FscoError::io(root, e))?;
    let stamp = chrono::Utc::now().format("%Y%m%dT%H%M%S%.3fZ");
    let base = format!("{}-seed{}-{stamp}", cfg.preset, cfg.seed);
    for n in 0.. {
        let name = if n == 0 { base.clone() } else { format!("{base}-{n}") };
        let dir = root.join(name);
        match std::fs::create_dir(&dir) {
            Ok(()) => return Ok(dir),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => continue,
            Err(e) => return Err(FscoError::io(dir, e)),
        }
    }
    unreachable!("unbounded suffix search")
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub dir: PathBuf,
    pub manifest: RunManifest,
    pub histogram: ActionHistogram,
}

/// A full run in a fresh directory under `root`, always finishing with a
/// manifest. Io and data failures are recorded as `io-error`.
pub fn run_to_dir(cfg: &FscoConfig, mode: RunMode, root: &Path) -> Result<RunSummary> {
    cfg.validate()?;
    let dir = create_run_dir(root, cfg)?;
    let started = timestamp();
    let result = run_experiment(cfg, mode, Some(&dir));
    let finished = timestamp();
    let mut manifest = RunManifest {
        config: cfg.to_text(),
        seed: cfg.seed,
        mode: mode.label(),
        started,
        finished,
        out_dir: dir.clone(),
        status: RunStatus::Completed,
        cycles_completed: 0,
        total_cycles: 0,
        message: None,
        coverage: None,
        waiting_fraction: 0.0,
    };
    let histogram = match result {
        Ok(o) => {
            manifest.status = o.status;
            manifest.cycles_completed = o.records.len() as u64;
            manifest.total_cycles = o.total_cycles;
            manifest.message = o.message;
            manifest.coverage = o.coverage;
            manifest.waiting_fraction = o.histogram.waiting_fraction();
            o.histogram
        }
        Err(e) => {
            manifest.status = RunStatus::IoError;
            manifest.message = Some(e.to_string());
            ActionHistogram::default()
        }
    };
    write_file(&dir.join("manifest.json"), &to_json(&manifest)?)?;
    Ok(RunSummary { dir, manifest, histogram })
}

/// Independent runs, one per seed, in parallel when that feature is on.
pub fn sweep(cfg: &FscoConfig, seeds: &[u64], mode: RunMode, root: &Path) -> Vec<Result<RunSummary>> {
    par::map_indexed(seeds.len(), |i| {
        let cfg = FscoConfig { seed: seeds[i], ..cfg.clone() };
        run_to_dir(&cfg, mode, root)
    })
}

/// Plain-text table, one row per run.
pub fn sweep_table(runs: &[RunSummary]) -> String {
    let mut s = String::from("seed  mode      status          cycles  modes  hq_frac  u<0.05\n");
    for r in runs {
        let m = &r.manifest;
        let (modes, hq) = match &m.coverage {
            Some(c) => (c.covered_modes.to_string(), format!("{:.3}", c.high_quality_fraction)),
            None => ("-".into(), "-".into()),
        };
        let status = serde_json::to_value(m.status).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
        let _ = writeln!(
            s,
            "{:<5} {:<9} {:<15} {:>6}  {:>5}  {:>7}  {:.4}",
            m.seed, m.mode, status, m.cycles_completed, modes, hq, m.waiting_fraction
        );
    }
    s
}
