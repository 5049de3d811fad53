use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use fsco::config::{FscoConfig, Preset};
use fsco::experiment::{run_to_dir, sweep, sweep_table, ActionHistogram, RunManifest, RunMode, RunStatus, RunSummary};
use fsco::telemetry::{audit, read_telemetry};
use fsco::{FscoError, Result};

#[derive(Parser)]
#[command(name = "fsco", version, about = "GAN training with an RL-controlled discriminator step size")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train with the agent choosing the discriminator step size.
    Train(RunArgs),
    /// Train at the fixed base step size (u = 1).
    Baseline(RunArgs),
    /// One run per seed, then an aggregate table.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        /// Inclusive seed range `A..B`, or a single seed.
        #[arg(long)]
        seeds: String,
        #[arg(long, value_enum, default_value_t = SweepMode::Fsco)]
        mode: SweepMode,
    },
    /// Audit a telemetry CSV: step-size and reward identities, action range.
    Check {
        csv: PathBuf,
        /// Config for `eta_d_base` and `u_floor`; defaults to the sibling manifest.json.
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

#[derive(Args, Clone)]
struct RunArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Preset used when no config file is given.
    #[arg(long)]
    preset: Option<Preset>,
    #[arg(long)]
    seed: Option<u64>,
    /// Override the total number of cycles.
    #[arg(long)]
    cycles: Option<u64>,
    /// Parent directory for run directories.
    #[arg(long, default_value = "runs")]
    out: PathBuf,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SweepMode {
    Fsco,
    Baseline,
    Both,
}

impl RunArgs {
    fn config(&self) -> Result<FscoConfig> {
        let mut cfg = match (&self.config, self.preset) {
            (Some(path), None) => FscoConfig::load(path)?,
            (Some(_), Some(_)) => {
                return Err(FscoError::Argument("--config and --preset are mutually exclusive".into()))
            }
            (None, p) => FscoConfig::preset(p.unwrap_or(Preset::Synthetic)),
        };
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if self.cycles.is_some() {
            cfg.cycles = self.cycles;
        }
        if cfg.data_dir.is_none() {
            cfg.data_dir = std::env::var_os("FSCO_DATA_DIR").map(PathBuf::from);
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn parse_seeds(s: &str) -> Result<Vec<u64>> {
    let bad = || FscoError::Argument(format!("cannot parse seeds `{s}`; expected A..B or N"));
    match s.split_once("..") {
        Some((a, b)) => {
            let a: u64 = a.trim().parse().map_err(|_| bad())?;
            let b: u64 = b.trim().trim_start_matches('=').parse().map_err(|_| bad())?;
            if a > b {
                return Err(bad());
            }
            Ok((a..=b).collect())
        }
        None => Ok(vec![s.trim().parse().map_err(|_| bad())?]),
    }
}

fn report(summary: &RunSummary) -> bool {
    let m = &summary.manifest;
    println!("{}", summary.dir.display());
    println!("  cycles {}/{}", m.cycles_completed, m.total_cycles);
    if let Some(c) = &m.coverage {
        println!("  modes covered {}  high-quality fraction {:.4}", c.covered_modes, c.high_quality_fraction);
    }
    if let Some(msg) = &m.message {
        eprintln!("  {msg}");
    }
    m.status == RunStatus::Completed
}

fn run_one(args: &RunArgs, mode: RunMode) -> Result<bool> {
    let cfg = args.config()?;
    let summary = run_to_dir(&cfg, mode, &args.out)?;
    Ok(report(&summary))
}

fn run_sweep(args: &RunArgs, seeds: &str, mode: SweepMode) -> Result<bool> {
    let cfg = args.config()?;
    let seeds = parse_seeds(seeds)?;
    let modes: &[RunMode] = match mode {
        SweepMode::Fsco => &[RunMode::Fsco],
        SweepMode::Baseline => &[RunMode::Baseline],
        SweepMode::Both => &[RunMode::Fsco, RunMode::Baseline],
    };
    let mut ok = true;
    let mut runs = Vec::new();
    for &m in modes {
        for r in sweep(&cfg, &seeds, m, &args.out) {
            match r {
                Ok(s) => {
                    ok &= s.manifest.status == RunStatus::Completed;
                    runs.push(s);
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ok = false;
                }
            }
        }
    }
    let table = sweep_table(&runs);
    print!("{table}");

    let stamp = chrono::Utc::now().format("%Y%m%dT%H%M%S%.3fZ");
    let base = args.out.join(format!("sweep-{}-{stamp}", cfg.preset));
    write(&base.with_extension("txt"), &table)?;
    let mut hist = ActionHistogram::default();
    for r in runs.iter().filter(|r| r.manifest.mode == RunMode::Fsco.label()) {
        hist.merge(&r.histogram);
    }
    let hist_path = PathBuf::from(format!("{}-action_histogram.csv", base.display()));
    write(&hist_path, &hist.to_csv())?;
    println!("fraction of agent actions below {}: {:.4}", ActionHistogram::WAIT_BELOW, hist.waiting_fraction());
    Ok(ok)
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| FscoError::Io { path: path.into(), source: e })
}

fn check(csv: &Path, config: Option<&Path>) -> Result<bool> {
    let cfg = match config {
        Some(p) => FscoConfig::load(p)?,
        None => {
            let manifest = csv.parent().unwrap_or(Path::new(".")).join("manifest.json");
            if !manifest.exists() {
                return Err(FscoError::Argument(format!(
                    "no --config given and {} not found",
                    manifest.display()
                )));
            }
            RunManifest::load(&manifest)?.config()?
        }
    };
    let rows = read_telemetry(csv)?;
    let violations = audit(&rows, cfg.eta_d_base, cfg.u_floor);
    for v in &violations {
        eprintln!("row {} (line {}, step {}): {}", v.line - 1, v.line, v.step, v.what);
    }
    if violations.is_empty() {
        println!("{}: {} rows ok", csv.display(), rows.len());
    } else {
        eprintln!("{}: {} violation(s) in {} rows", csv.display(), violations.len(), rows.len());
    }
    Ok(violations.is_empty())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Train(a) => run_one(a, RunMode::Fsco),
        Command::Baseline(a) => run_one(a, RunMode::Baseline),
        Command::Sweep { run, seeds, mode } => run_sweep(run, seeds, *mode),
        Command::Check { csv, config } => check(csv, config.as_deref()),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
