//! `nnsense`: generate datasets, run experiments, tabulate costs and render
//! reports.
//!
//! Exit codes: 0 success, 1 usage error, 2 runtime failure.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use nnsense::bench::{render_charts, run_experiment, ExperimentConfig, ExperimentReport, WORKERS_ENV};
use nnsense::costmodel::{costs_csv, parse_arch_list, presets, NamedArch};
use nnsense::sigsim::{gen_dataset, save_dataset, DatasetSpec, SignalParams, SnrReference};

#[derive(Debug, Parser)]
#[command(name = "nnsense", version, about = "Neural-network spectrum sensing benchmark")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a labeled QPSK/AWGN window dataset.
    GenData(GenDataArgs),
    /// Run an experiment config: train, calibrate, evaluate, aggregate.
    Run(RunArgs),
    /// Print operation counts and memory requirements as CSV.
    Costs(CostsArgs),
    /// Render SVG charts and a summary CSV from report files.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SnrRef {
    /// SNR is Es/N0 (per-symbol energy to noise density).
    PerSymbol,
    /// SNR is average sample power to noise variance.
    PerSample,
}

#[derive(Debug, clap::Args)]
struct GenDataArgs {
    /// Output dataset file.
    #[arg(long, short)]
    out: PathBuf,
    #[arg(long, default_value_t = 1_000)]
    n_train: u64,
    #[arg(long, default_value_t = 10_000)]
    n_val: u64,
    #[arg(long, default_value_t = 10_000)]
    n_test: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 3.0, allow_negative_numbers = true)]
    snr_db: f64,
    #[arg(long, value_enum, default_value_t = SnrRef::PerSymbol)]
    snr_reference: SnrRef,
    /// Root-raised-cosine roll-off.
    #[arg(long, default_value_t = 0.35)]
    rolloff: f64,
    /// Samples per symbol.
    #[arg(long, default_value_t = 10)]
    sps: u32,
    /// Pulse-shaping filter span in symbols.
    #[arg(long, default_value_t = 11)]
    span: u32,
    /// Samples per sensing window.
    #[arg(long, default_value_t = 111)]
    window_len: u32,
}

#[derive(Debug, clap::Args)]
struct RunArgs {
    /// Experiment config (JSON). Relative paths inside resolve against its
    /// directory.
    config: PathBuf,
    /// Concurrent training runs [default: available cores].
    #[arg(long, env = WORKERS_ENV)]
    workers: Option<usize>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Preset {
    /// Tuned architectures for 1E+03 training windows.
    Tuned1e3,
    /// Tuned architectures for 1E+05 training windows.
    Tuned1e5,
    /// Tuned architectures for 8E+06 training windows.
    Tuned8e6,
    /// Architectures scaled to roughly the FC's operation count.
    Constrained,
}

#[derive(Debug, clap::Args)]
#[group(required = true, multiple = false)]
struct CostsSource {
    /// Architecture list (JSON).
    archs: Option<PathBuf>,
    /// Built-in architecture set instead of a file.
    #[arg(long, value_enum)]
    preset: Option<Preset>,
}

#[derive(Debug, clap::Args)]
struct CostsArgs {
    #[command(flatten)]
    source: CostsSource,
    /// Write the CSV here instead of stdout.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Debug, clap::Args)]
struct ReportArgs {
    /// One or more report.json files produced by `run`.
    #[arg(required = true)]
    reports: Vec<PathBuf>,
    /// Directory for p_fd.svg, ops.svg, memory.svg and summary.csv.
    #[arg(long, short, default_value = ".")]
    out_dir: PathBuf,
}

/// Semantically invalid arguments; reported with the usage exit code.
#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

fn gen_data(a: GenDataArgs) -> Result<()> {
    let spec = DatasetSpec {
        params: SignalParams {
            rolloff: a.rolloff,
            samples_per_symbol: a.sps as usize,
            filter_span_symbols: a.span as usize,
            snr_db: a.snr_db,
            snr_reference: match a.snr_reference {
                SnrRef::PerSymbol => SnrReference::PerSymbol,
                SnrRef::PerSample => SnrReference::PerSample,
            },
            window_len: a.window_len as usize,
        },
        n_train: a.n_train,
        n_val: a.n_val,
        n_test: a.n_test,
        seed: a.seed,
    };
    spec.validate().map_err(|e| usage(e.to_string()))?;
    let data = gen_dataset(&spec).context("generating dataset")?;
    save_dataset(&data, &a.out).with_context(|| format!("writing {}", a.out.display()))?;
    eprintln!(
        "wrote {} ({} train, {} validation, {} test windows)",
        a.out.display(),
        data.train.len(),
        data.val.len(),
        data.test.len()
    );
    Ok(())
}

fn run(a: RunArgs) -> Result<()> {
    let text = fs::read_to_string(&a.config).with_context(|| format!("reading {}", a.config.display()))?;
    let cfg = ExperimentConfig::from_json(&text).with_context(|| format!("in {}", a.config.display()))?;
    let workers = match a.workers {
        Some(0) => return Err(usage("worker count must be positive")),
        Some(n) => n,
        None => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    let base = a.config.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let report = run_experiment(&cfg, base, workers)?;
    println!("entry,train_size,completed,median_p_fd,min_p_fd");
    for e in &report.entries {
        match &e.summary {
            Some(s) => println!("{},{},{},{},{}", e.name, e.train_size, s.n_completed, s.median_p_fd, s.min_p_fd),
            None => println!("{},{},0,failed,failed", e.name, e.train_size),
        }
    }
    println!("energy_detector,,,{},", report.baseline.p_fd);
    if report.entries.iter().any(|e| e.summary.is_none()) {
        bail!("at least one entry failed every run; see manifest.json");
    }
    Ok(())
}

fn costs(a: CostsArgs) -> Result<()> {
    let archs: Vec<NamedArch> = match (a.source.archs, a.source.preset) {
        (Some(path), _) => {
            let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
            parse_arch_list(&text).with_context(|| format!("in {}", path.display()))?
        }
        (None, Some(p)) => match p {
            Preset::Tuned1e3 => presets::tuned(1_000).expect("known size"),
            Preset::Tuned1e5 => presets::tuned(100_000).expect("known size"),
            Preset::Tuned8e6 => presets::tuned(8_000_000).expect("known size"),
            Preset::Constrained => presets::constrained(),
        },
        (None, None) => unreachable!("clap requires a source"),
    };
    let csv = costs_csv(&archs)?;
    match a.out {
        Some(path) => fs::write(&path, csv).with_context(|| format!("writing {}", path.display()))?,
        None => print!("{csv}"),
    }
    Ok(())
}

fn report(a: ReportArgs) -> Result<()> {
    let reports = a
        .reports
        .iter()
        .map(|p| {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            serde_json::from_str::<ExperimentReport>(&text).with_context(|| format!("parsing {}", p.display()))
        })
        .collect::<Result<Vec<_>>>()?;
    let charts = render_charts(&reports)?;
    fs::create_dir_all(&a.out_dir).with_context(|| format!("creating {}", a.out_dir.display()))?;
    for (name, body) in
        [("p_fd.svg", &charts.p_fd), ("ops.svg", &charts.ops), ("memory.svg", &charts.memory), ("summary.csv", &charts.csv)]
    {
        let path = a.out_dir.join(name);
        fs::write(&path, body).with_context(|| format!("writing {}", path.display()))?;
    }
    eprintln!("wrote charts to {}", a.out_dir.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::GenData(a) => gen_data(a),
        Command::Run(a) => run(a),
        Command::Costs(a) => costs(a),
        Command::Report(a) => report(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.is::<UsageError>() => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
