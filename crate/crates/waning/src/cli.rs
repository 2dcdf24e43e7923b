//! Command-line front end: reproducible experiments emitting plot-ready
//! CSV and JSON.
//!
//! Exit codes: 0 success, 1 runtime or check failure, 2 usage error
//! (including invalid parameters and unusable input data). Stochastic
//! subcommands require an explicit `--seed` and write a manifest
//! sufficient to reproduce their output byte for byte.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::analytic::{density_tn, survival_tn, QuadratureConfig};
use crate::error::{Error, Result};
use crate::inference::{
    fit_hill_mle, fit_loglog_regression, fit_nhpp_mle_ensemble, log_binned_ccdf, log_binned_pdf,
    pooled_intervals, TiePolicy,
};
use crate::intensity::IntensityParams;
use crate::io::{
    read_timestamps, write_combined_csv, write_distribution_csv, write_json, write_series_csv,
    write_theory_csv, TimestampData,
};
use crate::simulate::{
    fixed_index_from_series, simulate_ensemble, EventSeries, Horizon, IntervalSample, Method,
    SampleMode, SimulationConfig,
};
use crate::validate::{run_validation, ValidationConfig};

#[derive(Parser)]
#[command(
    name = "waning",
    version,
    about = "Waning-interest point process: simulation, exact interval distributions, inference"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate seeded sample paths and write event series CSVs
    Simulate(SimulateArgs),
    /// Evaluate the exact survival and density on a log-spaced time grid
    Theory(TheoryArgs),
    /// Extract intervals from a timestamp CSV, bin them, and fit exponents
    Analyze(AnalyzeArgs),
    /// Maximum-likelihood fit of the rate parameters to a timestamp CSV
    Fit(FitArgs),
    /// Run the cross-checking validation suite and write a report
    Validate(ValidateArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Inversion,
    Thinning,
}

#[derive(Clone, Copy, ValueEnum)]
enum LayoutArg {
    /// One `series_NNNN.csv` per replica
    PerReplica,
    /// A single two-column `replica,t` file
    Combined,
}

#[derive(Clone, Copy, ValueEnum, PartialEq)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    /// Successive gaps pooled over all series in the input
    Pooled,
    /// One gap at a fixed event index per series (requires `replica,t` input)
    Fixed,
}

#[derive(Clone, Copy, ValueEnum)]
enum TieArg {
    /// Replace zero gaps by a resolution (see --resolution)
    Resolve,
    /// Drop zero gaps
    Drop,
}

#[derive(Args)]
struct SimulateArgs {
    /// Interest decay rate (>= 0)
    #[arg(long)]
    a: f64,
    /// Initial event rate (> 0)
    #[arg(long)]
    b: f64,
    /// Observe until this time (exclusive with --count)
    #[arg(long)]
    horizon: Option<f64>,
    /// Stop each replica after this many events (exclusive with --horizon)
    #[arg(long)]
    count: Option<u64>,
    #[arg(long, default_value_t = 1)]
    replicas: u64,
    /// Master seed; replica i uses a derived child seed
    #[arg(long)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = MethodArg::Inversion)]
    method: MethodArg,
    #[arg(long, value_enum, default_value_t = LayoutArg::PerReplica)]
    layout: LayoutArg,
    #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
    format: FormatArg,
    /// Output directory (created if missing)
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TheoryArgs {
    #[arg(long)]
    a: f64,
    #[arg(long)]
    b: f64,
    /// Event index: curves describe the gap after the n-th event
    #[arg(long, default_value_t = 1)]
    n: u32,
    /// Start of the log-spaced time grid
    #[arg(long, default_value_t = 1e-3)]
    t_from: f64,
    /// End of the log-spaced time grid
    #[arg(long, default_value_t = 1e3)]
    t_to: f64,
    #[arg(long, default_value_t = 200)]
    t_points: usize,
    #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
    format: FormatArg,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Timestamp CSV: column `t`, or `replica,t` for ensembles
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum, default_value_t = ModeArg::Pooled)]
    mode: ModeArg,
    /// Event index for --mode fixed (0 = first event's gap from the origin)
    #[arg(long, default_value_t = 1)]
    n: u32,
    #[arg(long, default_value_t = 10)]
    bins_per_decade: u32,
    /// Explicit regression range LO:HI in time units (default: bins
    /// holding the first 95% of sample mass)
    #[arg(long, value_parser = parse_range)]
    fit_range: Option<(f64, f64)>,
    /// Hill threshold (default: median interval)
    #[arg(long)]
    tmin: Option<f64>,
    #[arg(long, value_enum, default_value_t = TieArg::Resolve)]
    tie: TieArg,
    /// Zero-gap replacement used with --tie resolve (default: smallest
    /// positive gap)
    #[arg(long)]
    resolution: Option<f64>,
    #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
    format: FormatArg,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct FitArgs {
    /// Timestamp CSV: column `t`, or `replica,t` for ensembles
    #[arg(long)]
    input: PathBuf,
    /// Observation horizon override (default: last event per series)
    #[arg(long)]
    horizon: Option<f64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long)]
    seed: u64,
    /// Sample size for the KS-style checks
    #[arg(long, default_value_t = 20_000)]
    samples: usize,
    /// Replica count for the ensemble mean check
    #[arg(long, default_value_t = 10_000)]
    replicas: u64,
    /// Include the deliberately mismatched check; makes the run fail
    #[arg(long)]
    negative_control: bool,
    #[arg(long)]
    out: PathBuf,
}

struct Failure {
    code: u8,
    message: String,
}

type CmdResult = std::result::Result<(), Failure>;

trait Phase<T> {
    /// Treat any error as a usage problem (exit 2).
    fn usage(self) -> std::result::Result<T, Failure>;
    /// Treat any error as a runtime failure (exit 1).
    fn runtime(self) -> std::result::Result<T, Failure>;
}

impl<T> Phase<T> for Result<T> {
    fn usage(self) -> std::result::Result<T, Failure> {
        self.map_err(|e| Failure {
            code: 2,
            message: e.to_string(),
        })
    }

    fn runtime(self) -> std::result::Result<T, Failure> {
        self.map_err(|e| Failure {
            code: 1,
            message: e.to_string(),
        })
    }
}

fn parse_range(raw: &str) -> std::result::Result<(f64, f64), String> {
    let parts: Vec<&str> = raw.split(':').collect();
    if parts.len() != 2 {
        return Err(format!("expected LO:HI, got {raw:?}"));
    }
    let lo: f64 = parts[0].parse().map_err(|_| format!("bad LO {:?}", parts[0]))?;
    let hi: f64 = parts[1].parse().map_err(|_| format!("bad HI {:?}", parts[1]))?;
    if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
        return Err(format!("range must satisfy LO <= HI, got {raw:?}"));
    }
    Ok((lo, hi))
}

/// Parses arguments and dispatches; the process exit code follows the
/// documented convention.
pub fn run() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(args) => cmd_simulate(args),
        Command::Theory(args) => cmd_theory(args),
        Command::Analyze(args) => cmd_analyze(args),
        Command::Fit(args) => cmd_fit(args),
        Command::Validate(args) => cmd_validate(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn ensure_out_dir(dir: &Path) -> std::result::Result<(), Failure> {
    std::fs::create_dir_all(dir)
        .map_err(|e| Error::io(dir, e))
        .usage()
}

#[derive(Serialize)]
struct SimulateManifest {
    command: &'static str,
    version: &'static str,
    a: f64,
    b: f64,
    horizon: Option<f64>,
    count: Option<u64>,
    replicas: u64,
    seed: u64,
    method: &'static str,
    layout: &'static str,
    format: &'static str,
    total_events: usize,
    outputs: Vec<String>,
}

fn cmd_simulate(args: SimulateArgs) -> CmdResult {
    let params = IntensityParams::new(args.a, args.b).usage()?;
    let horizon = match (args.horizon, args.count) {
        (Some(t), None) => Horizon::Time(t),
        (None, Some(k)) => Horizon::Count(k),
        _ => {
            return Err(Failure {
                code: 2,
                message: "exactly one of --horizon or --count is required".into(),
            })
        }
    };
    let cfg = SimulationConfig {
        params,
        horizon,
        replicas: args.replicas,
        master_seed: args.seed,
        method: match args.method {
            MethodArg::Inversion => Method::Inversion,
            MethodArg::Thinning => Method::Thinning,
        },
    };
    cfg.validate().usage()?;
    ensure_out_dir(&args.out)?;

    let ensemble = simulate_ensemble(&cfg).runtime()?;

    let mut outputs = Vec::new();
    match (args.layout, args.format) {
        (LayoutArg::PerReplica, FormatArg::Csv) => {
            for (i, series) in ensemble.series.iter().enumerate() {
                let name = format!("series_{i:04}.csv");
                write_series_csv(&args.out.join(&name), series).runtime()?;
                outputs.push(name);
            }
        }
        (LayoutArg::PerReplica, FormatArg::Json) => {
            for (i, series) in ensemble.series.iter().enumerate() {
                let name = format!("series_{i:04}.json");
                write_json(&args.out.join(&name), series).runtime()?;
                outputs.push(name);
            }
        }
        (LayoutArg::Combined, FormatArg::Csv) => {
            write_combined_csv(&args.out.join("events.csv"), &ensemble.series).runtime()?;
            outputs.push("events.csv".into());
        }
        (LayoutArg::Combined, FormatArg::Json) => {
            write_json(&args.out.join("events.json"), &ensemble.series).runtime()?;
            outputs.push("events.json".into());
        }
    }

    let manifest = SimulateManifest {
        command: "simulate",
        version: env!("CARGO_PKG_VERSION"),
        a: args.a,
        b: args.b,
        horizon: args.horizon,
        count: args.count,
        replicas: args.replicas,
        seed: args.seed,
        method: match args.method {
            MethodArg::Inversion => "inversion",
            MethodArg::Thinning => "thinning",
        },
        layout: match args.layout {
            LayoutArg::PerReplica => "per-replica",
            LayoutArg::Combined => "combined",
        },
        format: format_name(args.format),
        total_events: ensemble.total_events(),
        outputs,
    };
    write_json(&args.out.join("manifest.json"), &manifest).runtime()?;
    Ok(())
}

fn format_name(f: FormatArg) -> &'static str {
    match f {
        FormatArg::Csv => "csv",
        FormatArg::Json => "json",
    }
}

#[derive(Serialize)]
struct TheoryRow {
    t: f64,
    survival: f64,
    density: f64,
}

fn cmd_theory(args: TheoryArgs) -> CmdResult {
    let params = IntensityParams::new(args.a, args.b).usage()?;
    if args.n < 1 {
        return Err(Failure {
            code: 2,
            message: "--n must be >= 1".into(),
        });
    }
    if args.t_points == 0 {
        return Err(Failure {
            code: 2,
            message: "--t-points must be >= 1".into(),
        });
    }
    let grid: Vec<f64> = if args.t_points == 1 {
        if !(args.t_from.is_finite() && args.t_from >= 0.0) {
            return Err(Failure {
                code: 2,
                message: "--t-from must be finite and >= 0".into(),
            });
        }
        vec![args.t_from]
    } else {
        if !(args.t_from > 0.0 && args.t_to > args.t_from) {
            return Err(Failure {
                code: 2,
                message: "log-spaced grid needs 0 < --t-from < --t-to".into(),
            });
        }
        (0..args.t_points)
            .map(|i| {
                let f = i as f64 / (args.t_points - 1) as f64;
                args.t_from * (args.t_to / args.t_from).powf(f)
            })
            .collect()
    };
    ensure_out_dir(&args.out)?;

    let quad = QuadratureConfig::default();
    let mut rows = Vec::with_capacity(grid.len());
    for &t in &grid {
        let s = survival_tn(&params, args.n, t, &quad).runtime()?;
        let f = density_tn(&params, args.n, t, &quad).runtime()?;
        rows.push((t, s, f));
    }
    match args.format {
        FormatArg::Csv => write_theory_csv(&args.out.join("theory.csv"), &rows).runtime()?,
        FormatArg::Json => {
            let rows: Vec<TheoryRow> = rows
                .into_iter()
                .map(|(t, survival, density)| TheoryRow {
                    t,
                    survival,
                    density,
                })
                .collect();
            write_json(&args.out.join("theory.json"), &rows).runtime()?;
        }
    }
    Ok(())
}

fn series_from_input(data: TimestampData, horizon: Option<f64>) -> Result<Vec<EventSeries>> {
    match data {
        TimestampData::Single(times) => {
            Ok(vec![EventSeries::from_unsorted(times, horizon)?])
        }
        TimestampData::Replicated(groups) => groups
            .into_iter()
            .map(|times| EventSeries::from_unsorted(times, horizon))
            .collect(),
    }
}

fn cmd_analyze(args: AnalyzeArgs) -> CmdResult {
    let data = read_timestamps(&args.input).usage()?;
    let series = series_from_input(data, None).usage()?;
    let policy = match args.tie {
        TieArg::Resolve => TiePolicy::Resolve(args.resolution),
        TieArg::Drop => TiePolicy::Drop,
    };
    let sample = match args.mode {
        ModeArg::Pooled => pooled_intervals(&series, policy).usage()?,
        ModeArg::Fixed => {
            let intervals = fixed_index_from_series(&series, args.n);
            if intervals.len() < 2 {
                return Err(Failure {
                    code: 2,
                    message: format!(
                        "fixed-index extraction at n={} produced {} interval(s); need >= 2",
                        args.n,
                        intervals.len()
                    ),
                });
            }
            IntervalSample {
                intervals,
                mode: SampleMode::FixedIndex(args.n),
                source: args.input.display().to_string(),
            }
        }
    };
    ensure_out_dir(&args.out)?;

    // intervals as a single-column CSV (header t), reusing the series writer
    let interval_series = {
        let mut sorted = sample.intervals.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        EventSeries::from_unsorted(sorted, None).usage()?
    };
    write_series_csv(&args.out.join("intervals.csv"), &interval_series).runtime()?;

    let pdf = log_binned_pdf(&sample, args.bins_per_decade).usage()?;
    let ccdf = log_binned_ccdf(&sample, args.bins_per_decade).usage()?;
    match args.format {
        FormatArg::Csv => {
            write_distribution_csv(&args.out.join("pdf.csv"), &pdf).runtime()?;
            write_distribution_csv(&args.out.join("ccdf.csv"), &ccdf).runtime()?;
        }
        FormatArg::Json => {
            write_json(&args.out.join("pdf.json"), &pdf).runtime()?;
            write_json(&args.out.join("ccdf.json"), &ccdf).runtime()?;
        }
    }

    let regression = fit_loglog_regression(&pdf, args.fit_range).usage()?;
    write_json(&args.out.join("fit_regression.json"), &regression).runtime()?;

    let t_min = match args.tmin {
        Some(t) => t,
        None => sample.median().expect("nonempty sample"),
    };
    let hill = fit_hill_mle(&sample, t_min).usage()?;
    write_json(&args.out.join("fit_hill.json"), &hill).runtime()?;
    Ok(())
}

fn cmd_fit(args: FitArgs) -> CmdResult {
    let data = read_timestamps(&args.input).usage()?;
    if let Some(h) = args.horizon {
        if !(h.is_finite() && h > 0.0) {
            return Err(Failure {
                code: 2,
                message: "--horizon must be finite and > 0".into(),
            });
        }
    }
    let series = series_from_input(data, args.horizon).usage()?;
    let fit = fit_nhpp_mle_ensemble(&series).usage()?;
    ensure_out_dir(&args.out)?;
    write_json(&args.out.join("fit_nhpp.json"), &fit).runtime()?;
    Ok(())
}

#[derive(Serialize)]
struct ValidateManifest {
    command: &'static str,
    version: &'static str,
    seed: u64,
    samples: usize,
    replicas: u64,
    negative_control: bool,
    outputs: Vec<String>,
}

fn cmd_validate(args: ValidateArgs) -> CmdResult {
    ensure_out_dir(&args.out)?;
    let cfg = ValidationConfig {
        master_seed: args.seed,
        ks_samples: args.samples,
        mean_replicas: args.replicas,
        negative_control: args.negative_control,
    };
    let report = run_validation(&cfg).runtime()?;
    write_json(&args.out.join("report.json"), &report).runtime()?;
    let manifest = ValidateManifest {
        command: "validate",
        version: env!("CARGO_PKG_VERSION"),
        seed: args.seed,
        samples: args.samples,
        replicas: args.replicas,
        negative_control: args.negative_control,
        outputs: vec!["report.json".into()],
    };
    write_json(&args.out.join("manifest.json"), &manifest).runtime()?;

    for c in &report.checks {
        let tag = if c.pass { "pass" } else { "FAIL" };
        println!(
            "{tag}  {}  statistic {:.6e} vs threshold {:.6e}",
            c.name, c.statistic, c.threshold
        );
    }
    if report.passed {
        Ok(())
    } else {
        Err(Failure {
            code: 1,
            message: "validation checks failed (see report.json)".into(),
        })
    }
}
