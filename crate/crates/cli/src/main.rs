//! `tsarf` command-line tool.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 convergence failure.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use tsarf_core::dataset::{load_curve_auto, write_failure_times, GrowthCurve};
use tsarf_core::report::{run_compare, run_sweep, CompareOptions, ModelId, RunReport, SplitOptions, SweepParameter};
use tsarf_core::srgm::{mvf, poisson_band, simulate_nhpp, SrgmKind, SrgmParams};
use tsarf_core::tsarf::{MaLength, TsarfConfig, WindowSize, DEFAULT_BLEND_WEIGHT};
use tsarf_core::{Error, ErrorClass};

const OUTPUT_DIR_ENV: &str = "TSARF_OUTPUT_DIR";

#[derive(Debug, Parser)]
#[command(
    name = "tsarf",
    version,
    about = "Forecast cumulative defect growth and compare it against NHPP reliability models",
    after_help = "Relative --output, --curves and --report paths are resolved against $TSARF_OUTPUT_DIR when it is set.\n\
                  Exit codes: 0 success, 1 usage error, 2 data error, 3 convergence failure."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit several models on the training partition and score them on the test partition.
    Compare(CompareArgs),
    /// Fit and score a single model.
    Fit(FitArgs),
    /// Sweep the TSARF window size or moving-average length and report test PMSE.
    Sweep(SweepArgs),
    /// Simulate failure times from an NHPP growth model.
    Simulate(SimulateArgs),
}

#[derive(Debug, Args)]
struct SplitArgs {
    /// Number of trailing points held out for testing [default: the window size]
    #[arg(long, conflicts_with = "test_fraction")]
    test_len: Option<usize>,
    /// Fraction of points held out for testing
    #[arg(long)]
    test_fraction: Option<f64>,
}

impl SplitArgs {
    fn options(&self) -> SplitOptions {
        SplitOptions {
            test_len: self.test_len,
            test_fraction: self.test_fraction,
        }
    }
}

#[derive(Debug, Args)]
struct TsarfArgs {
    /// Points per TSARF window, or `auto`
    #[arg(long, default_value = "auto")]
    window_size: String,
    /// Moving-average length, or `auto`
    #[arg(long, default_value = "auto")]
    ma: String,
    /// Weight of the corrected forecast in the final blend
    #[arg(long, default_value_t = DEFAULT_BLEND_WEIGHT)]
    blend_weight: f64,
}

impl TsarfArgs {
    fn config(&self) -> Result<TsarfConfig, Error> {
        let window = match parse_auto(&self.window_size, "--window-size")? {
            None => WindowSize::Auto,
            Some(k) => WindowSize::Fixed(k),
        };
        let ma = match parse_auto(&self.ma, "--ma")? {
            None => MaLength::Auto,
            Some(d) => MaLength::Fixed(d),
        };
        Ok(TsarfConfig {
            window,
            ma,
            blend_weight: self.blend_weight,
        })
    }
}

fn parse_auto(s: &str, flag: &str) -> Result<Option<usize>, Error> {
    if s.eq_ignore_ascii_case("auto") {
        return Ok(None);
    }
    s.parse()
        .map(Some)
        .map_err(|_| Error::Usage(format!("{flag} expects `auto` or a positive integer, got {s:?}")))
}

#[derive(Debug, Args)]
struct CompareArgs {
    /// Failure-time file (one time per line) or `time,count` CSV
    #[arg(long)]
    input: PathBuf,
    #[command(flatten)]
    split: SplitArgs,
    #[command(flatten)]
    tsarf: TsarfArgs,
    /// Comma-separated models
    #[arg(long, default_value = "tsarf,go,dss,weibull")]
    models: String,
    /// Write the JSON run report here
    #[arg(long)]
    output: Option<PathBuf>,
    /// Write the curves CSV here
    #[arg(long)]
    curves: Option<PathBuf>,
    /// Seed to record in the report when the input was simulated
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Args)]
struct FitArgs {
    /// Failure-time file (one time per line) or `time,count` CSV
    #[arg(long)]
    input: PathBuf,
    /// One of tsarf, go, dss, weibull
    #[arg(long)]
    model: String,
    #[command(flatten)]
    split: SplitArgs,
    #[command(flatten)]
    tsarf: TsarfArgs,
    /// Write the JSON run report here
    #[arg(long)]
    output: Option<PathBuf>,
    /// Write the curves CSV here
    #[arg(long)]
    curves: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    /// Input file; repeat for one column per dataset
    #[arg(long, required = true)]
    input: Vec<PathBuf>,
    /// `window` or `ma`
    #[arg(long)]
    parameter: String,
    /// Inclusive range such as `4..12`, or a list such as `1,2,3`
    #[arg(long)]
    values: String,
    #[command(flatten)]
    split: SplitArgs,
    /// Weight of the corrected forecast in the final blend
    #[arg(long, default_value_t = DEFAULT_BLEND_WEIGHT)]
    blend_weight: f64,
    /// Write the sweep CSV here instead of stdout
    #[arg(long)]
    output: Option<PathBuf>,
    /// Write the sweep table as JSON here
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// go, dss or weibull
    #[arg(long, default_value = "go")]
    kind: String,
    /// Expected total number of faults
    #[arg(long)]
    a: f64,
    /// Fault detection rate
    #[arg(long)]
    b: f64,
    /// Weibull shape
    #[arg(long, default_value_t = 1.0)]
    c: f64,
    /// End of the observation period
    #[arg(long)]
    horizon: f64,
    /// RNG seed; the same seed reproduces the same file
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Failure-time file to write
    #[arg(long)]
    output: PathBuf,
}

/// Failure that maps onto a process exit code.
#[derive(Debug)]
enum CliError {
    Usage(String),
    Data(String),
    Convergence(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Convergence(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Data(m) | CliError::Convergence(m) => m,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e.class() {
            ErrorClass::Usage => CliError::Usage(e.to_string()),
            ErrorClass::Data => CliError::Data(e.to_string()),
            ErrorClass::Convergence => CliError::Convergence(e.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Compare(args) => cmd_compare(args),
        Command::Fit(args) => cmd_fit(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Simulate(args) => cmd_simulate(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}

fn resolve_output(path: &Path) -> PathBuf {
    match std::env::var_os(OUTPUT_DIR_ENV) {
        Some(dir) if path.is_relative() => Path::new(&dir).join(path),
        _ => path.to_path_buf(),
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    let path = resolve_output(path);
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| CliError::Data(format!("{}: {e}", parent.display())))?;
    }
    fs::write(&path, contents).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

struct Input {
    curve: GrowthCurve,
    sorted: bool,
    seed: Option<u64>,
}

fn read_input(path: &Path) -> Result<Input, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let (curve, times) = load_curve_auto(&text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let sorted = times.as_ref().is_some_and(|t| t.was_sorted);
    if sorted {
        eprintln!("warning: {}: failure times were not in ascending order and have been sorted", path.display());
    }
    Ok(Input {
        curve,
        sorted,
        seed: header_seed(&text),
    })
}

/// Picks up `seed=<n>` from leading comment lines written by `simulate`.
fn header_seed(text: &str) -> Option<u64> {
    text.lines()
        .take_while(|l| l.trim_start().starts_with('#'))
        .flat_map(|l| l.split_whitespace())
        .find_map(|tok| tok.strip_prefix("seed=").and_then(|v| v.parse().ok()))
}

fn emit_report(
    report: &RunReport,
    output: Option<&Path>,
    curves: Option<&Path>,
) -> Result<(), CliError> {
    print!("{}", report.metrics_table());
    if let Some(p) = output {
        let json = serde_json::to_string_pretty(report).map_err(|e| CliError::Data(e.to_string()))?;
        write_file(p, &(json + "\n"))?;
    }
    if let Some(p) = curves {
        write_file(p, &report.curves_csv()?)?;
    }
    match report.worst_failure() {
        None => Ok(()),
        Some(class) => {
            let failed: Vec<String> = report
                .models
                .iter()
                .filter_map(|m| m.error.as_ref().map(|e| format!("{}: {e}", m.model.label())))
                .collect();
            let msg = failed.join("; ");
            Err(match class {
                ErrorClass::Convergence => CliError::Convergence(msg),
                ErrorClass::Usage => CliError::Usage(msg),
                ErrorClass::Data => CliError::Data(msg),
            })
        }
    }
}

fn cmd_compare(args: CompareArgs) -> Result<(), CliError> {
    let models = ModelId::parse_list(&args.models)?;
    let tsarf = args.tsarf.config()?;
    let input = read_input(&args.input)?;
    let opts = CompareOptions {
        split: args.split.options(),
        tsarf,
        models,
    };
    let mut report = run_compare(&input.curve, &args.input.display().to_string(), input.sorted, &opts)?;
    report.seed = args.seed.or(input.seed);
    emit_report(&report, args.output.as_deref(), args.curves.as_deref())
}

fn cmd_fit(args: FitArgs) -> Result<(), CliError> {
    let model: ModelId = args.model.parse()?;
    let tsarf = args.tsarf.config()?;
    let input = read_input(&args.input)?;
    let opts = CompareOptions {
        split: args.split.options(),
        tsarf,
        models: vec![model],
    };
    let mut report = run_compare(&input.curve, &args.input.display().to_string(), input.sorted, &opts)?;
    report.seed = input.seed;
    if let Some(o) = report.models.first() {
        if let Some(m) = &o.tsarf {
            println!(
                "k={} d={} predicted line: intercept={} slope={}",
                m.k_used, m.d_used, m.line.intercept, m.line.slope
            );
        }
        if let Some(f) = &o.srgm {
            println!(
                "{} a={} b={} c={} sse={} iterations={}",
                f.kind.label(),
                f.params.a,
                f.params.b,
                f.params.c,
                f.sse,
                f.iterations
            );
        }
    }
    emit_report(&report, args.output.as_deref(), args.curves.as_deref())
}

fn parse_values(s: &str) -> Result<Vec<usize>, CliError> {
    let bad = || CliError::Usage(format!("--values expects `A..B` or a comma list, got {s:?}"));
    let s = s.trim();
    if let Some((lo, hi)) = s.split_once("..") {
        let lo: usize = lo.trim().parse().map_err(|_| bad())?;
        let hi: usize = hi.trim().trim_start_matches('=').parse().map_err(|_| bad())?;
        if lo > hi {
            return Err(bad());
        }
        return Ok((lo..=hi).collect());
    }
    s.split(',')
        .map(|v| v.trim().parse().map_err(|_| bad()))
        .collect()
}

fn cmd_sweep(args: SweepArgs) -> Result<(), CliError> {
    let parameter: SweepParameter = args.parameter.parse()?;
    let values = parse_values(&args.values)?;
    let mut datasets = Vec::new();
    for path in &args.input {
        let input = read_input(path)?;
        let label = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string());
        datasets.push((label, input.curve));
    }
    let table = run_sweep(&datasets, parameter, &values, &args.split.options(), args.blend_weight)?;
    let csv = table.to_csv();
    match &args.output {
        Some(p) => write_file(p, &csv)?,
        None => print!("{csv}"),
    }
    if let Some(p) = &args.report {
        let json = serde_json::to_string_pretty(&table).map_err(|e| CliError::Data(e.to_string()))?;
        write_file(p, &(json + "\n"))?;
    }
    Ok(())
}

fn cmd_simulate(args: SimulateArgs) -> Result<(), CliError> {
    let kind: SrgmKind = args.kind.parse()?;
    let params = SrgmParams::new(args.a, args.b, if kind == SrgmKind::Weibull { args.c } else { 1.0 });
    params.validate()?;
    let times = simulate_nhpp(kind, &params, args.horizon, args.seed).map_err(|e| match e {
        Error::DegenerateIntensity { .. } => CliError::Usage(e.to_string()),
        other => other.into(),
    })?;
    let expected = mvf(kind, &params, args.horizon)?;
    let header = format!(
        "simulated {} a={} b={} c={} horizon={} seed={}",
        kind.id(),
        params.a,
        params.b,
        params.c,
        args.horizon,
        args.seed
    );
    let mut buf = Vec::new();
    write_failure_times(&mut buf, &times, Some(&header)).map_err(|e| CliError::Data(e.to_string()))?;
    write_file(&args.output, &String::from_utf8_lossy(&buf))?;

    let (lo, hi) = poisson_band(expected, 0.999)?;
    let count = times.len() as u64;
    println!("events: {count} (expected {expected:.3})");
    if count < lo || count > hi {
        println!("warning: event count outside the 99.9% Poisson band [{lo}, {hi}]");
    }
    Ok(())
}
