//! `gramspec`: run Gram-spectrum experiments and write CSV or JSON results.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gram_core::error::GramError;
use gram_core::experiment::{run, ExperimentConfig, Mode, OutputFormat, RunResult};
use gram_core::mp::{fit_spectrum, support_length_entropy, FitReport, MPLaw};
use gram_core::output::{parse_spectrum, write_histogram_csv, write_json, write_primary_csv};
use gram_core::par::Execution;
use serde_json::json;

#[derive(Parser)]
#[command(
    name = "gramspec",
    version,
    about = "Gram-matrix spectra of state sequences"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Haar-uniform random sequences fitted against the limiting law.
    Random(RunArgs),
    /// Kicked-rotor style evolution under a phase-kick Floquet operator.
    Floquet(RunArgs),
    /// Basis-state orbits of a permutation.
    Permutation(RunArgs),
    /// Uniform random words and their multiplicity statistics.
    Classical(RunArgs),
    /// Density, CDF and atom weight tabulated over a grid of tau.
    MpGrid(RunArgs),
    /// Fit a stored spectrum file against the limiting law at a given tau.
    Fit(FitArgs),
}

#[derive(Args)]
struct RunArgs {
    /// JSON config file; flags given on the command line take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    dim: Option<usize>,
    /// Rescaled time K / N.
    #[arg(long, conflicts_with = "steps", allow_hyphen_values = true)]
    tau: Option<f64>,
    /// Sequence length K.
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    bins: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    kick: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    rot: Option<f64>,
    /// Index of the initial basis state.
    #[arg(long)]
    start: Option<usize>,
    /// JSON array of integers giving the permutation.
    #[arg(long)]
    perm: Option<PathBuf>,
    #[arg(long)]
    tau_min: Option<f64>,
    #[arg(long)]
    tau_max: Option<f64>,
    #[arg(long)]
    tau_points: Option<usize>,
    #[arg(long)]
    x_points: Option<usize>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct FitArgs {
    /// Spectrum file: `trial,index,eigenvalue` CSV, JSON array, or JSON run result.
    spectrum: PathBuf,
    #[arg(long, allow_hyphen_values = true)]
    tau: f64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct OutputArgs {
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_parser = parse_format)]
    format: Option<OutputFormat>,
}

fn parse_format(s: &str) -> Result<OutputFormat, String> {
    match s {
        "csv" => Ok(OutputFormat::Csv),
        "json" => Ok(OutputFormat::Json),
        other => Err(format!("unknown format `{other}` (expected csv or json)")),
    }
}

enum Failure {
    Config(String),
    Runtime(String),
}

impl From<GramError> for Failure {
    fn from(e: GramError) -> Self {
        match e {
            GramError::InvalidParameter { .. } => Failure::Config(e.to_string()),
            other => Failure::Runtime(other.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))
}

fn build_config(mode: Mode, args: &RunArgs) -> Result<ExperimentConfig, Failure> {
    let mut config = match &args.config {
        Some(path) => serde_json::from_str(&read(path)?)
            .map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?,
        None => ExperimentConfig::default(),
    };
    config.mode = mode;
    if let Some(v) = args.dim {
        config.dim = v;
    }
    if let Some(v) = args.tau {
        config.tau = Some(v);
        config.steps = None;
    }
    if let Some(v) = args.steps {
        config.steps = Some(v);
        config.tau = None;
    }
    macro_rules! set {
        ($($field:ident),*) => {$(
            if let Some(v) = args.$field.clone() {
                config.$field = v;
            }
        )*};
    }
    set!(trials, seed, bins, kick, rot, tau_min, tau_max, tau_points, x_points);
    if let Some(v) = args.start {
        config.start = Some(v);
    }
    if let Some(path) = &args.perm {
        let p: Vec<usize> = serde_json::from_str(&read(path)?)
            .map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
        config.permutation = Some(p);
    }
    if let Some(out) = &args.output.out {
        config.out = Some(out.clone());
    }
    if let Some(f) = args.output.format {
        config.format = f;
    }
    config.validate()?;
    Ok(config)
}

fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    Ok(match path {
        Some(p) => {
            Box::new(BufWriter::new(File::create(p).map_err(|e| {
                Failure::Runtime(format!("{}: {e}", p.display()))
            })?))
        }
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn histogram_path(out: &Path) -> PathBuf {
    let stem = out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    out.with_file_name(format!("{stem}.hist.csv"))
}

fn write_result(result: &RunResult) -> Result<(), Failure> {
    let out = result.config.out.as_deref();
    let mut w = open_output(out)?;
    match result.config.format {
        OutputFormat::Json => write_json(result, &mut w)?,
        OutputFormat::Csv => {
            write_primary_csv(result, &mut w)?;
            if let (Some(out), Some(hist)) = (out, &result.histogram) {
                let path = histogram_path(out);
                let file = File::create(&path)
                    .map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))?;
                let mut hw = BufWriter::new(file);
                write_histogram_csv(hist, &mut hw)?;
                hw.flush()?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

fn run_experiment(mode: Mode, args: &RunArgs) -> Result<(), Failure> {
    let config = build_config(mode, args)?;
    let result = run(&config, Execution::default())?;
    write_result(&result)?;
    eprintln!("completed in {:.3} s", result.duration.as_secs_f64());
    Ok(())
}

fn run_fit(args: &FitArgs) -> Result<(), Failure> {
    let law = MPLaw::new(args.tau)?;
    let spectrum = parse_spectrum(&read(&args.spectrum)?)?;
    let report: FitReport = fit_spectrum(&spectrum, &law);
    let entropy = support_length_entropy(&spectrum);
    let mut w = open_output(args.output.out.as_deref())?;
    match args.output.format.unwrap_or_default() {
        OutputFormat::Json => write_json(&json!({ "fit": report, "entropy": entropy }), &mut w)?,
        OutputFormat::Csv => {
            writeln!(w, "statistic,value")?;
            let rows = [
                ("tau", report.tau),
                ("ks_distance", report.ks_distance),
                ("wasserstein1", report.wasserstein1),
                ("atom_fraction_empirical", report.atom_fraction_empirical),
                ("atom_weight_reference", report.atom_weight_reference),
                ("support_observed_min", report.support_observed.0),
                ("support_observed_max", report.support_observed.1),
                ("support_reference_min", report.support_reference.0),
                ("support_reference_max", report.support_reference.1),
                ("moment1_empirical", report.moments_empirical[0]),
                ("moment2_empirical", report.moments_empirical[1]),
                ("moment3_empirical", report.moments_empirical[2]),
                ("moment1_reference", report.moments_reference[0]),
                ("moment2_reference", report.moments_reference[1]),
                ("moment3_reference", report.moments_reference[2]),
                ("entropy", entropy),
            ];
            for (name, value) in rows {
                writeln!(w, "{name},{value}")?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Random(a) => run_experiment(Mode::Random, a),
        Command::Floquet(a) => run_experiment(Mode::Floquet, a),
        Command::Permutation(a) => run_experiment(Mode::Permutation, a),
        Command::Classical(a) => run_experiment(Mode::Classical, a),
        Command::MpGrid(a) => run_experiment(Mode::MpGrid, a),
        Command::Fit(a) => run_fit(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("gramspec: config error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("gramspec: {msg}");
            ExitCode::from(1)
        }
    }
}
