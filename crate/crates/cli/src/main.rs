//! `ilfs` command line: rank a CSV dataset, generate synthetic data, or run
//! the kernel verification suites.

mod output;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ilfs::ranker::DEFAULT_DAMPING;
use ilfs::synth::{self, SynthSpec};
use ilfs::verify::{self, VerifyConfig};
use ilfs::{EmConfig, Error, FeatureMatrix, PhiMode, RankParams};

use output::{ModelDump, RankingJson, TruthJson};

#[derive(Debug, Parser)]
#[command(name = "ilfs", version, about = "Feature ranking with a latent relevancy topic")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Rank the features of a labelled CSV file.
    Rank(RankArgs),
    /// Write a seeded synthetic dataset and its ground truth.
    Synth(SynthArgs),
    /// Cross-check the ranking kernel against walk enumeration, truncated series and absorbing chains.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
struct RankArgs {
    /// Input CSV with a header row.
    #[arg(long)]
    input: PathBuf,
    /// Name of the class label column.
    #[arg(long = "label")]
    label_column: String,
    /// Number of quantization tokens.
    #[arg(long, default_value_t = 6, value_parser = parse_bins)]
    bins: usize,
    #[arg(long, default_value = "prose", value_parser = parse_phi_mode)]
    phi_mode: PhiMode,
    /// Target value of r * spectral radius, in (0, 1).
    #[arg(long, default_value_t = DEFAULT_DAMPING, value_parser = parse_damping)]
    damping: f64,
    #[arg(long, default_value_t = 100, value_parser = parse_positive_usize)]
    em_max_iter: usize,
    #[arg(long, default_value_t = 1e-6, value_parser = parse_positive_f64)]
    em_tol: f64,
    /// Truncate "order" to the best K features; "scores" stay complete.
    #[arg(long = "top")]
    top_k: Option<usize>,
    /// Output JSON path; standard output when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Write the fitted latent model as JSON.
    #[arg(long)]
    dump_model: Option<PathBuf>,
    /// Write the affinity matrix as CSV.
    #[arg(long)]
    dump_graph: Option<PathBuf>,
    /// Drop self-loops from the affinity graph.
    #[arg(long)]
    zero_diagonal: bool,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 200, value_parser = parse_samples)]
    samples: usize,
    #[arg(long, default_value_t = 5, value_parser = parse_positive_usize)]
    informative: usize,
    #[arg(long, default_value_t = 45)]
    noise: usize,
    /// Distance between class means of informative features, in standard deviations.
    #[arg(long, default_value_t = 3.0, value_parser = parse_positive_f64, allow_negative_numbers = true)]
    separation: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Name of the label column in the written CSV.
    #[arg(long = "label", default_value = "label")]
    label_column: String,
    /// CSV destination.
    #[arg(long)]
    output: PathBuf,
    /// Ground-truth JSON destination.
    #[arg(long)]
    truth: PathBuf,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    /// Random instances per suite.
    #[arg(long, default_value_t = 50, value_parser = parse_positive_usize)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn parse_positive_usize(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(0) => Err("must be at least 1".into()),
        Ok(v) => Ok(v),
        Err(e) => Err(e.to_string()),
    }
}

fn parse_bins(s: &str) -> Result<usize, String> {
    let v: usize = s.parse().map_err(|e: std::num::ParseIntError| e.to_string())?;
    if v < 2 {
        return Err("must be at least 2".into());
    }
    Ok(v)
}

fn parse_samples(s: &str) -> Result<usize, String> {
    let v: usize = s.parse().map_err(|e: std::num::ParseIntError| e.to_string())?;
    if v < 2 {
        return Err("must be at least 2".into());
    }
    Ok(v)
}

fn parse_positive_f64(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e: std::num::ParseFloatError| e.to_string())?;
    if !(v > 0.0 && v.is_finite()) {
        return Err("must be a positive number".into());
    }
    Ok(v)
}

fn parse_damping(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e: std::num::ParseFloatError| e.to_string())?;
    if !(v > 0.0 && v < 1.0) {
        return Err("must lie strictly between 0 and 1".into());
    }
    Ok(v)
}

fn parse_phi_mode(s: &str) -> Result<PhiMode, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// Failure of a command after argument parsing.
enum Failure {
    Lib(Error),
    Verify(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Lib(Error::Io(e))
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Lib(Error::Io(e.into()))
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    Ok(BufWriter::new(File::create(path)?))
}

fn write_json<T: serde::Serialize>(out: impl Write, value: &T) -> Result<(), Failure> {
    let mut out = out;
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

fn cmd_rank(args: &RankArgs) -> Result<(), Failure> {
    let data = FeatureMatrix::load_csv(&args.input, &args.label_column)?;
    let params = RankParams {
        n_tokens: args.bins,
        phi_mode: args.phi_mode,
        em: EmConfig {
            max_iterations: args.em_max_iter,
            rel_tolerance: args.em_tol,
            ..EmConfig::default()
        },
        damping: args.damping,
        zero_diagonal: args.zero_diagonal,
        ..RankParams::default()
    };
    let outcome = ilfs::rank(&data, &params)?;

    if let Some(path) = &args.dump_model {
        write_json(create(path)?, &ModelDump::from(&outcome.model))?;
    }
    if let Some(path) = &args.dump_graph {
        let mut out = create(path)?;
        output::write_matrix_csv(&mut out, data.feature_names(), &outcome.graph.a)?;
        out.flush()?;
    }

    let json = RankingJson::new(&outcome.ranking, &params, args.top_k);
    match &args.output {
        Some(path) => write_json(create(path)?, &json)?,
        None => write_json(io::stdout().lock(), &json)?,
    }

    eprintln!(
        "ranked n={} m={} K={} r={} rho={} iterations={} converged={}",
        data.n_features(),
        data.n_samples(),
        data.n_classes(),
        outcome.ranking.r,
        outcome.ranking.spectral_radius,
        outcome.model.iterations_run,
        outcome.model.converged
    );
    Ok(())
}

fn cmd_synth(args: &SynthArgs) -> Result<(), Failure> {
    let spec = SynthSpec {
        n_samples: args.samples,
        n_informative: args.informative,
        n_noise: args.noise,
        separation: args.separation,
        seed: args.seed,
    };
    let generated = synth::generate(&spec)?;
    let mut out = create(&args.output)?;
    generated.data.write_csv(&mut out, &args.label_column)?;
    out.flush()?;
    write_json(create(&args.truth)?, &TruthJson::new(&spec, &args.label_column, &generated.informative))?;
    eprintln!(
        "wrote {} samples x {} features to {}",
        spec.n_samples,
        spec.n_features(),
        args.output.display()
    );
    Ok(())
}

fn cmd_verify(args: &VerifyArgs) -> Result<(), Failure> {
    let config = VerifyConfig {
        trials: args.trials,
        seed: args.seed,
    };
    let reports = verify::run_suites(config, ilfs::ranker::energy_matrix)?;
    for r in &reports {
        println!(
            "{}: trials={} max_deviation={:e} tolerance={:e} {}",
            r.name,
            r.trials,
            r.max_deviation,
            r.tolerance,
            if r.passed() { "ok" } else { "FAILED" }
        );
    }
    match reports.iter().find(|r| !r.passed()) {
        Some(r) => Err(Failure::Verify(format!(
            "{}: {}",
            r.name,
            r.failure.as_deref().unwrap_or_default()
        ))),
        None => Ok(()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Rank(args) => cmd_rank(args),
        Command::Synth(args) => cmd_synth(args),
        Command::Verify(args) => cmd_verify(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Lib(e)) => {
            eprintln!("error:{}:{}", e.name(), e.to_string().replace('\n', " "));
            ExitCode::from(1)
        }
        Err(Failure::Verify(msg)) => {
            eprintln!("error:VerifyFailed:{msg}");
            ExitCode::from(1)
        }
    }
}
