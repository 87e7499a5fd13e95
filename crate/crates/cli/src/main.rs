use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::builder::PossibleValuesParser;
use clap::{Args, Parser, Subcommand};
use monoidal_cli::{
    run_experiment, sidecar_path, summarize, write_history, write_records, write_summary, CliError,
    ExperimentRecord, FULL_MONOIDAL_ARM, TABLE_ARMS,
};
use monoidal_core::data::{load_mnist, Mnist};
use monoidal_core::laws::{run_all, CheckOptions, Injection};
use monoidal_core::model::train::{DEFAULT_BATCH_SIZE, DEFAULT_EPOCHS, DEFAULT_LEARNING_RATE};
use monoidal_core::model::{Method, TrainConfig};

#[derive(Parser)]
#[command(
    name = "monoidal",
    version,
    about = "Monoidal image embeddings on MNIST"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train and evaluate a single arm.
    Run(RunArgs),
    /// Train every arm of the results table.
    Table(TableArgs),
    /// Run the algebraic-law and gradient property suites.
    Check(CheckArgs),
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long, default_value_t = DEFAULT_EPOCHS)]
    epochs: usize,
    #[arg(long, default_value_t = DEFAULT_BATCH_SIZE)]
    batch: usize,
    #[arg(long, default_value_t = DEFAULT_LEARNING_RATE)]
    lr: f64,
    #[arg(long, env = "MONOIDAL_DATA_DIR", default_value = "data/mnist")]
    data_dir: PathBuf,
    /// CSV destination; a `.history.json` sidecar is written next to it.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, value_parser = method_parser())]
    method: String,
    /// Feature dimension (ignored by the MLP, which sees all pixels).
    #[arg(long, required_if_eq_any([("method", "monoidal"), ("method", "dft")]))]
    dim: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    train: TrainArgs,
}

#[derive(Args)]
struct TableArgs {
    /// Number of seeds per arm, starting at `--seed`.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    seeds: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also train the full-width monoidal arm (slow).
    #[arg(long)]
    include_full_monoidal: bool,
    #[command(flatten)]
    train: TrainArgs,
}

#[derive(Args)]
struct CheckArgs {
    #[arg(long, default_value_t = CheckOptions::default().samples)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Add an expected-failure probe.
    #[arg(long, value_parser = ["non-commuting"])]
    inject: Option<String>,
}

fn method_parser() -> PossibleValuesParser {
    PossibleValuesParser::new(["monoidal", "dft", "mlp"])
}

fn config(method: Method, dim: usize, seed: u64, args: &TrainArgs) -> TrainConfig {
    let mut cfg = TrainConfig::new(method, dim)
        .with_seed(seed)
        .with_epochs(args.epochs);
    cfg.batch_size = args.batch;
    cfg.learning_rate = args.lr;
    cfg
}

fn load(dir: &Path) -> Result<Mnist, CliError> {
    load_mnist(dir).map_err(|e| CliError::Data(format!("{}: {e}", dir.display())))
}

fn emit(
    records: &[ExperimentRecord],
    runs: &[monoidal_core::model::TrainRun],
    out: Option<&Path>,
) -> Result<(), CliError> {
    match out {
        Some(path) => {
            let mut buf = Vec::new();
            write_records(&mut buf, records)?;
            fs::write(path, buf)?;
            write_history(&sidecar_path(path, "history.json"), runs)?;
        }
        None => write_records(io::stdout().lock(), records)?,
    }
    Ok(())
}

fn cmd_run(args: RunArgs) -> Result<(), CliError> {
    let method: Method = args
        .method
        .parse()
        .map_err(|e: monoidal_core::Error| CliError::Usage(e.to_string()))?;
    let cfg = config(method, args.dim.unwrap_or(0), args.seed, &args.train);
    cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    let mnist = load(&args.train.data_dir)?;
    let (record, run) = run_experiment(&cfg, &mnist)?;
    emit(&[record], &[run], args.train.out.as_deref())
}

fn cmd_table(args: TableArgs) -> Result<(), CliError> {
    let mut arms = TABLE_ARMS.to_vec();
    if args.include_full_monoidal {
        arms.push(FULL_MONOIDAL_ARM);
    }
    let seeds: Vec<u64> = (0..args.seeds).map(|k| args.seed + k).collect();
    let configs: Vec<TrainConfig> = arms
        .iter()
        .flat_map(|arm| {
            seeds
                .iter()
                .map(|&s| config(arm.method, arm.dim, s, &args.train))
        })
        .collect();
    for cfg in &configs {
        cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    }
    let mnist = load(&args.train.data_dir)?;

    let mut records = Vec::with_capacity(configs.len());
    let mut runs = Vec::with_capacity(configs.len());
    for cfg in &configs {
        let (record, run) = run_experiment(cfg, &mnist)?;
        eprintln!(
            "{} d={} seed={}: {:.2}% (epoch {}, {:.1}s)",
            record.method,
            record.dim,
            record.seed,
            record.test_accuracy_pct,
            record.selected_epoch,
            record.wall_seconds
        );
        records.push(record);
        runs.push(run);
    }
    emit(&records, &runs, args.train.out.as_deref())?;

    let summary = summarize(&records);
    match args.train.out.as_deref() {
        Some(path) => {
            let mut buf = Vec::new();
            write_summary(&mut buf, &summary)?;
            fs::write(sidecar_path(path, "summary.csv"), buf)?;
        }
        None => write_summary(io::stderr().lock(), &summary)?,
    }
    Ok(())
}

fn cmd_check(args: CheckArgs) -> Result<(), CliError> {
    let opts = CheckOptions {
        samples: args.samples,
        seed: args.seed,
        inject: args.inject.map(|_| Injection::NonCommuting),
    };
    let report = run_all(&opts).map_err(|e| CliError::Runtime(e.to_string()))?;
    let mut stdout = io::stdout().lock();
    write!(stdout, "{report}")?;
    stdout.flush()?;
    let failed: Vec<&str> = report.failures().map(|r| r.name.as_str()).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Property(failed.join(", ")))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Table(args) => cmd_table(args),
        Command::Check(args) => cmd_check(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("monoidal: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
