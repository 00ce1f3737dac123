//! `epi-lab <subcommand> --config <file> [--out <prefix>] [--seed <n>]`
//!
//! Exit codes: 0 success, 2 invalid config, 3 numerical failure, 4 I/O.

use clap::{Args, Parser, Subcommand};
use epi_lab_cli::config::{ExperimentConfig, ExperimentKind};
use epi_lab_cli::report::{emit_csv, emit_json, emit_svg};
use epi_lab_cli::{battery, runner, CliError};
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(
    name = "epi-lab",
    version,
    about = "Entropies, mutual information, MMSE curves and entropy-power checks for additive-noise channels"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Experiment config (one JSON document).
    #[arg(long)]
    config: PathBuf,
    /// Output path prefix; writes <prefix>.csv, <prefix>.json, <prefix>.svg.
    #[arg(long)]
    out: Option<String>,
    /// Seed override for Monte Carlo paths and probe sampling.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Directory for per-criterion CSVs and the summary table.
    #[arg(long)]
    out: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Reduced grids and sample counts (same code paths).
    #[arg(long)]
    quick: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Entropy of a signal law: closed form, quadrature, MMSE-integral routes.
    Entropy(RunArgs),
    /// Mutual information across a gamma grid.
    MiSweep(RunArgs),
    /// MMSE curve across a gamma grid (Gaussian noise).
    MmseSweep(RunArgs),
    /// Residual of the derivative identity linking I and the MMSE.
    Debruijn(RunArgs),
    /// High-SNR limit sweep (continuous, discrete, or mixed signal).
    LimitHigh(RunArgs),
    /// Low-SNR limit sweep toward I = 0.
    LimitLow(RunArgs),
    /// High-SNR sweep plus a log-log rate fit of the residuals.
    RateFit(RunArgs),
    /// Entropy-power inequality battery on a pair of laws.
    Epi(RunArgs),
    /// Pyramidal convolution: closed form against quadrature.
    PyramidJ(RunArgs),
    /// Run the full acceptance battery and print a pass/fail table.
    VerifyAll(VerifyArgs),
}

impl Command {
    fn expected_kind(&self) -> Option<ExperimentKind> {
        match self {
            Self::Entropy(_) => Some(ExperimentKind::Entropy),
            Self::MiSweep(_) => Some(ExperimentKind::MiSweep),
            Self::MmseSweep(_) => Some(ExperimentKind::MmseSweep),
            Self::Debruijn(_) => Some(ExperimentKind::Debruijn),
            Self::LimitHigh(_) => Some(ExperimentKind::LimitHigh),
            Self::LimitLow(_) => Some(ExperimentKind::LimitLow),
            Self::RateFit(_) => Some(ExperimentKind::RateFit),
            Self::Epi(_) => Some(ExperimentKind::Epi),
            Self::PyramidJ(_) => Some(ExperimentKind::PyramidJ),
            Self::VerifyAll(_) => None,
        }
    }
}

fn main() {
    let cli = Cli::parse();
    std::process::exit(match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("epi-lab: {e}");
            e.exit_code()
        }
    });
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    let expected = cli.command.expected_kind();
    match cli.command {
        Command::VerifyAll(args) => verify_all(args),
        Command::Entropy(args)
        | Command::MiSweep(args)
        | Command::MmseSweep(args)
        | Command::Debruijn(args)
        | Command::LimitHigh(args)
        | Command::LimitLow(args)
        | Command::RateFit(args)
        | Command::Epi(args)
        | Command::PyramidJ(args) => run_experiment(args, expected.unwrap()),
    }
}

fn run_experiment(args: RunArgs, expected: ExperimentKind) -> Result<(), CliError> {
    let mut config = ExperimentConfig::from_file(&args.config)?;
    if config.experiment != expected {
        return Err(CliError::Config {
            field: "experiment".into(),
            reason: format!(
                "config is for `{}` but the subcommand expects `{}`",
                config.experiment.as_str(),
                expected.as_str()
            ),
        });
    }
    if let Some(seed) = args.seed {
        config.seed = Some(seed);
    }
    if let Some(out) = args.out {
        config.output = Some(out);
    }
    let prefix = config
        .output
        .clone()
        .unwrap_or_else(|| format!("out/{}", config.experiment.as_str()));
    let report = runner::run(&config)?;

    emit_csv(&report, &path_with(&prefix, "csv"))?;
    emit_json(&report, &path_with(&prefix, "json"))?;
    emit_svg(&report, &path_with(&prefix, "svg"))?;

    println!(
        "{}: {} rows, {} verdicts, {:.2}s -> {prefix}.{{csv,json,svg}}",
        config.experiment.as_str(),
        report.rows.len(),
        report.verdicts.len(),
        report.wall_time_s
    );
    for (k, v) in &report.extras {
        println!("  {k} = {v}");
    }
    Ok(())
}

fn path_with(prefix: &str, ext: &str) -> PathBuf {
    PathBuf::from(format!("{prefix}.{ext}"))
}

fn verify_all(args: VerifyArgs) -> Result<(), CliError> {
    let seed = args.seed.unwrap_or(0);
    let out_dir = args.out.unwrap_or_else(|| "out/verify".into());
    let started = std::time::Instant::now();
    let outcomes = battery::run_all(args.quick, seed)?;

    std::fs::create_dir_all(&out_dir).map_err(|e| CliError::Io {
        path: out_dir.clone(),
        reason: e.to_string(),
    })?;
    let mut summary = String::from("criterion,name,passed\n");
    let mut passed_count = 0;
    for (idx, o) in outcomes.iter().enumerate() {
        let status = if o.passed { "PASS" } else { "FAIL" };
        println!("[{status}] {:>2}  {}", o.id, o.name);
        println!("        {}", o.details);
        summary.push_str(&format!("{},{},{}\n", o.id, o.name, o.passed));
        if o.passed {
            passed_count += 1;
        }
        let csv = battery::rows_to_csv(&o.rows);
        let path = Path::new(&out_dir).join(format!("table_{:02}_{}.csv", idx + 1, slug(o.name)));
        std::fs::write(&path, csv).map_err(|e| CliError::Io {
            path: path.display().to_string(),
            reason: e.to_string(),
        })?;
    }
    let summary_path = Path::new(&out_dir).join("summary.csv");
    std::fs::write(&summary_path, summary).map_err(|e| CliError::Io {
        path: summary_path.display().to_string(),
        reason: e.to_string(),
    })?;
    println!(
        "{passed_count}/{} criteria passed in {:.1}s; tables in {out_dir}/",
        outcomes.len(),
        started.elapsed().as_secs_f64()
    );
    Ok(())
}

fn slug(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() { c.to_ascii_lowercase() } else { '_' })
        .collect::<String>()
        .split('_')
        .filter(|s| !s.is_empty())
        .take(4)
        .collect::<Vec<_>>()
        .join("_")
}
