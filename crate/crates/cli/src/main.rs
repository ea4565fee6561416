//! Benchmark harness for tensor-attention KV-cache layouts.
//!
//! Exit codes: 0 on success, 2 on constraint violations (failed gates,
//! rejected instances, I/O), 64 on usage errors.

mod commands;
mod config;
mod output;
mod util;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use tensorkv::witness::Protocol;

use commands::{bench, jl_check, subgen_eval, witness};
use config::ConfigMap;
use util::{CliError, Delta, F64List, LayoutChoice, UsizeList};

#[derive(Parser)]
#[command(
    name = "tensorkv",
    version,
    about = "Benchmarks, recovery witnesses, projection checks, and clustered-cache \
evaluation for tensor-attention KV caches"
)]
struct Cli {
    /// Base seed for all randomized work.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// CSV output path (default: <command>.csv).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Flat key=value file supplying defaults for any long flag.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Write a machine-readable JSON summary here.
    #[arg(long = "summary-path", global = true)]
    summary_path: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Full n-token decodes per (n, d, layout): per-step CSV records plus
    /// fitted memory and op-count scaling exponents.
    Bench(BenchArgs),
    /// Monte-Carlo bit-recovery trials through the real decode path; exits
    /// nonzero when the success rate falls below 0.90.
    Witness(WitnessArgs),
    /// Deviation-violation rates of seeded Gaussian projections across a
    /// dimension-multiplier sweep.
    JlCheck(JlCheckArgs),
    /// Clustered-cache estimates on synthetic clusterable streams:
    /// error/bound table, cluster counts, and memory flatness.
    SubgenEval(SubgenEvalArgs),
}

#[derive(Args)]
struct BenchArgs {
    /// Comma-separated decode lengths.
    #[arg(long = "n-values")]
    n_values: Option<UsizeList>,
    /// Comma-separated embedding dimensions.
    #[arg(long = "d-values")]
    d_values: Option<UsizeList>,
    /// Cache layout: four, two, or both.
    #[arg(long)]
    layout: Option<LayoutChoice>,
    /// Attend repetitions per step (minimum wall time is recorded).
    #[arg(long)]
    repetitions: Option<usize>,
}

#[derive(Args)]
struct WitnessArgs {
    /// Protocol: four or two.
    #[arg(long)]
    protocol: Option<Protocol>,
    /// Instance size n (bit rows are n for four, n^2 for two).
    #[arg(long)]
    n: Option<usize>,
    /// Projection dimension; defaults to ceil(multiplier * eps^-2 * ln rows).
    #[arg(long)]
    d: Option<usize>,
    /// Number of independent trials.
    #[arg(long)]
    trials: Option<usize>,
    /// Inner-product deviation tolerance.
    #[arg(long)]
    epsilon: Option<f64>,
    /// Multiplier in the default projection-dimension formula.
    #[arg(long = "jl-multiplier")]
    jl_multiplier: Option<f64>,
}

#[derive(Args)]
struct JlCheckArgs {
    /// Number of projected basis vectors.
    #[arg(long)]
    n: Option<usize>,
    /// Deviation tolerance.
    #[arg(long)]
    epsilon: Option<f64>,
    /// Comma-separated dimension multipliers to sweep.
    #[arg(long)]
    multipliers: Option<F64List>,
    /// Seeds per multiplier.
    #[arg(long)]
    seeds: Option<u64>,
}

#[derive(Args)]
struct SubgenEvalArgs {
    /// Stream lengths for the error/bound table.
    #[arg(long = "n-values")]
    n_values: Option<UsizeList>,
    /// Stream lengths for the memory-flatness check.
    #[arg(long = "memory-n-values")]
    memory_n_values: Option<UsizeList>,
    /// Embedding dimension.
    #[arg(long)]
    d: Option<usize>,
    /// Ground-truth cluster count of the synthetic streams.
    #[arg(long = "m-true")]
    m_true: Option<usize>,
    /// Clustering diameter; accepts a float or the literal `e/3`.
    #[arg(long)]
    delta: Option<Delta>,
    /// Norm of the final query.
    #[arg(long = "query-norm")]
    query_norm: Option<f64>,
    /// Seeds for the error table.
    #[arg(long)]
    seeds: Option<u64>,
    /// Tolerance scale for the reported bound; defaults to the audited
    /// calibration when the configuration matches one.
    #[arg(long = "bound-epsilon")]
    bound_epsilon: Option<f64>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err)
            if matches!(
                err.kind(),
                ErrorKind::DisplayHelp
                    | ErrorKind::DisplayVersion
                    | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand
            ) =>
        {
            let _ = err.print();
            return ExitCode::SUCCESS;
        }
        Err(err) => {
            let _ = err.print();
            return ExitCode::from(64);
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err @ CliError::Usage(_)) => {
            eprintln!("{err}");
            ExitCode::from(64)
        }
        Err(err @ CliError::Constraint(_)) => {
            eprintln!("{err}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    let config = ConfigMap::load(cli.config.as_deref())?;
    let seed = config.resolve(cli.seed, "seed", 0u64)?;
    let summary_path = config.resolve_optional(cli.summary_path, "summary-path")?;
    let out_for = |default: &str| -> Result<PathBuf, CliError> {
        config.resolve(cli.out.clone(), "out", PathBuf::from(default))
    };

    match cli.command {
        Command::Bench(args) => {
            let params = bench::BenchParams {
                n_values: config
                    .resolve(args.n_values, "n-values", UsizeList(vec![64, 128, 256]))?
                    .0,
                d_values: config
                    .resolve(args.d_values, "d-values", UsizeList(vec![16]))?
                    .0,
                layout: config.resolve(args.layout, "layout", LayoutChoice::Both)?,
                repetitions: config.resolve(args.repetitions, "repetitions", 1usize)?,
                seed,
                out: out_for("bench.csv")?,
                summary_path,
            };
            if params.repetitions == 0 {
                return Err(CliError::Usage("repetitions must be at least 1".into()));
            }
            bench::run(&params)
        }
        Command::Witness(args) => {
            let protocol = config.resolve(args.protocol, "protocol", Protocol::Four)?;
            let default_n = match protocol {
                Protocol::Four => 8,
                Protocol::Two => 4,
            };
            let params = witness::WitnessParams {
                protocol,
                n: config.resolve(args.n, "n", default_n)?,
                d: config.resolve_optional(args.d, "d")?,
                trials: config.resolve(args.trials, "trials", 200usize)?,
                epsilon: config.resolve(args.epsilon, "epsilon", 0.1f64)?,
                jl_multiplier: config.resolve(args.jl_multiplier, "jl-multiplier", 8.0f64)?,
                seed,
                out: out_for("witness.csv")?,
                summary_path,
            };
            witness::run(&params)
        }
        Command::JlCheck(args) => {
            let params = jl_check::JlCheckParams {
                n: config.resolve(args.n, "n", 256usize)?,
                epsilon: config.resolve(args.epsilon, "epsilon", 0.3f64)?,
                multipliers: config
                    .resolve(
                        args.multipliers,
                        "multipliers",
                        F64List(vec![2.0, 4.0, 8.0]),
                    )?
                    .0,
                seeds: config.resolve(args.seeds, "seeds", 100u64)?,
                seed,
                out: out_for("jl_check.csv")?,
                summary_path,
            };
            jl_check::run(&params)
        }
        Command::SubgenEval(args) => {
            let params = subgen_eval::SubgenEvalParams {
                error_n_values: config
                    .resolve(args.n_values, "n-values", UsizeList(vec![200]))?
                    .0,
                memory_n_values: config
                    .resolve(
                        args.memory_n_values,
                        "memory-n-values",
                        UsizeList(vec![1_000, 10_000]),
                    )?
                    .0,
                d: config.resolve(args.d, "d", 8usize)?,
                m_true: config.resolve(args.m_true, "m-true", 5usize)?,
                delta: config.resolve(args.delta, "delta", Delta(0.1))?.0,
                query_norm: config.resolve(args.query_norm, "query-norm", 2.0f64)?,
                seeds: config.resolve(args.seeds, "seeds", 100u64)?,
                bound_epsilon: config.resolve_optional(args.bound_epsilon, "bound-epsilon")?,
                seed,
                out: out_for("subgen_eval.csv")?,
                summary_path,
            };
            subgen_eval::run(&params)
        }
    }
}
