//! `cbfl`: latency model, simulator and learning loop from the command line.
//!
//! Results go to stdout (or `--out`) as CSV. Failures print one line,
//! `error: <reason>`, to stderr and exit nonzero.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use cbfl::commands::{self, CliError, DataSource, FlRunSpec, SweepParam, SweepSpec};
use cbfl::config::parse_config;
use cbfl::data::read_samples;
use cbfl_core::synth::SynthSpec;
use cbfl_core::SystemParams;

#[derive(Parser)]
#[command(name = "cbfl", version, about = "Latency model and simulator for blockchained federated learning")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// key=value parameter file; missing keys keep their defaults
    #[arg(long)]
    config: Option<PathBuf>,
    /// Write the CSV here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    /// Feature dimension
    #[arg(long, default_value_t = 32)]
    dim: usize,
    /// Distance between the class means along the first feature
    #[arg(long, default_value_t = 4.0)]
    separation: f64,
    /// Standard deviation of the other features
    #[arg(long, default_value_t = 4.0)]
    spread: f64,
}

impl SynthArgs {
    fn spec(&self) -> SynthSpec {
        SynthSpec {
            dim: self.dim,
            separation: self.separation,
            spread: self.spread,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Analytic latency breakdown
    Model {
        #[command(flatten)]
        common: Common,
        /// Samples held by the observed enterprise
        #[arg(long = "n-i", default_value_t = 500)]
        n_i: usize,
        /// Transactions per block (default n_block)
        #[arg(long)]
        b: Option<usize>,
    },
    /// Simulated vs analytic breakdown over independent replications
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 10_000)]
        reps: usize,
        #[arg(long = "n-i", default_value_t = 500)]
        n_i: usize,
    },
    /// Simulate over a grid of one parameter
    Sweep {
        #[command(flatten)]
        common: Common,
        /// lambda, f, n_block or mu (f also sets n_peers = 3f+1)
        #[arg(long)]
        param: SweepParam,
        #[arg(long)]
        from: f64,
        #[arg(long)]
        to: f64,
        #[arg(long)]
        step: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 1_000)]
        reps: usize,
        #[arg(long = "n-i", default_value_t = 500)]
        n_i: usize,
    },
    /// Closed-form optimal arrival rate checked against a grid search
    OptimalLambda {
        #[command(flatten)]
        common: Common,
    },
    /// Train until convergence and report every cycle
    FlRun {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Samples file to split among the enterprises (default: synthetic data)
        #[arg(long)]
        data: Option<PathBuf>,
        /// Share of each enterprise's samples kept for verification (with --data)
        #[arg(long, default_value_t = 0.3)]
        test_fraction: f64,
        /// Synthetic training samples per enterprise
        #[arg(long, default_value_t = 500)]
        samples: usize,
        /// Synthetic verification samples per enterprise
        #[arg(long, default_value_t = 300)]
        test_samples: usize,
        #[command(flatten)]
        synth: SynthArgs,
        #[arg(long, default_value_t = 500)]
        max_cycles: usize,
        /// Enterprise that submits random weights (repeatable)
        #[arg(long)]
        adversary: Vec<usize>,
        #[arg(long, default_value_t = 1.0)]
        adversary_scale: f64,
    },
    /// Write a synthetic samples file
    Synth {
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[command(flatten)]
        synth: SynthArgs,
    },
}

fn load(config: &Option<PathBuf>) -> Result<SystemParams, CliError> {
    match config {
        Some(path) => Ok(parse_config(path)?),
        None => Ok(SystemParams::default()),
    }
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => write_file(path, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|source| CliError::Io {
        path: path.to_owned(),
        source,
    })
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Model { common, n_i, b } => {
            let p = load(&common.config)?;
            emit(&common.out, &commands::model(&p, n_i, b)?)
        }
        Command::Simulate {
            common,
            seed,
            reps,
            n_i,
        } => {
            let p = load(&common.config)?;
            emit(&common.out, &commands::simulate(&p, n_i, reps, seed)?)
        }
        Command::Sweep {
            common,
            param,
            from,
            to,
            step,
            seed,
            reps,
            n_i,
        } => {
            let p = load(&common.config)?;
            let spec = SweepSpec {
                param,
                from,
                to,
                step,
                reps,
                seed,
            };
            emit(&common.out, &commands::sweep(&p, &spec, n_i)?)
        }
        Command::OptimalLambda { common } => {
            let p = load(&common.config)?;
            let result = commands::optimal(&p)?;
            emit(&common.out, &result.to_csv())?;
            if !result.passed() {
                return Err(CliError::Check(format!(
                    "grid argmin {} vs lambda* {} (convex: {})",
                    result.grid_argmin, result.lambda_star, result.convex
                )));
            }
            Ok(())
        }
        Command::FlRun {
            common,
            seed,
            data,
            test_fraction,
            samples,
            test_samples,
            synth,
            max_cycles,
            adversary,
            adversary_scale,
        } => {
            let p = load(&common.config)?;
            let source = match data {
                Some(path) => DataSource::Samples {
                    samples: read_samples(&path)?,
                    test_fraction,
                },
                None => DataSource::Synthetic {
                    spec: synth.spec(),
                    train: samples,
                    test: test_samples,
                },
            };
            let spec = FlRunSpec {
                source,
                seed,
                max_cycles,
                adversaries: adversary,
                adversary_scale,
            };
            let run = commands::fl_run(&p, &spec)?;
            emit(&common.out, &run.table.to_csv())?;
            eprintln!(
                "stop_reason={} cycles={} accuracy={}",
                run.stop.name(),
                run.cycles,
                cbfl::csv_out::fmt_real(run.final_accuracy)
            );
            Ok(())
        }
        Command::Synth {
            out,
            seed,
            samples,
            synth,
        } => emit(&out, &commands::synth(&synth.spec(), samples, seed)?),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let message = e.to_string().replace('\n', " ");
            eprintln!("error: {message}");
            if matches!(e, CliError::Usage(_)) {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
