//! `kmva` — fit, apply, evaluate, and benchmark kernel feature
//! extractors on delimited files.
//!
//! Every command echoes its resolved configuration into its output (a
//! `#` comment line on tables, a `config` field on JSON reports) and
//! exits 0 on success, 1 on usage errors, 2 on data problems, and 3 on
//! numerical failures.

mod apply;
mod benchmark;
mod common;
mod crossval;
mod fit;
mod hsic;
mod toydata;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(
    name = "kmva",
    version,
    about = "Kernel multivariate feature extraction: fit, project, predict, benchmark.",
    propagate_version = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fit an extractor (and a least-squares readout when targets exist).
    Fit(fit::FitArgs),
    /// Project rows of a file through a fitted model.
    Transform(apply::TransformArgs),
    /// Predict labels or numeric targets with a model's readout.
    Predict(apply::PredictArgs),
    /// Score a model's readout against ground truth.
    Eval(apply::EvalArgs),
    /// K-fold generalization estimate for one configuration.
    Crossval(crossval::CrossvalArgs),
    /// Run the manifest's datasets through the standard protocol.
    Benchmark(benchmark::BenchmarkArgs),
    /// Generate a seeded synthetic dataset as labeled CSV.
    Toydata(toydata::ToydataArgs),
    /// Kernel dependence statistic between two aligned tables.
    Hsic(hsic::HsicArgs),
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();

    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version are successful exits; everything else is
            // a usage error.
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };

    let result = match &cli.command {
        Command::Fit(args) => fit::run(args),
        Command::Transform(args) => apply::run_transform(args),
        Command::Predict(args) => apply::run_predict(args),
        Command::Eval(args) => apply::run_eval(args),
        Command::Crossval(args) => crossval::run(args),
        Command::Benchmark(args) => benchmark::run(args),
        Command::Toydata(args) => toydata::run(args),
        Command::Hsic(args) => hsic::run(args),
    };

    if let Err(e) = result {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
