//! Command-line pipeline over the `riskkit` library: prepare cohort data,
//! cross-validate, tune, screen predictors, fit and export a final model,
//! validate it externally and draw the evaluation plots.

pub mod commands;
pub mod config;
pub mod error;
pub mod plot;
pub mod portable;
pub mod report;
pub mod source;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use error::{CliError, Result};

use config::RunConfig;
use plot::PlotKind;

#[derive(Debug, Parser)]
#[command(name = "riskkit", version, about = "Binary-outcome risk modelling pipeline")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// TOML run configuration.
    #[arg(long, short)]
    pub config: PathBuf,
    /// Output directory; overrides `out_dir` in the config.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Load, join, filter and encode the input tables.
    Prepare(RunArgs),
    /// Cross-validate the configured models.
    Cv(RunArgs),
    /// Grid-search hyperparameters for each configured family.
    Tune(RunArgs),
    /// Cross-validate every predictor subset.
    Screen(RunArgs),
    /// Fit the final model on all rows and export it.
    Fit(RunArgs),
    /// Score the external cohort with an exported model.
    Validate {
        #[command(flatten)]
        run: RunArgs,
        /// Model file; defaults to `model.json` in the output directory.
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Draw an SVG chart from one or more reports.
    Plot {
        #[arg(long, value_enum)]
        kind: PlotKind,
        #[arg(long)]
        out: PathBuf,
        /// Put predicted on x and observed on y in calibration plots.
        #[arg(long)]
        swap_axes: bool,
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
    },
    /// Run every step of the pipeline and draw the standard plots.
    Run(RunArgs),
    /// Generate a synthetic cohort from a JSON generator spec.
    Synth {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn load(args: &RunArgs) -> Result<(RunConfig, PathBuf)> {
    let cfg = RunConfig::from_file(&args.config)?;
    let out = args.out.clone().unwrap_or_else(|| cfg.out_dir());
    Ok((cfg, out))
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Prepare(a) => load(&a).and_then(|(c, o)| commands::prepare(&c, &o).map(drop)),
        Command::Cv(a) => load(&a).and_then(|(c, o)| commands::cv(&c, &o).map(drop)),
        Command::Tune(a) => load(&a).and_then(|(c, o)| commands::tune(&c, &o).map(drop)),
        Command::Screen(a) => load(&a).and_then(|(c, o)| commands::screen(&c, &o).map(drop)),
        Command::Fit(a) => load(&a).and_then(|(c, o)| commands::fit(&c, &o).map(drop)),
        Command::Validate { run, model } => {
            load(&run).and_then(|(c, o)| commands::validate(&c, &o, model.as_deref()).map(drop))
        }
        Command::Plot { kind, out, swap_axes, inputs } => commands::plot(kind, &inputs, &out, swap_axes),
        Command::Run(a) => load(&a).and_then(|(c, o)| commands::run_all(&c, &o)),
        Command::Synth { spec, out } => commands::synth(&spec, &out),
    }
}
