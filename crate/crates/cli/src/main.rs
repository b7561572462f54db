mod commands;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use entrochart::entropy::EntropyParams;
use entrochart::noise::{DEFAULT_MAX_STEPS, DEFAULT_TOLERANCE};
use entrochart::raster::ChartDims;
use entrochart::series::{BaseFunctionKind, SeriesFormat};
use entrochart::Error;

/// Pixel approximate entropy for line charts.
#[derive(Debug, Parser)]
#[command(name = "entrochart", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Chart size and entropy parameters shared by most commands.
#[derive(Debug, Clone, Args, serde::Serialize)]
struct ChartOpts {
    /// Chart size in pixels, WIDTHxHEIGHT.
    #[arg(long, default_value = "300x200")]
    dims: ChartDims,
    /// Window length.
    #[arg(long, default_value_t = EntropyParams::DEFAULT_M)]
    m: usize,
    /// Similarity tolerance in pixels.
    #[arg(long, default_value_t = EntropyParams::DEFAULT_R)]
    r: f64,
}

impl ChartOpts {
    fn params(&self) -> entrochart::Result<EntropyParams> {
        EntropyParams::new(self.m, self.r)
    }
}

#[derive(Debug, Clone, Args, serde::Serialize)]
struct SeedOpt {
    /// RNG seed; falls back to ENTROCHART_SEED, then 0.
    #[arg(long, env = "ENTROCHART_SEED", default_value_t = 0)]
    seed: u64,
}

/// Where the series comes from: a file, or a clean base function.
#[derive(Debug, Clone, Args, serde::Serialize)]
struct InputOpts {
    /// CSV (one or two columns) or JSON ({"xs": [...], "ys": [...]}) file.
    #[arg(required_unless_present = "base", conflicts_with = "base")]
    input: Option<PathBuf>,
    /// Use a clean base function instead of an input file.
    #[arg(long)]
    base: Option<BaseFunctionKind>,
    /// Input format; guessed from the extension when omitted.
    #[arg(long)]
    format: Option<SeriesFormat>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Score a series: PAE, optionally with the baseline measures.
    Score {
        #[command(flatten)]
        input: InputOpts,
        #[command(flatten)]
        chart: ChartOpts,
        /// Also report sample entropy, multiscale entropy, flattened length,
        /// lag-1 autocorrelation and the high-frequency power ratio.
        #[arg(long)]
        all_measures: bool,
        /// Write the JSON report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Add triangle noise until the chart reaches a target PAE.
    Noise {
        #[command(flatten)]
        input: InputOpts,
        #[command(flatten)]
        chart: ChartOpts,
        #[command(flatten)]
        seed: SeedOpt,
        #[arg(long)]
        target: f64,
        #[arg(long, default_value_t = DEFAULT_TOLERANCE)]
        tol: f64,
        #[arg(long, default_value_t = DEFAULT_MAX_STEPS)]
        max_steps: usize,
        /// Perturbed pixel series as CSV.
        #[arg(long)]
        out: PathBuf,
        /// Write the JSON report here instead of stdout.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Generate a stimulus set with images and a manifest.
    #[command(subcommand)]
    Stimuli(commands::StimuliCommand),
    /// Regress PAE on noise level for the four general base functions.
    Exp1 {
        #[command(flatten)]
        chart: ChartOpts,
        #[command(flatten)]
        seed: SeedOpt,
        /// Noise-step counts, comma separated.
        #[arg(long, value_delimiter = ',')]
        levels: Option<Vec<usize>>,
        #[arg(long, default_value_t = entrochart::studio::DEFAULT_EXP1_REPLICATES)]
        replicates: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rank (m, r) cells by noise/PAE correlation across resolutions.
    Calibrate {
        #[command(flatten)]
        seed: SeedOpt,
        #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
        m_grid: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_value = "5,10,15,20,25,30,40")]
        r_grid: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "150x100,300x200,600x400")]
        dims_list: Vec<ChartDims>,
        /// Noise-step counts of the training charts, comma separated.
        #[arg(long, value_delimiter = ',')]
        levels: Option<Vec<usize>>,
        #[arg(long, default_value_t = 5)]
        replicates: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Moving-average smoothing until the chart's PAE drops to a target.
    Smooth {
        #[command(flatten)]
        input: InputOpts,
        #[command(flatten)]
        chart: ChartOpts,
        #[arg(long)]
        target: f64,
        #[arg(long, default_value_t = 51)]
        max_window: usize,
        /// Smoothed series as CSV.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// PAE of one series at several chart sizes.
    Aspect {
        #[command(flatten)]
        input: InputOpts,
        #[arg(long, default_value_t = EntropyParams::DEFAULT_M)]
        m: usize,
        #[arg(long, default_value_t = EntropyParams::DEFAULT_R)]
        r: f64,
        #[arg(long, value_delimiter = ',', default_value = "150x200,300x200,600x200,300x100,300x400")]
        dims_list: Vec<ChartDims>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Logistic regression of `correct` on predictors, Wald tests and
    /// grouped accuracy.
    Analyze {
        /// Response CSV with a header and a `correct` column in {0, 1}.
        responses: PathBuf,
        #[command(flatten)]
        seed: SeedOpt,
        /// Numeric predictor columns.
        #[arg(long, value_delimiter = ',')]
        numeric: Vec<String>,
        /// Categorical predictor columns (treatment coded).
        #[arg(long, value_delimiter = ',')]
        categorical: Vec<String>,
        /// Columns for the accuracy table; defaults to all predictors.
        #[arg(long, value_delimiter = ',')]
        group_by: Option<Vec<String>>,
        #[arg(long, default_value_t = 100)]
        max_iter: usize,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        #[arg(long, default_value_t = entrochart::stats::DEFAULT_RESAMPLES)]
        resamples: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::UnreachableTarget { .. } => 3,
        Error::NotConverged(_) => 4,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}
