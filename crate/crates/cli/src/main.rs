//! `wmgf`: build white-matter graphs, make phantoms, filter, analyse and
//! score them.
//!
//! Exit status is 0 on success, 1 when a computation fails and 2 for
//! usage or input errors; failures print a JSON object on stderr.

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::Overrides;
use crate::error::{CliError, CliResult};

#[derive(Parser, Debug)]
#[command(name = "wmgf", version, about = "Anisotropic white-matter graph filtering for fMRI")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct GlobalArgs {
    /// JSON configuration (or a provenance record written by this tool).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for stochastic commands.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Heat-kernel scales, comma separated.
    #[arg(long, global = true, value_delimiter = ',', allow_negative_numbers = true)]
    tau: Option<Vec<f64>>,
    /// Gaussian FWHMs in mm, comma separated.
    #[arg(long = "fwhm-mm", global = true, value_delimiter = ',', allow_negative_numbers = true)]
    fwhm_mm: Option<Vec<f64>>,
    /// Chebyshev expansion order.
    #[arg(long, global = true)]
    cheb_order: Option<usize>,
    /// Worker threads: a number or `auto`.
    #[arg(long, global = true, default_value = "auto")]
    threads: String,
    /// Output file or directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write the analytic crossing-bundle anatomy (mask, ODFs, streamlines).
    Synth,
    /// Build the ODF-weighted voxel graph of a mask.
    BuildGraph {
        #[arg(long)]
        mask: PathBuf,
        /// ODF field; not needed with --uniform.
        #[arg(long)]
        odf: Option<PathBuf>,
        /// Unit weights between all mask neighbours instead of ODF weights.
        #[arg(long)]
        uniform: bool,
    },
    /// Generate a phantom bundle (truth, amplitude, series, provenance).
    Phantom {
        #[arg(long)]
        streamlines: Option<PathBuf>,
        /// Take the grid from this volume instead of the configured anatomy.
        #[arg(long)]
        grid_from: Option<PathBuf>,
        /// Regenerate the bundle described by a phantom provenance record.
        #[arg(long, conflicts_with_all = ["streamlines", "grid_from"])]
        replay: Option<PathBuf>,
    },
    /// Smooth a volume or series.
    Filter {
        #[arg(long)]
        series: PathBuf,
        #[arg(long, value_enum)]
        method: Method,
        /// Graph file (method `graph`).
        #[arg(long)]
        graph: Option<PathBuf>,
        /// Mask volume (method `uniform-graph`).
        #[arg(long)]
        mask: Option<PathBuf>,
    },
    /// Fit the block-design GLM and write the t-map.
    Analyze {
        #[arg(long)]
        series: PathBuf,
        /// Restrict the fit to this mask.
        #[arg(long)]
        mask: Option<PathBuf>,
    },
    /// Average ROC over (t-map, ground truth) pairs.
    Roc {
        #[arg(long = "tmap", required = true)]
        tmaps: Vec<PathBuf>,
        #[arg(long = "truth", required = true)]
        truths: Vec<PathBuf>,
        /// Score only voxels inside this mask.
        #[arg(long)]
        mask: Option<PathBuf>,
        /// Method name recorded in the summary.
        #[arg(long, default_value = "unknown")]
        filter: String,
        /// Method parameter recorded in the summary.
        #[arg(long)]
        param: Option<f64>,
    },
    /// Run the full comparison: phantoms, every filter, GLM and ROC.
    Pipeline,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Graph,
    Gaussian,
    UniformGraph,
}

fn setup_threads(spec: &str) -> CliResult<()> {
    let n = match spec {
        "auto" => 0,
        s => s
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| CliError::input(format!("--threads must be a positive number or `auto`, got `{s}`")))?,
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Compute {
            kind: "threads",
            message: e.to_string(),
        })
}

fn run(cli: Cli) -> CliResult<()> {
    let g = cli.global;
    setup_threads(&g.threads)?;
    let overrides = Overrides {
        seed: g.seed,
        taus: g.tau,
        fwhms_mm: g.fwhm_mm,
        cheb_order: g.cheb_order,
    };
    let loaded = config::load(g.config.as_deref(), &overrides)?;
    let out = g
        .out
        .ok_or_else(|| CliError::input("--out is required"))?;
    match cli.command {
        Command::Synth => commands::synth(&loaded.config, &out),
        Command::BuildGraph { mask, odf, uniform } => {
            commands::build_graph(&loaded.config, &mask, odf.as_deref(), uniform, &out)
        }
        Command::Phantom {
            streamlines,
            grid_from,
            replay,
        } => match replay {
            Some(record) => commands::phantom_replay(&record, &out),
            None => {
                let streamlines =
                    streamlines.ok_or_else(|| CliError::input("--streamlines is required (or use --replay)"))?;
                commands::phantom(&loaded.config, &streamlines, grid_from.as_deref(), &out)
            }
        },
        Command::Filter {
            series,
            method,
            graph,
            mask,
        } => commands::filter(&loaded.config, &series, method, graph.as_deref(), mask.as_deref(), &out),
        Command::Analyze { series, mask } => commands::analyze(&loaded.config, &series, mask.as_deref(), &out),
        Command::Roc {
            tmaps,
            truths,
            mask,
            filter,
            param,
        } => commands::roc(&loaded.config, &tmaps, &truths, mask.as_deref(), &filter, param, &out),
        Command::Pipeline => commands::pipeline(&loaded, &out),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let err = CliError::input(e.render().to_string().trim().to_string());
            eprintln!("{}", err.to_json());
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
