//! `recouple` command-line interface.
//!
//! Results go to stdout as JSON (or CSV with `--csv`); human-readable
//! notes go to stderr. Failures print one JSON line on stderr and exit
//! with a distinguishing code.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "recouple", version, about = "Max-determinant GMRF completions, witness bounds, tau series and sphere densities")]
pub struct Cli {
    /// Worker threads for parallel sections (default: all cores)
    #[arg(long, global = true)]
    pub jobs: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute tau(G,x) = det Sigma(G,x) and the edge-bound margin
    Tau(TauArgs),
    /// Evaluate margins over several graphs and an x-grid
    Sweep(SweepArgs),
    /// Build the bipartite witness matrix and its closed-form bound
    Witness(WitnessArgs),
    /// Exact integer power series of tau(G,x) and the local margin
    Series(SeriesArgs),
    /// Gram-matrix densities on spheres
    #[command(subcommand)]
    Sphere(SphereCommand),
    /// Exact homomorphism density t(G,H) and the Sidorenko margin
    Homdensity(HomArgs),
}

#[derive(Debug, Args, Clone)]
pub struct GraphSource {
    /// Graph family descriptor, e.g. cycle:5, moebius-ladder, complete-bipartite:3,4
    #[arg(long, conflicts_with = "edges", required_unless_present = "edges")]
    pub graph: Option<String>,
    /// Edge-list file ("u v" per line, '#' comments)
    #[arg(long)]
    pub edges: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TauArgs {
    #[command(flatten)]
    pub source: GraphSource,
    /// Edge value in (-1, 1)
    #[arg(long, allow_hyphen_values = true)]
    pub x: f64,
    /// Stop when max |(Sigma^-1)_vw| over non-edges falls below this
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    /// Maximum number of sweeps over the non-edges
    #[arg(long, default_value_t = 10_000)]
    pub max_passes: usize,
    /// Reverse the non-edge visiting order
    #[arg(long)]
    pub reversed: bool,
    /// Write Sigma as JSON ({"index_set", "matrix"}) to this path
    #[arg(long)]
    pub dump_matrix: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Comma-separated family descriptors (repeatable)
    #[arg(long, required = true)]
    pub graphs: Vec<String>,
    /// x-grid as lo:hi:step
    #[arg(long, default_value = "0.02:0.98:0.02", allow_hyphen_values = true)]
    pub grid: String,
    /// Write the report here instead of stdout
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Emit CSV instead of JSON
    #[arg(long)]
    pub csv: bool,
    /// Also scan negative x for bipartite graphs
    #[arg(long)]
    pub negative: bool,
    /// Record per-row wall time (makes output non-reproducible)
    #[arg(long)]
    pub timings: bool,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    #[arg(long, default_value_t = 10_000)]
    pub max_passes: usize,
}

#[derive(Debug, Args)]
pub struct WitnessArgs {
    #[command(flatten)]
    pub source: GraphSource,
    #[arg(long, allow_hyphen_values = true)]
    pub x: f64,
    /// Also compute tau(G,x) and compare
    #[arg(long)]
    pub compare: bool,
}

#[derive(Debug, Args)]
pub struct SeriesArgs {
    #[command(flatten)]
    pub source: GraphSource,
    /// Truncation order N (coefficients of x^0..x^N)
    #[arg(long, default_value_t = 10)]
    pub order: usize,
    /// Write the coefficient array (decimal strings) here
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum SphereCommand {
    /// Check sampled Gram matrices against the exact density
    DensityCheck(DensityCheckArgs),
    /// Elliptope volume from the Gamma-function formula
    Volume(VolumeArgs),
    /// Empirical large-deviation rates for an edge-interval event
    Ldp(LdpArgs),
}

#[derive(Debug, Args)]
pub struct DensityCheckArgs {
    /// Matrix size: 2 runs a KS test of the off-diagonal law, 3 or more a normalization check
    #[arg(long)]
    pub k: usize,
    /// Ambient dimension
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 100_000)]
    pub samples: u64,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct VolumeArgs {
    #[arg(long)]
    pub k: usize,
    /// Cross-check with this many cube-rejection samples (0 = skip)
    #[arg(long, default_value_t = 0)]
    pub mc_samples: u64,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct LdpArgs {
    /// Matrix size; must equal the vertex count of --graph
    #[arg(long)]
    pub k: Option<usize>,
    /// Graph whose edges carry the interval constraint
    #[arg(long, default_value = "path:1")]
    pub graph: String,
    /// Interval center
    #[arg(long, allow_hyphen_values = true)]
    pub x: f64,
    /// Interval half-width
    #[arg(long, default_value_t = 0.05)]
    pub eps: f64,
    /// Comma-separated ambient dimensions
    #[arg(long, value_delimiter = ',', default_value = "50,100,200,400")]
    pub n_list: Vec<usize>,
    #[arg(long, default_value_t = 100_000)]
    pub samples: u64,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Grid spacing for the supremum of ln tau over the interval
    #[arg(long, default_value_t = 0.01)]
    pub grid_step: f64,
}

#[derive(Debug, Args)]
pub struct HomArgs {
    /// Pattern graph family descriptor
    #[arg(long)]
    pub g: String,
    /// Target edge-list file with optional third weight column in [0,1]
    #[arg(long)]
    pub h: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build_global() {
            return commands::fail(&commands::CliError::usage(e.to_string()));
        }
    }
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => commands::fail(&e),
    }
}
