//! The `gaussalign` command line: argument parsing, file ingestion and JSON
//! run reports. [`run`] is the whole program; the binary only forwards
//! `std::env::args_os` and the exit code.

mod commands;
pub mod report;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use gaussalign::cluster::PairwiseMode;

pub use report::{RunReport, SCHEMA};

#[derive(Debug, Parser)]
#[command(name = "gaussalign", version, about = "Optimal transport and IGW alignment of Gaussian measures")]
pub struct Cli {
    /// Seed for every randomised step.
    #[arg(long, global = true, env = "GAUSSALIGN_SEED", default_value_t = 0)]
    pub seed: u64,

    /// Worker threads for pairwise matrices and sweeps (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Add wall-clock seconds per phase to the report.
    #[arg(long, global = true)]
    pub timings: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct ReportOut {
    /// Write the report here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RgdArgs {
    #[arg(long, default_value_t = 50)]
    pub max_iters: usize,
    #[arg(long, default_value_t = 1e-2)]
    pub grad_tol: f64,
    /// Random starts on top of the identity start.
    #[arg(long, default_value_t = 4)]
    pub restarts: usize,
}

#[derive(Debug, Args)]
pub struct RtrArgs {
    #[arg(long, default_value_t = 500)]
    pub max_iters: usize,
    #[arg(long, default_value_t = 1e-6)]
    pub grad_tol: f64,
    #[arg(long, default_value_t = 3)]
    pub restarts: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum IgwMethod {
    Closed,
    Rgd,
    Bounds,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Pairwise {
    Closed,
    Rgd,
    Upper,
    Lower,
}

impl From<Pairwise> for PairwiseMode {
    fn from(p: Pairwise) -> Self {
        match p {
            Pairwise::Closed => PairwiseMode::Closed,
            Pairwise::Rgd => PairwiseMode::Rgd,
            Pairwise::Upper => PairwiseMode::Upper,
            Pairwise::Lower => PairwiseMode::Lower,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a Gaussian to a point cloud (rows are samples).
    Fit {
        #[arg(long)]
        input: PathBuf,
        /// Added to the covariance diagonal.
        #[arg(long, default_value_t = 1e-6)]
        ridge: f64,
        /// The CSV starts with a header row.
        #[arg(long)]
        header: bool,
        /// Write the fitted Gaussian JSON here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Bures-Wasserstein distance, OT map and displacement interpolation.
    W2 {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        /// Interpolation times in [0, 1].
        #[arg(long = "t", num_args = 1..)]
        times: Vec<f64>,
        #[command(flatten)]
        out: ReportOut,
    },
    /// IGW distance by closed form, gradient ascent or analytic bounds.
    Igw {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[arg(long, value_enum, default_value_t = IgwMethod::Rgd)]
        method: IgwMethod,
        #[command(flatten)]
        solver: RgdArgs,
        #[command(flatten)]
        out: ReportOut,
    },
    /// IGW barycenter of centered Gaussians.
    IgwBarycenter {
        #[arg(long, num_args = 1.., required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long, num_args = 1..)]
        weights: Option<Vec<f64>>,
        /// Output dimension (default: the largest input dimension).
        #[arg(long)]
        dim: Option<usize>,
        #[command(flatten)]
        out: ReportOut,
    },
    /// Multimarginal OT coupling and the W2 barycenter it induces.
    Mmot {
        #[arg(long, num_args = 1.., required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long, num_args = 1..)]
        weights: Option<Vec<f64>>,
        #[command(flatten)]
        solver: RtrArgs,
        /// Write the stacked joint covariance as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
        #[command(flatten)]
        out: ReportOut,
    },
    /// Closed-form multimarginal IGW coupling of centered Gaussians.
    MmIgw {
        #[arg(long, num_args = 1.., required = true)]
        inputs: Vec<PathBuf>,
        /// Write the stacked joint covariance as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
        #[command(flatten)]
        out: ReportOut,
    },
    /// k-means++ under IGW on a directory of Gaussian JSON or point-cloud CSV files.
    Cluster {
        #[arg(long)]
        dir: PathBuf,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = gaussalign::cluster::KMEANS_MAX_ITERS)]
        max_iters: usize,
        /// Ridge used when fitting CSV point clouds.
        #[arg(long, default_value_t = 1e-6)]
        ridge: f64,
        /// Point-cloud CSVs start with a header row.
        #[arg(long)]
        header: bool,
        /// Discard means (clustering compares covariances only).
        #[arg(long)]
        drop_means: bool,
        /// Also report the pairwise IGW matrix computed this way.
        #[arg(long, value_enum)]
        matrix: Option<Pairwise>,
        /// Write the pairwise matrix as CSV (needs --matrix).
        #[arg(long, requires = "matrix")]
        csv: Option<PathBuf>,
        #[command(flatten)]
        out: ReportOut,
    },
    /// Classical MDS of a distance matrix, or of the IGW matrix of a directory.
    Mds {
        #[arg(long, conflicts_with = "dir", required_unless_present = "dir")]
        matrix: Option<PathBuf>,
        #[arg(long)]
        dir: Option<PathBuf>,
        #[arg(long, default_value_t = 2)]
        dim: usize,
        #[arg(long, value_enum, default_value_t = Pairwise::Closed)]
        pairwise: Pairwise,
        #[arg(long, default_value_t = 1e-6)]
        ridge: f64,
        #[arg(long)]
        header: bool,
        #[arg(long)]
        drop_means: bool,
        #[command(flatten)]
        solver: RgdArgs,
        /// Write the coordinates as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
        #[command(flatten)]
        out: ReportOut,
    },
    /// Kernel alignment between two embedding matrices with matching rows.
    Cka {
        #[arg(long)]
        x: PathBuf,
        #[arg(long)]
        y: PathBuf,
        #[arg(long)]
        header: bool,
        /// Center the columns first.
        #[arg(long)]
        center: bool,
        #[command(flatten)]
        out: ReportOut,
    },
    /// Multimarginal OT scaling sweep on random marginals `A Aᵀ + 0.1·I`.
    BenchMmot {
        #[arg(long, num_args = 1.., default_values_t = [3, 5, 10, 50, 100])]
        p: Vec<usize>,
        #[arg(long, default_value_t = 3)]
        d: usize,
        #[command(flatten)]
        solver: RtrArgs,
        /// Write one row per p as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
        #[command(flatten)]
        out: ReportOut,
    },
}

/// Parses `argv` (program name first), runs the command and returns the
/// process exit code: 0 on success, 2 on usage errors, 1 on failures.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match commands::execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}
