use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;

use commands::Failure;

/// Optimal atomic clusters of pair potentials on the IF lattice.
#[derive(Parser, Debug)]
#[command(name = "ifcluster", version)]
struct Cli {
    #[command(flatten)]
    config: Config,

    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Potential {
    Lj,
    Morse,
    Bu,
    Ki,
}

/// Settings shared by every subcommand.
#[derive(Args, Debug, Clone)]
pub struct Config {
    #[arg(long, value_enum, default_value = "lj", global = true)]
    pub potential: Potential,
    /// Well depth (LJ, Kihara).
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub eps: Option<f64>,
    /// Length scale (LJ, Kihara).
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub sigma: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub alpha: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub beta: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub gamma: Option<f64>,
    /// Lattice shells (default: enclose the input plus one shell).
    #[arg(long, global = true)]
    pub shells: Option<usize>,
    #[arg(long, global = true, default_value_t = 1e-8)]
    pub grad_tol: f64,
    /// Relaxation iteration limit (default 200·n).
    #[arg(long, global = true)]
    pub max_iters: Option<usize>,
    /// Seed for random perturbations.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Distance within which an input point is matched to a lattice site.
    #[arg(long, global = true, default_value_t = 1e-6)]
    pub tol: f64,
    /// Output file (or directory for `peel`).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Print relaxation progress to stderr.
    #[arg(long, short, global = true)]
    pub verbose: bool,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum PeelOp {
    Forward,
    Backward,
    Itself,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write the IF lattice as tagged XYZ and print its site counts.
    Lattice,
    /// Relax a cluster read from XYZ.
    Relax {
        input: PathBuf,
        /// Uniform noise amplitude added to every coordinate before relaxing.
        #[arg(long)]
        perturb: Option<f64>,
    },
    /// Write the normalized gradient as extended XYZ.
    Gradient { input: PathBuf },
    /// Run greedy forward/backward/itself moves from a lattice cluster.
    Peel {
        input: PathBuf,
        #[arg(long, value_enum)]
        op: PeelOp,
        #[arg(long, default_value_t = 1)]
        steps: usize,
    },
    /// Build, query and check On/Off catalogs.
    #[command(subcommand)]
    Catalog(CatalogCommand),
    /// Print the geometric type of a lattice cluster.
    Classify { input: PathBuf },
}

#[derive(Subcommand, Debug)]
pub enum CatalogCommand {
    /// Peel from a lattice cluster and store the chain as a catalog.
    Build {
        input: PathBuf,
        #[arg(long, value_enum, default_value = "backward")]
        op: PeelOp,
        #[arg(long, default_value_t = 1)]
        steps: usize,
    },
    /// Reconstruct and relax one entry.
    Lookup { catalog: PathBuf, n: usize },
    /// Look up every entry and compare with the stored energies.
    Verify { catalog: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let c = &cli.config;
    let result = match cli.command {
        Command::Lattice => commands::lattice(c),
        Command::Relax { input, perturb } => commands::relax(c, &input, perturb),
        Command::Gradient { input } => commands::gradient(c, &input),
        Command::Peel { input, op, steps } => commands::peel(c, &input, op, steps),
        Command::Catalog(CatalogCommand::Build { input, op, steps }) => commands::catalog_build(c, &input, op, steps),
        Command::Catalog(CatalogCommand::Lookup { catalog, n }) => commands::catalog_lookup(c, &catalog, n),
        Command::Catalog(CatalogCommand::Verify { catalog }) => commands::catalog_verify(c, &catalog),
        Command::Classify { input } => commands::classify(c, &input),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure { code, error }) => {
            if code != 1 {
                eprintln!("error: {error:#}");
            }
            ExitCode::from(code)
        }
    }
}
