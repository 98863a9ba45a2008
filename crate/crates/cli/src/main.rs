mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use mpskit::MpsError;

use config::{ConfigFile, RunConfig, CONFIG_ENV};

pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_USAGE: i32 = 64;
pub const EXIT_MALFORMED: i32 = 65;

#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Numerical(String),
    Malformed(String),
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => EXIT_VALIDATION,
            CliError::Numerical(_) => EXIT_NUMERICAL,
            CliError::Malformed(_) => EXIT_MALFORMED,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Validation(m) => write!(f, "validation error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
            CliError::Malformed(m) => write!(f, "malformed file: {m}"),
        }
    }
}

impl From<MpsError> for CliError {
    fn from(e: MpsError) -> Self {
        match e {
            MpsError::Numerical(_) => CliError::Numerical(e.to_string()),
            MpsError::Format(_) => CliError::Malformed(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "mpskit", version, about = "Matrix product state toolkit")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone, Default)]
pub struct GlobalArgs {
    /// RNG seed for every randomized step.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Singular-value cutoff when rebuilding chains from dense vectors.
    #[arg(long, global = true)]
    pub tol_rank: Option<f64>,
    /// Tolerance on isometry and canonical-form residuals.
    #[arg(long, global = true)]
    pub tol_iso: Option<f64>,
    /// Distance from the unit circle below which eigenvalues count as peripheral.
    #[arg(long, global = true)]
    pub tol_spec: Option<f64>,
    /// Energy convergence threshold for variational sweeps.
    #[arg(long, global = true)]
    pub tol_e: Option<f64>,
    /// Largest dense vector (entries) any step may build.
    #[arg(long, global = true)]
    pub dense_cap: Option<usize>,
    /// Output directory, or a `.json` file for the main artifact.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

impl GlobalArgs {
    fn as_layer(&self) -> ConfigFile {
        ConfigFile {
            tol_rank: self.tol_rank,
            tau_iso: self.tol_iso,
            tau_spec: self.tol_spec,
            tol_e: self.tol_e,
            dense_cap: self.dense_cap,
            seed: self.seed,
            out: self.out.clone(),
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum BoundaryArg {
    Obc,
    Pbc,
}

impl From<BoundaryArg> for mpskit::hamiltonian::Boundary {
    fn from(b: BoundaryArg) -> Self {
        match b {
            BoundaryArg::Obc => mpskit::hamiltonian::Boundary::Obc,
            BoundaryArg::Pbc => mpskit::hamiltonian::Boundary::Pbc,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum ModelArg {
    /// Transverse-field Ising chain, field `--g`.
    Tfim,
    /// Spin-1 AKLT chain as a sum of projectors onto total spin 2.
    Aklt,
    /// Majumdar-Ghosh three-site projector.
    Mg,
    /// Cluster stabilizer projector.
    Cluster,
    /// Parent Hamiltonian of the translation-invariant chain given by `--in`.
    Parent,
}

#[derive(Args, Debug, Clone)]
pub struct ModelArgs {
    #[arg(long, value_enum)]
    pub model: ModelArg,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 1.0)]
    pub g: f64,
    #[arg(long, value_enum, default_value = "obc")]
    pub boundary: BoundaryArg,
    /// State file for `--model parent`.
    #[arg(long = "in")]
    pub input: Option<PathBuf>,
    /// Interaction length for `--model parent`.
    #[arg(long, default_value_t = 2)]
    pub l: usize,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum ExtractMethod {
    /// Block-cyclic matrices of size N·D.
    Restore,
    /// Search for a tensor of bond `--bond` on a bulk window.
    Window,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum ScheduleArg {
    Ancilla,
    NoAncilla,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Write a built-in state as mpsjson.
    State {
        #[arg(long)]
        name: String,
        #[arg(long)]
        n: usize,
    },
    /// Bring a chain to canonical form and report the residuals.
    Canon {
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Site-independent representation of an open chain.
    TiExtract {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_enum, default_value = "restore")]
        method: ExtractMethod,
        #[arg(long)]
        bond: Option<usize>,
        #[arg(long, default_value_t = 1)]
        l0: usize,
    },
    /// Canonical block decomposition of a translation-invariant chain.
    Blocks {
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Periodic components of every block.
    Periodic {
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Transfer-map spectrum and classification.
    Spectrum {
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Injectivity length and the invertible-matrix bound.
    Injectivity {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        l_max: Option<usize>,
    },
    /// Parent Hamiltonian with a ground-space certificate.
    ParentHam {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value_t = 2)]
        l: usize,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, value_enum, default_value = "pbc")]
        boundary: BoundaryArg,
    },
    /// Ground space of a model Hamiltonian by exact diagonalisation.
    Groundspace {
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Finite-size gap criterion for the two-site parent projector.
    Knabe {
        #[arg(long = "in")]
        input: PathBuf,
        /// Number of sites grouped into one before building the projector.
        #[arg(long, default_value_t = 1)]
        regroup: usize,
        #[arg(long, default_value_t = 2)]
        n: usize,
    },
    /// Truncate to bond dimension `--bond` with the error certificate.
    Compress {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        bond: usize,
    },
    /// Rényi entropies of every cut and, with `--bond`, the tail bounds.
    Entropy {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "0.5,1")]
        alpha: Vec<f64>,
        #[arg(long)]
        bond: Option<usize>,
    },
    /// Variational ground state.
    Dmrg {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        bond: usize,
        #[arg(long, default_value_t = 20)]
        sweeps: usize,
    },
    /// Run a circjson circuit on |0…0⟩.
    Simulate {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value_t = 64)]
        bond: usize,
    },
    /// Sample local measurements.
    Sample {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value_t = 1000)]
        shots: usize,
        /// One of z, x, y per site (a single letter applies to all sites).
        #[arg(long, default_value = "z")]
        basis: String,
    },
    /// Adaptive measurement pattern on a resource state.
    Mbqc {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        plan: PathBuf,
    },
    /// Sequential generation unitaries.
    Schedule {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_enum, default_value = "ancilla")]
        mode: ScheduleArg,
    },
    /// Cross-check a chain against its dense vector.
    OracleCheck {
        #[arg(long = "in")]
        input: PathBuf,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::State { .. } => "state",
            Command::Canon { .. } => "canon",
            Command::TiExtract { .. } => "ti-extract",
            Command::Blocks { .. } => "blocks",
            Command::Periodic { .. } => "periodic",
            Command::Spectrum { .. } => "spectrum",
            Command::Injectivity { .. } => "injectivity",
            Command::ParentHam { .. } => "parent-ham",
            Command::Groundspace { .. } => "groundspace",
            Command::Knabe { .. } => "knabe",
            Command::Compress { .. } => "compress",
            Command::Entropy { .. } => "entropy",
            Command::Dmrg { .. } => "dmrg",
            Command::Simulate { .. } => "simulate",
            Command::Sample { .. } => "sample",
            Command::Mbqc { .. } => "mbqc",
            Command::Schedule { .. } => "schedule",
            Command::OracleCheck { .. } => "oracle-check",
        }
    }
}

fn run(argv: Vec<String>) -> Result<(), CliError> {
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                ErrorKind::InvalidSubcommand => EXIT_USAGE,
                _ => EXIT_VALIDATION,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    let file = match std::env::var_os(CONFIG_ENV) {
        Some(p) if !p.is_empty() => Some(ConfigFile::load(&PathBuf::from(p))?),
        _ => None,
    };
    let cfg = RunConfig::resolve(file, &cli.global.as_layer())?;
    commands::dispatch(&cli.command, &cfg, &argv[1..])
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(std::env::args().collect()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("mpskit: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
