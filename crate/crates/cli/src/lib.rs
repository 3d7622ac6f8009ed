//! Command-line driver: argument parsing, config files and output files.

use std::ffi::OsString;
use std::fmt;
use std::path::PathBuf;

use clap::{ArgAction, Args, Parser, Subcommand};

mod check;
mod commands;
pub mod config;
pub mod expr;
pub mod output;
pub mod specs;

/// Failure of a command, carrying its exit code.
#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    /// Rejected input; exit 2.
    Usage(String),
    /// A numerical process did not converge; exit 1.
    Numerical(String),
    /// Reading or writing a file failed; exit 1.
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Numerical(_) | CliError::Io(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl From<maeigen::Error> for CliError {
    fn from(e: maeigen::Error) -> Self {
        if e.is_numerical() {
            CliError::Numerical(e.to_string())
        } else {
            CliError::Usage(e.to_string())
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "maeigen", version, about = "Monge-Ampere eigenvalues, Dirichlet solves and reference oracles on convex domains")]
struct Cli {
    /// Log more (-v info, -vv debug). RUST_LOG overrides.
    #[arg(short, long, action = ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve M(u) = g with Dirichlet boundary data.
    Solve(SolveArgs),
    /// Inverse iteration for the first eigenpair.
    Eigen(EigenArgs),
    /// Bracket the first eigenvalue by continuation in lambda.
    Lions(LionsArgs),
    /// Picard iteration for M(u) = F(x, u)^n nu.
    Semilinear(SemilinearArgs),
    /// Independent reference computations.
    #[command(subcommand)]
    Oracle(OracleCommand),
    /// Run the invariant suite on a configuration.
    Check(CheckArgs),
}

#[derive(Debug, Clone, Args)]
struct Common {
    /// Config file of `key = value` lines; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// `disc CX CY R`, `box LX LY UX UY`, `interval A B` or `polygon X1 Y1 X2 Y2 ...`.
    #[arg(long)]
    domain: Option<String>,
    /// `lebesgue`, `const:C`, `radial:COEFF:EXP[:CX:CY]`, `expr:F(x,y)` or `hessian:U(x,y)`.
    #[arg(long)]
    measure: Option<String>,
    /// Grid spacing.
    #[arg(long, allow_negative_numbers = true)]
    h: Option<f64>,
    /// Stencil width W (directions with coordinates up to W).
    #[arg(long)]
    width: Option<usize>,
    /// Dirichlet solver tolerance (relative residual).
    #[arg(long, allow_negative_numbers = true)]
    tol: Option<f64>,
    #[arg(long)]
    max_sweeps: Option<usize>,
    #[arg(long)]
    max_newton: Option<usize>,
    /// `newton` or `sweep`.
    #[arg(long)]
    solver: Option<String>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write contour.svg.
    #[arg(long)]
    contour: bool,
}

#[derive(Debug, Args)]
struct SolveArgs {
    #[command(flatten)]
    common: Common,
    /// Right-hand density; defaults to --measure.
    #[arg(long)]
    rhs: Option<String>,
    /// `zero` or `expr:G(x,y)`.
    #[arg(long)]
    boundary: Option<String>,
}

#[derive(Debug, Args)]
struct EigenArgs {
    #[command(flatten)]
    common: Common,
    /// `dirichlet`, `paraboloid` or `expr:U(x,y)`.
    #[arg(long)]
    start: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    tol_diff: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    tol_r: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    /// Keep iterates unnormalized.
    #[arg(long)]
    no_normalize: bool,
    /// Tolerance of the monotonicity certificates.
    #[arg(long, allow_negative_numbers = true)]
    tol_cert: Option<f64>,
}

#[derive(Debug, Args)]
struct LionsArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, allow_negative_numbers = true)]
    lambda_max: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    growth_guard: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    bisect_tol: Option<f64>,
    #[arg(long)]
    max_picard: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    picard_tol: Option<f64>,
}

#[derive(Debug, Args)]
struct SemilinearArgs {
    #[command(flatten)]
    common: Common,
    /// `zero`, `lions:LAMBDA` or an expression in x, y, t (t = u <= 0).
    #[arg(long)]
    f: Option<String>,
    /// Declared bound dF/dt >= -L (implied by the presets).
    #[arg(long, allow_negative_numbers = true)]
    lipschitz: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    picard_tol: Option<f64>,
    /// Stop once the sup norm exceeds this value while still growing.
    #[arg(long, allow_negative_numbers = true)]
    growth_guard: Option<f64>,
}

#[derive(Debug, Clone, Args)]
struct OracleCommon {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum OracleCommand {
    /// Closed form on an interval of length L.
    #[command(name = "1d")]
    OneD {
        #[command(flatten)]
        common: OracleCommon,
        #[arg(long, allow_negative_numbers = true)]
        length: Option<f64>,
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Radial shooting on a disc.
    Radial {
        #[command(flatten)]
        common: OracleCommon,
        #[arg(long, allow_negative_numbers = true)]
        radius: Option<f64>,
        /// Radial density, an expression in r.
        #[arg(long)]
        density: Option<String>,
        #[arg(long, allow_negative_numbers = true)]
        rtol: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        atol: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        lambda_tol: Option<f64>,
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Alexandrov measure of a max of affine functions.
    Pl {
        #[command(flatten)]
        common: OracleCommon,
        #[arg(long)]
        domain: Option<String>,
        /// `GX,GY,B;GX,GY,B;...`
        #[arg(long, allow_hyphen_values = true)]
        pieces: Option<String>,
        /// Use M tangent planes of the cone |x| - 1 instead of --pieces.
        #[arg(long)]
        cone: Option<usize>,
    },
    /// The n = 1 toric identity on an annulus.
    Toric {
        #[command(flatten)]
        common: OracleCommon,
        /// Function of x.
        #[arg(long, allow_hyphen_values = true)]
        u: Option<String>,
        /// Test function of x.
        #[arg(long, allow_hyphen_values = true)]
        chi: Option<String>,
        #[arg(long, allow_negative_numbers = true)]
        a: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        b: Option<f64>,
        #[arg(long)]
        n_r: Option<usize>,
        #[arg(long)]
        n_theta: Option<usize>,
    },
    /// Discrete mass of -(-u)^alpha under refinement.
    MassProbe {
        #[command(flatten)]
        common: Common,
        #[arg(long, allow_negative_numbers = true)]
        alpha: Option<f64>,
        /// Comma-separated grid spacings.
        #[arg(long)]
        hs: Option<String>,
    },
}

#[derive(Debug, Args)]
struct CheckArgs {
    #[command(flatten)]
    common: Common,
    /// Number of random samples per property.
    #[arg(long)]
    samples: Option<usize>,
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .try_init();
}

/// Caps rayon's global pool from `MAEIGEN_THREADS` (0 or unset: automatic).
fn init_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("MAEIGEN_THREADS") else { return Ok(()) };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| CliError::Usage(format!("MAEIGEN_THREADS must be a nonnegative integer, got '{raw}'")))?;
    if n > 0 {
        // a pool built earlier in this process stays in place
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

/// Runs one invocation and returns its exit code: 0 on success, 1 on
/// numerical non-convergence or i/o failure, 2 on invalid input.
pub fn run_cli<I, T>(argv: I) -> i32
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
    init_logging(cli.verbose);
    let result = init_threads().and_then(|()| match cli.command {
        Command::Solve(a) => commands::solve(a),
        Command::Eigen(a) => commands::eigen(a),
        Command::Lions(a) => commands::lions(a),
        Command::Semilinear(a) => commands::semilinear(a),
        Command::Oracle(o) => commands::oracle(o),
        Command::Check(a) => check::run(a),
    });
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}
