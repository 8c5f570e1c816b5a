//! `qmatfun` — batch front end for the matrix q-calculus library.
//!
//! Subcommands: `eval` (values over a point or grid), `verify` (residual
//! suites), `classify` (singular-point classification), `scan` (plot-ready
//! tables). Exit codes: 0 success, 1 I/O or parse failure, 2 precondition or
//! domain error (with a structured error report), 3 residual gate failure.

mod commands;
mod matdoc;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "qmatfun",
    version,
    about = "Matrix q-special functions: evaluate, verify, classify, scan"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a function over a point or grid and write a JSON report
    Eval {
        /// kummer | kummer2 | gauss | gauss2 | rphis | qgamma | qbeta |
        /// integralU1 | integralU2
        kind: String,
        #[command(flatten)]
        opts: Opts,
    },
    /// Run a named verification suite and report residuals
    Verify {
        /// kummer-series | kummer-second | kummer-integrals | gauss-series |
        /// gamma-beta | recurrences | rules
        suite: String,
        #[command(flatten)]
        opts: Opts,
    },
    /// Classify a point of a bilateral equation
    Classify {
        /// kummer | kummer-infinity | gauss | constant
        equation: String,
        #[command(flatten)]
        opts: Opts,
    },
    /// Tabulate values/residuals/term ratios over a z-grid (JSON or CSV)
    Scan {
        /// kummer | kummer2 | gauss | gauss2 | integralU1 | integralU2
        kind: String,
        #[command(flatten)]
        opts: Opts,
    },
}

#[derive(Args)]
pub struct Opts {
    /// Base q: a real in (0, 1) or "re,im" with |q| < 1
    #[arg(long, default_value = "0.5")]
    pub q: String,

    /// Point or grid: "v", "re,im", "start:stop:count", or
    /// "re0:re1:n:im0:im1:m" (defaults to 0.1:0.8:8)
    #[arg(long)]
    pub z: Option<String>,

    /// Matrix file (JSON MatrixDocument) for S
    #[arg(long = "S", value_name = "FILE")]
    pub s_file: Option<PathBuf>,
    /// Matrix file for T
    #[arg(long = "T", value_name = "FILE")]
    pub t_file: Option<PathBuf>,
    /// Matrix file for P
    #[arg(long = "P", value_name = "FILE")]
    pub p_file: Option<PathBuf>,
    /// Matrix file for Q
    #[arg(long = "Q", value_name = "FILE")]
    pub q_file: Option<PathBuf>,
    /// Matrix file for R
    #[arg(long = "R", value_name = "FILE")]
    pub r_file: Option<PathBuf>,
    /// Numerator exponent matrix for rphis (repeatable)
    #[arg(long = "num", value_name = "FILE")]
    pub num_files: Vec<PathBuf>,
    /// Denominator exponent matrix for rphis (repeatable)
    #[arg(long = "den", value_name = "FILE")]
    pub den_files: Vec<PathBuf>,
    /// Matrix dimension for parameterless series / test bundles
    #[arg(long)]
    pub dim: Option<usize>,

    /// Output path ("-" or omitted: stdout)
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// json (all commands) or csv (scan only)
    #[arg(long, default_value = "json")]
    pub format: String,

    /// Relative tail tolerance (default 1e-14)
    #[arg(long)]
    pub rel_tol: Option<f64>,
    /// Absolute tail floor (default 1e-300)
    #[arg(long)]
    pub abs_tol: Option<f64>,
    /// Term cap; falls back to QMATFUN_MAX_TERMS, then 10000
    #[arg(long)]
    pub max_terms: Option<usize>,

    /// Seed for randomized suites
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Number of random draws for verify suites (default 20)
    #[arg(long)]
    pub samples: Option<usize>,
    /// Matrix dimensions for verify draws, e.g. "2,3"
    #[arg(long)]
    pub dims: Option<String>,
    /// Series truncation length for residual checks (default 40)
    #[arg(long)]
    pub series_terms: Option<usize>,
    /// Bilateral window: nodes q^j for -j_neg <= j <= j_pos (default 30)
    #[arg(long)]
    pub j_neg: Option<usize>,
    /// Bilateral window upper index (default 60)
    #[arg(long)]
    pub j_pos: Option<usize>,
    /// Residual gate for verify (defaults per suite)
    #[arg(long)]
    pub tolerance: Option<f64>,
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            eprint!("{e}");
            return ExitCode::from(1);
        }
    };

    let result = match &cli.command {
        Command::Eval { kind, opts } => commands::cmd_eval(kind, opts),
        Command::Verify { suite, opts } => commands::cmd_verify(suite, opts),
        Command::Classify { equation, opts } => commands::cmd_classify(equation, opts),
        Command::Scan { kind, opts } => commands::cmd_scan(kind, opts),
    };

    match result {
        Ok(code) => ExitCode::from(code),
        Err(failure) => {
            if let Some(report) = &failure.report {
                let bytes = report::to_json_bytes(report);
                let _ = report::write_output(failure.out.as_ref(), &bytes);
            }
            eprintln!("error: {}", failure.message);
            ExitCode::from(failure.exit_code)
        }
    }
}
