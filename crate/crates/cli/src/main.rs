//! `netbell`: batch front-end for building, evaluating and checking network
//! Bell inequalities.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::Failure;

#[derive(Parser, Debug)]
#[command(name = "netbell", version, about = "Nonlinear Bell inequalities for acyclic networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Output {
    /// Output file; stdout when omitted. Written atomically.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ExprSource {
    /// Inequality JSON file
    #[arg(long = "in", conflicts_with = "preset")]
    input: Option<PathBuf>,
    /// Built-in inequality (chsh, mermin, i3322, bilocal, trilocal, chainN, starN, mermin_net, i3322_bilocal)
    #[arg(long)]
    preset: Option<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Add a leaf party and source to an inequality's network
    Extend {
        #[command(flatten)]
        expr: ExprSource,
        /// Label of the party the new source attaches to
        #[arg(long)]
        anchor: String,
        /// Anchor inputs whose terms go with weight 1/q
        #[arg(long, value_delimiter = ',', required = true)]
        plus: Vec<u32>,
        /// Anchor inputs whose terms go with weight 1/(1-q)
        #[arg(long, value_delimiter = ',', required = true)]
        minus: Vec<u32>,
        #[command(flatten)]
        out: Output,
    },
    /// Minimize an inequality's left-hand side over its quantifiers
    Evaluate {
        #[command(flatten)]
        expr: ExprSource,
        /// Correlator table JSON
        #[arg(long)]
        table: PathBuf,
        /// Slack before a violation is reported
        #[arg(long, default_value_t = netbell::inequality::VIOLATION_TOL)]
        tol: f64,
        #[command(flatten)]
        out: Output,
    },
    /// Bisect for the critical visibility of a quantum family
    Scan {
        /// Built-in scenario (bilocal, trilocal, chainN, mermin_net)
        #[arg(long, required_unless_present = "input")]
        preset: Option<String>,
        /// Quantum model JSON; its first source is mixed with white noise
        #[arg(long = "in", requires = "inequality", conflicts_with = "preset")]
        input: Option<PathBuf>,
        /// Inequality JSON to scan against (with --in)
        #[arg(long)]
        inequality: Option<PathBuf>,
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true, default_values_t = [0.05, 1.0])]
        range: Vec<f64>,
        #[command(flatten)]
        out: Output,
    },
    /// Search classical network models for a counterexample
    Verify {
        #[command(flatten)]
        expr: ExprSource,
        #[arg(long)]
        seed: u64,
        /// Number of random mixtures
        #[arg(long, default_value_t = 100_000)]
        samples: u64,
        /// Hidden alphabet size for random mixtures
        #[arg(long, default_value_t = netbell::nlocal_oracle::DEFAULT_ALPHABET)]
        alphabet: usize,
        /// Hidden alphabet size for deterministic enumeration
        #[arg(long, default_value_t = 2)]
        det_alphabet: usize,
        /// Enumerate every point mass and response table instead of one
        /// representative per deterministic behavior
        #[arg(long)]
        no_dedup: bool,
        /// Maximum number of deterministic strategies
        #[arg(long, default_value_t = netbell::nlocal_oracle::DEFAULT_BUDGET)]
        budget: u128,
        #[arg(long, default_value_t = netbell::inequality::VIOLATION_TOL)]
        tol: f64,
        #[command(flatten)]
        out: Output,
    },
    /// Correlator table of a quantum model
    QuantumTable {
        /// Built-in scenario (bilocal, trilocal, chainN, mermin_net)
        #[arg(long, requires = "vis", required_unless_present = "input")]
        preset: Option<String>,
        /// Per-source visibilities for the preset
        #[arg(long, value_delimiter = ',')]
        vis: Option<Vec<f64>>,
        /// Quantum model JSON
        #[arg(long = "in", conflicts_with = "preset")]
        input: Option<PathBuf>,
        /// Emit CSV instead of JSON
        #[arg(long)]
        csv: bool,
        /// Also write the model JSON here
        #[arg(long)]
        model_out: Option<PathBuf>,
        #[command(flatten)]
        out: Output,
    },
    /// Evaluate the trilocal polynomial W
    WEval {
        /// I,J,K,L
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true, required_unless_present = "table")]
        ijkl: Option<Vec<f64>>,
        /// Trilocal correlator table JSON
        #[arg(long, conflicts_with = "ijkl")]
        table: Option<PathBuf>,
        #[command(flatten)]
        out: Output,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("netbell: {f}");
            ExitCode::from(f.code())
        }
    }
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Counterexample => 2,
            Failure::Lib(netbell::Error::BudgetExceeded { .. }) => 3,
            Failure::Lib(_) | Failure::Io(..) | Failure::Usage(_) => 1,
        }
    }
}
