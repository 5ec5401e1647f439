//! Command-line front end: presets, end-to-end demos, attack runs, rate
//! tables and curves, and a quick self-test.

mod commands;
mod presets;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

/// CLI failure classes; each exits with its own code and a one-line
/// machine-parsable reason on stderr.
#[derive(Debug)]
pub enum CliError {
    UnknownPreset(String),
    InvalidParams(String),
    BadPresetFile(String),
    /// Attack preconditions unsatisfiable (database too small, etc).
    Precondition(String),
    /// Workload rejected as infeasible at desk scale.
    DeskScale(String),
    Io(String),
    /// A run completed but did not produce the required outcome.
    Failed(String),
    SelftestFailed(String),
}

impl CliError {
    fn kind(&self) -> &'static str {
        match self {
            CliError::UnknownPreset(_) => "unknown-preset",
            CliError::InvalidParams(_) => "invalid-params",
            CliError::BadPresetFile(_) => "bad-preset-file",
            CliError::Precondition(_) => "precondition",
            CliError::DeskScale(_) => "desk-scale",
            CliError::Io(_) => "io",
            CliError::Failed(_) => "failed",
            CliError::SelftestFailed(_) => "selftest-failed",
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::UnknownPreset(m)
            | CliError::InvalidParams(m)
            | CliError::BadPresetFile(m)
            | CliError::Precondition(m)
            | CliError::DeskScale(m)
            | CliError::Io(m)
            | CliError::Failed(m)
            | CliError::SelftestFailed(m) => m,
        }
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::SelftestFailed(_) => 1,
            CliError::UnknownPreset(_) => 3,
            CliError::InvalidParams(_) | CliError::BadPresetFile(_) => 4,
            CliError::Precondition(_) => 5,
            CliError::DeskScale(_) => 6,
            CliError::Io(_) => 7,
            CliError::Failed(_) => 8,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SchemeChoice {
    Original,
    Cbcpir,
    Both,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum HintChoice {
    #[value(name = "1")]
    One,
    #[value(name = "100")]
    Hundred,
    #[value(name = "inf")]
    Inf,
}

#[derive(Parser)]
#[command(
    name = "cbcpir",
    version,
    about = "Code-based PIR laboratory: both protocols, the rank attacks, and rate analysis"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// End-to-end round trip: pack a database, query, answer, extract, verify.
    Demo {
        #[arg(long, default_value = "toy16")]
        preset: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = SchemeChoice::Both)]
        scheme: SchemeChoice,
        /// File index to request (default: seeded random).
        #[arg(long)]
        index: Option<usize>,
        /// Override the preset's file count.
        #[arg(long)]
        m: Option<usize>,
        /// Override the preset's file row count L.
        #[arg(long)]
        rows: Option<usize>,
        /// Directory for the binary artifacts (database, queries, responses).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Plant a CB-cPIR query and recover its index with the rank attack.
    Attack {
        #[arg(long, default_value = "toy16")]
        preset: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Worker threads for pair evaluation (0 = all cores).
        #[arg(long, default_value_t = 1)]
        workers: usize,
        /// Rows absorbed per block in the auxiliary matrix (default: auto).
        #[arg(long)]
        rows_per_block: Option<usize>,
        /// Target index to plant (default: seeded random).
        #[arg(long)]
        index: Option<usize>,
        /// Override the preset's file count.
        #[arg(long)]
        m: Option<usize>,
        /// Directory for the report and query artifacts.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the block-deletion rank statistic against either scheme.
    Subquery {
        #[arg(long, default_value = "toy16")]
        preset: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = SchemeChoice::Original)]
        scheme: SchemeChoice,
        #[arg(long)]
        index: Option<usize>,
        #[arg(long)]
        m: Option<usize>,
    },
    /// Emit the parameter table (1) or security/attack-cost table (2) as CSV.
    Rates {
        #[arg(long)]
        table: u8,
        /// Output file (default: stdout).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
        format: OutputFormat,
    },
    /// Emit the XPIR and SimplePIR comparison curve CSVs.
    Curves {
        /// Output directory.
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Restrict the SimplePIR hint-amortization variants.
        #[arg(long, value_enum)]
        t: Option<HintChoice>,
        /// log2(q) for the CB-cPIR side of the XPIR comparison.
        #[arg(long, default_value_t = 104.0)]
        xpir_cb_log2q: f64,
        /// log2(q) for the CB-cPIR side of the SimplePIR comparison.
        #[arg(long, default_value_t = 135.0)]
        simplepir_cb_log2q: f64,
        #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
        format: OutputFormat,
    },
    /// Closed-form attack cost for a preset.
    Cost {
        #[arg(long)]
        preset: String,
        /// Override the preset's file count.
        #[arg(long)]
        m: Option<usize>,
    },
    /// Fast self-check of the core invariants.
    Selftest {
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error kind={} msg={:?}", e.kind(), e.message());
            ExitCode::from(e.exit_code())
        }
    }
}
