use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;

/// Decide, verify and explore consensus solvability under oblivious message adversaries.
#[derive(Parser)]
#[command(name = "omac", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum Format {
    #[default]
    Text,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Run the decision procedure (exit 0 solvable, 1 impossible, 2 input error).
    Decide(DecideArgs),
    /// Search for the smallest horizon at which every component of I(D^r) has a common broadcaster.
    Oracle(OracleArgs),
    /// Build the broadcaster decision rule and check every run.
    Verify(VerifyArgs),
    /// Run the decision rule on one pattern.
    Simulate(SimulateArgs),
    /// Write an adversary document for one of the built-in families.
    Generate(GenerateArgs),
    /// Print a refinement level of I(D), or I(D^r), in DOT format.
    ExportDot(ExportDotArgs),
}

#[derive(Args)]
pub struct DecideArgs {
    pub file: PathBuf,
    /// List the edges removed at every level.
    #[arg(long)]
    pub trace: bool,
    /// Keep refining until the edge set stops changing.
    #[arg(long)]
    pub no_early_exit: bool,
    /// Also print level N_i in DOT format.
    #[arg(long, value_name = "I")]
    pub dot_level: Option<usize>,
    #[arg(long, value_enum, default_value_t)]
    pub format: Format,
}

#[derive(Args)]
pub struct OracleArgs {
    pub file: PathBuf,
    /// Largest horizon to try [default: the round bound if solvable, else the largest horizon within budget].
    #[arg(long)]
    pub rmax: Option<usize>,
    #[arg(long, default_value_t = omac_core::DEFAULT_BUDGET)]
    pub budget: usize,
    #[arg(long, value_enum, default_value_t)]
    pub format: Format,
}

#[derive(Args)]
pub struct VerifyArgs {
    pub file: PathBuf,
    /// Decision round [default: the oracle's horizon if solvable, else T_D].
    #[arg(long)]
    pub horizon: Option<usize>,
    #[arg(long, default_value_t = omac_core::DEFAULT_BUDGET)]
    pub budget: usize,
    #[arg(long, value_enum, default_value_t)]
    pub format: Format,
}

#[derive(Args)]
pub struct SimulateArgs {
    pub file: PathBuf,
    /// Graph names separated by `.` or `,`; the rule's horizon is the pattern length.
    #[arg(long)]
    pub pattern: String,
    /// Comma-separated input values, one per process [default: 1,2,...,n].
    #[arg(long, value_delimiter = ',')]
    pub inputs: Option<Vec<u64>>,
    #[arg(long, default_value_t = omac_core::DEFAULT_BUDGET)]
    pub budget: usize,
    #[arg(long, value_enum, default_value_t)]
    pub format: Format,
}

#[derive(Args)]
pub struct GenerateArgs {
    #[command(subcommand)]
    pub family: Family,
    /// Output file [default: stdout].
    #[arg(short, long, global = true)]
    pub output: Option<PathBuf>,
}

#[derive(Subcommand)]
pub enum Family {
    /// Chain of N graphs whose refinement removes one edge per iteration.
    Chain {
        #[arg(long = "N", visible_alias = "len")]
        len: usize,
        /// Use the alternating-partition root schedule on n processes (n divisible by 12).
        #[arg(long)]
        alternating_n: Option<usize>,
    },
    /// Chain whose encoder edges go through a relay path of the given length.
    Inflated {
        #[arg(long = "N", visible_alias = "len")]
        len: usize,
        #[arg(long)]
        path: usize,
    },
    /// Block-partitioned adversary S_1..S_t with root sets of size m.
    Partitioned {
        #[arg(long)]
        t: usize,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        n: Option<usize>,
    },
    /// All labeled rooted trees.
    RootedTrees {
        #[arg(long)]
        n: usize,
    },
    /// A clique of size k broadcasting to everyone, for every k-subset.
    SourceBroadcast {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
    },
    /// The complete graph with at most f edges removed.
    LossyLink {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        f: usize,
    },
    /// Distinct uniformly random rooted graphs.
    Random {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        count: usize,
        #[arg(long)]
        seed: u64,
    },
}

#[derive(Args)]
pub struct ExportDotArgs {
    pub file: PathBuf,
    /// Refinement level N_i (no early exit).
    #[arg(long, conflicts_with = "rounds")]
    pub level: Option<usize>,
    /// Export I(D^r) over all r-round patterns instead.
    #[arg(long)]
    pub rounds: Option<usize>,
    #[arg(long, default_value_t = omac_core::DEFAULT_BUDGET)]
    pub budget: usize,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let stdout = io::stdout();
    let mut out = stdout.lock();
    let result = match cli.command {
        Command::Decide(args) => commands::decide(&args, &mut out),
        Command::Oracle(args) => commands::oracle(&args, &mut out),
        Command::Verify(args) => commands::verify(&args, &mut out),
        Command::Simulate(args) => commands::simulate(&args, &mut out),
        Command::Generate(args) => commands::generate(&args, &mut out),
        Command::ExportDot(args) => commands::export_dot(&args, &mut out),
    };
    let _ = out.flush();
    match result {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(commands::error_code(&err))
        }
    }
}
