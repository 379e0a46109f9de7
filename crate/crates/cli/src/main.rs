mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Decomposition-based STRIPS planner with optional LLM assistance.
#[derive(Debug, Parser)]
#[command(name = "subgoal", version, args_override_self = true)]
pub struct Cli {
    /// key=value file supplying defaults for any long flag; command-line flags win.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// More log output (repeat for more).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Syntax-check a domain and, optionally, problem files.
    Parse {
        #[arg(long)]
        domain: PathBuf,
        #[arg(long)]
        problem: Vec<PathBuf>,
    },
    /// List the actions applicable in the initial state.
    Ground {
        #[command(flatten)]
        input: Input,
        /// List every ground action instead.
        #[arg(long)]
        all: bool,
    },
    /// Print the sub-goal order.
    Decompose {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        rules: RuleArgs,
    },
    /// Solve one problem in one mode.
    Solve {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        planner: PlannerArgs,
        /// Write the plan here as well as to standard output.
        #[arg(long, value_name = "FILE")]
        plan_out: Option<PathBuf>,
        /// Write the key=value run record here.
        #[arg(long, value_name = "FILE")]
        record_out: Option<PathBuf>,
        /// Append LLM exchanges here as JSON lines.
        #[arg(long, value_name = "FILE")]
        transcript: Option<PathBuf>,
    },
    /// Check a plan file against a problem.
    Validate {
        #[command(flatten)]
        input: Input,
        #[arg(long, value_name = "FILE")]
        plan: PathBuf,
    },
    /// Run every mode on every instance of a suite.
    Bench {
        #[arg(long)]
        domain: PathBuf,
        /// Directory of problem files (the domain file itself is skipped).
        #[arg(long, value_name = "DIR")]
        suite: Option<PathBuf>,
        /// Additional problem files.
        #[arg(long)]
        problem: Vec<PathBuf>,
        /// Comma-separated modes.
        #[arg(long, value_delimiter = ',', default_value = "direct,decompose")]
        modes: Vec<String>,
        #[command(flatten)]
        planner: PlannerArgs,
        /// Write the CSV report here.
        #[arg(long, value_name = "FILE")]
        csv: Option<PathBuf>,
        /// Append key=value run records here.
        #[arg(long, value_name = "FILE")]
        records: Option<PathBuf>,
        #[arg(long, value_name = "FILE")]
        transcript: Option<PathBuf>,
        /// Standard-output format.
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
        /// Worker threads.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Render the Inspire, Predict and Direct prompts for a problem's initial state.
    Prompts {
        #[command(flatten)]
        input: Input,
        #[arg(long, value_enum, default_value_t = PromptChoice::All)]
        kind: PromptChoice,
    },
    /// Write seeded random problems.
    Generate {
        #[arg(value_enum)]
        family: Family,
        /// Blocks: number of blocks. Logistics: number of packages.
        #[arg(long, default_value_t = 6)]
        size: usize,
        /// Logistics only.
        #[arg(long, default_value_t = 2)]
        cities: usize,
        #[arg(long, default_value_t = 1)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output directory; without it a single problem goes to standard output.
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct Input {
    #[arg(long)]
    domain: PathBuf,
    #[arg(long)]
    problem: PathBuf,
}

#[derive(Debug, Args)]
struct RuleArgs {
    /// Dependency-rule file: lines of `predicate -> none | edge <from> <to>`,
    /// plus an optional `default -> ...` line for unlisted binary predicates.
    #[arg(long, value_name = "FILE")]
    rules: Option<PathBuf>,
    /// Fall back to file order for cyclic goal dependencies.
    #[arg(long)]
    cycle_fallback: bool,
}

#[derive(Debug, Args)]
struct PlannerArgs {
    #[arg(long, default_value = "decompose")]
    mode: String,
    /// `internal`, or `external:"<command with {domain} {problem} [{plan}]>"`.
    #[arg(long, default_value = "internal")]
    engine: String,
    /// Seconds per sub-instance solve.
    #[arg(long, value_parser = seconds, default_value = "15")]
    sub_timeout: Duration,
    /// Total solver seconds per episode.
    #[arg(long, value_parser = seconds, default_value = "180")]
    budget: Duration,
    /// Seconds for solving towards a predicted intermediate state.
    #[arg(long, value_parser = seconds, default_value = "15")]
    predict_timeout: Duration,
    #[arg(long, default_value_t = 10)]
    retry_limit: usize,
    /// `none`, `oracle`, `scripted:<file>` or `live`.
    #[arg(long, default_value = "none")]
    llm: String,
    /// Keep earlier sub-goals true in later sub-instances.
    #[arg(long)]
    protect_achieved: bool,
    /// No repair solve after the last sub-goal.
    #[arg(long)]
    strict: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Keep external planner temp directories.
    #[arg(long)]
    keep_artifacts: bool,
    /// Live client endpoint (else SUBGOAL_LLM_ENDPOINT).
    #[arg(long)]
    llm_endpoint: Option<String>,
    /// Live client model (else SUBGOAL_LLM_MODEL).
    #[arg(long)]
    llm_model: Option<String>,
    #[command(flatten)]
    rules: RuleArgs,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Table,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PromptChoice {
    All,
    Inspire,
    Predict,
    Direct,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Family {
    Blocks,
    Logistics,
}

fn seconds(s: &str) -> Result<Duration, String> {
    let v: f64 = s.parse().map_err(|_| format!("{s:?} is not a number of seconds"))?;
    Duration::try_from_secs_f64(v).map_err(|e| e.to_string())
}

/// What went wrong, and which exit status it maps to.
pub enum Fail {
    /// Exit 1: planning or validation failed.
    Planning(anyhow::Error),
    /// Exit 2: bad arguments, configuration or input files.
    Usage(anyhow::Error),
}

impl<E: Into<anyhow::Error>> From<E> for Fail {
    fn from(e: E) -> Self {
        Fail::Usage(e.into())
    }
}

fn main() -> ExitCode {
    let args = match config::expand_args(std::env::args().collect()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Fail::Planning(e)) => {
            eprintln!("{e:#}");
            ExitCode::from(1)
        }
        Err(Fail::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
