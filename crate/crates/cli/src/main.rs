//! `abm`: run, scan, benchmark, tune, checkpoint and serve the reference
//! models.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "abm", version, about = "Agent-based model runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one model and write its collected data as CSV.
    Run(RunArgs),
    /// Run a model over a parameter grid with replicates.
    Scan(ScanArgs),
    /// Time the pinned benchmark configurations.
    Bench(BenchArgs),
    /// Tune parameters to minimize one of the model's objectives.
    Optimize(OptimizeArgs),
    /// Continue a run from a checkpoint file.
    Resume(ResumeArgs),
    /// Start the interactive session server.
    Serve(ServeArgs),
    /// List models, or the parameters and collectors of one model.
    Models { model: Option<String> },
}

#[derive(Args, Debug, Clone)]
struct Collect {
    /// Steps to run.
    #[arg(long, default_value_t = 100)]
    steps: u64,
    /// Agent collectors, by column name.
    #[arg(long, value_delimiter = ',')]
    adata: Vec<String>,
    /// Model collectors or parameter names.
    #[arg(long, value_delimiter = ',')]
    mdata: Vec<String>,
    /// Collect every this many steps.
    #[arg(long, default_value_t = 1)]
    when: u64,
    /// Writes `<OUT>_agents.csv` and `<OUT>_model.csv` instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct RunArgs {
    model: String,
    /// Parameter overrides, `name=value`.
    config: Vec<String>,
    /// Random when omitted; always recorded in the output.
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    collect: Collect,
    /// Save the final state here.
    #[arg(long)]
    checkpoint: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ResumeArgs {
    checkpoint: PathBuf,
    #[command(flatten)]
    collect: Collect,
    /// Save the final state here.
    #[arg(long = "save")]
    save: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ScanArgs {
    model: String,
    /// `name=lo..hi` (integers), `name=lo..hi:step`, `name=a,b,c`, or a
    /// single `name=value` that is held fixed.
    params: Vec<String>,
    #[arg(long, default_value_t = 1)]
    replicates: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Defaults to the number of CPUs.
    #[arg(long, env = "ABM_WORKERS")]
    workers: Option<usize>,
    #[command(flatten)]
    collect: Collect,
}

#[derive(Args, Debug)]
struct BenchArgs {
    #[arg(long, default_value_t = 5)]
    reps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Fail unless every median is under `slack` times its budget.
    #[arg(long)]
    check: bool,
    #[arg(long, default_value_t = 3.0)]
    slack: f64,
    /// Only these models.
    #[arg(long, value_delimiter = ',')]
    models: Vec<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct OptimizeArgs {
    model: String,
    /// Fixed parameter overrides, `name=value`.
    config: Vec<String>,
    /// Defaults to the model's first objective.
    #[arg(long)]
    objective: Option<String>,
    /// Search dimension `name=lo..hi`; integer parameters are rounded.
    #[arg(long = "param", required = true)]
    params: Vec<String>,
    /// Step limit passed to the objective.
    #[arg(long, default_value_t = 100)]
    steps: u64,
    #[arg(long, default_value_t = 400)]
    budget: usize,
    #[arg(long, default_value_t = 12)]
    population: usize,
    #[arg(long, default_value_t = 3)]
    replicates: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, env = "ABM_WORKERS")]
    workers: Option<usize>,
    /// Write the per-generation log as CSV.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1")]
    host: String,
    #[arg(long, default_value_t = 8080)]
    port: u16,
    /// Seconds a session survives without a connection.
    #[arg(long, default_value_t = 60)]
    grace: u64,
}

#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Model(String),
    Io(String),
    /// A benchmark over budget.
    Check(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Check(_) => 1,
            Failure::Usage(_) => 2,
            Failure::Model(_) => 3,
            Failure::Io(_) => 4,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => commands::run(a),
        Command::Scan(a) => commands::scan(a),
        Command::Bench(a) => commands::bench(a),
        Command::Optimize(a) => commands::optimize(a),
        Command::Resume(a) => commands::resume(a),
        Command::Serve(a) => commands::serve(a),
        Command::Models { model } => commands::list(model.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let (Failure::Usage(m) | Failure::Model(m) | Failure::Io(m) | Failure::Check(m)) = &f;
            eprintln!("error: {m}");
            ExitCode::from(f.code())
        }
    }
}
