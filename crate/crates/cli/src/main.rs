//! `spinforge` command-line entry point.

mod commands;
mod record;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use record::{Log, Run};

/// Marks errors caused by bad user input (exit code 2).
#[derive(Debug)]
pub struct InvalidInput(pub String);

impl std::fmt::Display for InvalidInput {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for InvalidInput {}

/// Non-error outcomes with their own exit codes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Status {
    Ok,
    /// A measurement ran but failed its validity check (exit code 3).
    Invalid(String),
    /// A work budget ran out (exit code 4).
    Budget,
}

impl Status {
    fn label(&self) -> String {
        match self {
            Status::Ok => "ok".into(),
            Status::Invalid(why) => why.clone(),
            Status::Budget => "budget-exceeded".into(),
        }
    }

    fn code(&self) -> u8 {
        match self {
            Status::Ok => 0,
            Status::Invalid(_) => 3,
            Status::Budget => 4,
        }
    }

    /// The worse of two statuses.
    pub fn merge(self, other: Status) -> Status {
        match (&self, &other) {
            (Status::Budget, _) => self,
            (_, Status::Budget) => other,
            (Status::Invalid(_), _) => self,
            _ => other,
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "spinforge", version, about = "Engineer and measure hard Ising instances on Chimera graphs")]
struct Cli {
    /// Master seed; work items use seeds derived from it.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Directory for output files.
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,
    /// Structured log (JSON lines, appended). `-` for stdout. Default:
    /// `<out-dir>/spinforge.jsonl`.
    #[arg(long, global = true)]
    log: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Command {
    /// Generate random +-1 or planted-loop instances.
    Gen(commands::GenArgs),
    /// Run a random (RAO) or loop (LAO) adaptive walk.
    Evolve(commands::EvolveArgs),
    /// Time to solution of instance files.
    Measure(commands::MeasureArgs),
    /// Parallel-tempering mixing time of instance files.
    Ptmix(commands::PtmixArgs),
    /// Power-law fits, rank correlation and overlap analysis.
    Analyze(commands::AnalyzeArgs),
    /// Assign TTS values to hardness bands.
    Classify(commands::ClassifyArgs),
    /// Cross-check ground-state energies against exhaustive search.
    Verify(commands::VerifyArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Gen(_) => "gen",
            Command::Evolve(_) => "evolve",
            Command::Measure(_) => "measure",
            Command::Ptmix(_) => "ptmix",
            Command::Analyze(_) => "analyze",
            Command::Classify(_) => "classify",
            Command::Verify(_) => "verify",
        }
    }
}

/// Settings every command sees.
pub struct Ctx {
    pub seed: u64,
    pub out_dir: PathBuf,
    pub log: Log,
    pub run: Run,
}

fn exit_code(err: &anyhow::Error) -> u8 {
    use spinforge::Error as E;
    if err.downcast_ref::<InvalidInput>().is_some() {
        return 2;
    }
    match err.downcast_ref::<E>() {
        Some(E::BudgetExceeded { .. }) => 4,
        Some(E::Io(_)) | Some(E::Analysis(_)) | None => 1,
        Some(_) => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    let log_path = cli.log.clone().unwrap_or_else(|| cli.out_dir.join("spinforge.jsonl"));
    let setup = || -> anyhow::Result<Ctx> {
        std::fs::create_dir_all(&cli.out_dir)?;
        Ok(Ctx {
            seed: cli.seed,
            out_dir: cli.out_dir.clone(),
            log: Log::open(&log_path)?,
            run: Run::new(cli.command.name(), &cli.command, cli.seed)?,
        })
    };
    let ctx = match setup() {
        Ok(ctx) => ctx,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(1);
        }
    };
    let result = match &cli.command {
        Command::Gen(a) => commands::gen(&ctx, a),
        Command::Evolve(a) => commands::evolve(&ctx, a),
        Command::Measure(a) => commands::measure(&ctx, a),
        Command::Ptmix(a) => commands::ptmix(&ctx, a),
        Command::Analyze(a) => commands::analyze(&ctx, a),
        Command::Classify(a) => commands::classify(&ctx, a),
        Command::Verify(a) => commands::verify(&ctx, a),
    };
    let Ctx { log, run, .. } = ctx;
    let (label, code) = match &result {
        Ok(status) => (status.label(), status.code()),
        Err(e) => {
            eprintln!("error: {e:#}");
            let code = exit_code(e);
            (if code == 2 { "invalid-input".into() } else { "error".into() }, code)
        }
    };
    if let Some(reason) = result.as_ref().ok().and_then(|s| match s {
        Status::Invalid(why) => Some(why.clone()),
        _ => None,
    }) {
        eprintln!("measurement invalid: {reason}");
    }
    let record = run.finish(&label);
    if let Err(e) = log.emit("run", &record).and_then(|_| log.flush()) {
        eprintln!("error: writing log: {e:#}");
        return ExitCode::from(1);
    }
    ExitCode::from(code)
}

/// Shared with the `commands` module so it can attach args to records.
#[derive(Args, Debug, Clone, Serialize)]
pub struct TopologyArgs {
    /// Chimera grid, e.g. `3x3`.
    #[arg(long, value_name = "RxC")]
    pub chimera: Option<String>,
    /// Generic graph file: `N`, `M`, then `i j` per edge.
    #[arg(long, value_name = "FILE", conflicts_with = "chimera")]
    pub graph: Option<PathBuf>,
    /// Vertices to remove: one id per line.
    #[arg(long, value_name = "FILE")]
    pub mask: Option<PathBuf>,
}
