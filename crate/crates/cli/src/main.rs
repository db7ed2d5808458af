use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use interview_core::harness::ReportFormat;
use interview_core::ScoreKind;

/// `println!` that ignores a closed stdout instead of panicking.
macro_rules! say {
    ($($arg:tt)*) => {{
        use std::io::Write as _;
        let _ = writeln!(std::io::stdout(), $($arg)*);
    }};
}

mod commands;
mod inputs;
mod manifest;

use commands::Failure;

#[derive(Parser)]
#[command(name = "interview", version, about = "Budgeted adaptive model evaluation by multi-to-one interview")]
struct Cli {
    /// Worker threads for parallel commands (default: all processors).
    #[arg(long, global = true)]
    parallel: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Assign difficulty levels from reference-model verdicts.
    Annotate(AnnotateArgs),
    /// Interview one candidate.
    Interview(InterviewArgs),
    /// Score one candidate on a uniform random sample of the pool.
    Baseline(BaselineArgs),
    /// Score one candidate on every question of the pool.
    GroundTruth(GroundTruthArgs),
    /// Compare interview and random sampling against ground truth.
    Compare(CompareArgs),
    /// Generate a synthetic benchmark and reference verdicts.
    Synthesize(SynthesizeArgs),
    /// Re-emit report tables from a saved JSON report.
    Report(ReportArgs),
}

#[derive(Args)]
struct AnnotateArgs {
    #[arg(long)]
    verdicts: PathBuf,
    #[arg(long)]
    questions: PathBuf,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

/// Candidate selection shared by single-candidate commands.
#[derive(Args, Clone)]
pub struct CandidateArgs {
    /// `synthetic:ABILITY[:SLOPE[:FLOOR]]`, `scripted:PATH`, `remote[:URL]`,
    /// or a TOML file holding one candidate table.
    #[arg(long)]
    candidate: String,
    #[arg(long)]
    candidate_id: Option<String>,
}

#[derive(Args)]
struct InterviewArgs {
    #[arg(long)]
    pool: PathBuf,
    #[command(flatten)]
    candidate: CandidateArgs,
    /// Comma-separated interviewer ids.
    #[arg(long)]
    panel: Option<String>,
    /// Interview configuration (`key = value` lines).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    budget: Option<usize>,
    /// Base directory; results go to a sub-directory named by input hash.
    #[arg(long, default_value = "runs")]
    out: PathBuf,
}

#[derive(Args)]
struct BaselineArgs {
    #[arg(long)]
    pool: PathBuf,
    #[command(flatten)]
    candidate: CandidateArgs,
    #[arg(long)]
    budget: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "runs")]
    out: PathBuf,
}

#[derive(Args)]
struct GroundTruthArgs {
    #[arg(long)]
    pool: PathBuf,
    #[command(flatten)]
    candidate: CandidateArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "runs")]
    out: PathBuf,
}

#[derive(Args)]
struct CompareArgs {
    /// Experiment file; the desk-scale default is used without one.
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Comma-separated budgets overriding the experiment file.
    #[arg(long, value_delimiter = ',')]
    budgets: Option<Vec<usize>>,
    /// Number of seeds, counting up from `--seed`.
    #[arg(long)]
    seeds: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    score_kind: Option<ScoreKind>,
    /// TOML file with `[[candidates]]` tables; replaces the experiment's
    /// candidates and synthetic population.
    #[arg(long)]
    candidates: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "both")]
    format: FormatArg,
    #[arg(long, default_value = "runs")]
    out: PathBuf,
}

#[derive(Args)]
struct SynthesizeArgs {
    #[arg(long, default_value_t = 300)]
    per_level: usize,
    #[arg(long, default_value_t = 6)]
    categories: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Reference models to simulate verdicts for (0 to skip).
    #[arg(long, default_value_t = 10)]
    references: usize,
    /// Leave levels out of the question file, as before annotation.
    #[arg(long)]
    unlabeled: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum, default_value = "csv")]
    format: FormatArg,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum FormatArg {
    Csv,
    Json,
    Both,
}

impl From<FormatArg> for ReportFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => ReportFormat::Csv,
            FormatArg::Json => ReportFormat::Json,
            FormatArg::Both => ReportFormat::Both,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.parallel {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(Failure::INPUT);
        }
    }
    let result = match cli.command {
        Command::Annotate(a) => commands::annotate(&a.verdicts, &a.questions, &a.out),
        Command::Interview(a) => commands::interview(commands::InterviewRequest {
            pool: a.pool,
            candidate: a.candidate,
            panel: a.panel,
            config: a.config,
            seed: a.seed,
            budget: a.budget,
            out: a.out,
        }),
        Command::Baseline(a) => commands::baseline(&a.pool, &a.candidate, a.budget, a.seed, &a.out),
        Command::GroundTruth(a) => commands::ground_truth(&a.pool, &a.candidate, a.seed, &a.out),
        Command::Compare(a) => commands::compare(commands::CompareRequest {
            spec: a.spec,
            budgets: a.budgets,
            seeds: a.seeds,
            seed: a.seed,
            score_kind: a.score_kind,
            candidates: a.candidates,
            format: a.format.into(),
            out: a.out,
        }),
        Command::Synthesize(a) => {
            commands::synthesize(a.per_level, a.categories, a.seed, a.references, a.unlabeled, &a.out)
        }
        Command::Report(a) => commands::report(&a.input, a.format.into(), &a.out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
