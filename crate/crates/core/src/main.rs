use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use piatms::fusion::{run_pipeline, Doctrine, FusionError, PipelineOptions, Scenario, Selection};
use piatms::report::{Mode, Report, ReportError};

/// Hierarchical fusion of unit observations with possibilistic truth maintenance.
#[derive(Parser)]
#[command(name = "piatms", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Rank the k best solutions per phase and report the m best.
    Run(RunArgs),
    /// Follow the single best interpretation per phase.
    Best(RunArgs),
    /// Explain one unit of a structured report.
    Explain(ExplainArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    scenario: PathBuf,
    /// Doctrine file; the bundled doctrine when omitted.
    #[arg(long)]
    doctrine: Option<PathBuf>,
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u32).range(1..))]
    k: u32,
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u32).range(1..))]
    m: u32,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Include per-phase statistics.
    #[arg(long)]
    trace: bool,
    /// Stop after this many aggregation phases.
    #[arg(long, value_parser = clap::value_parser!(u32).range(0..=4))]
    phases: Option<u32>,
}

#[derive(Args)]
struct ExplainArgs {
    /// Structured report from an earlier run.
    #[arg(long)]
    report: PathBuf,
    #[arg(long)]
    explain_id: String,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Structured,
}

/// An input problem, printed as `path:line: message`.
struct InputError(String);

fn read(path: &Path) -> Result<String, InputError> {
    fs::read_to_string(path).map_err(|e| InputError(format!("{}: {e}", path.display())))
}

fn at(path: &Path, e: FusionError) -> InputError {
    match e {
        FusionError::Parse { line, message } => InputError(format!("{}:{line}: {message}", path.display())),
        other => InputError(format!("{}: {other}", path.display())),
    }
}

fn run(args: &RunArgs, mode: Mode) -> Result<String, InputError> {
    let scenario = Scenario::parse(&read(&args.scenario)?).map_err(|e| at(&args.scenario, e))?;
    let doctrine = match &args.doctrine {
        Some(p) => Doctrine::parse(&read(p)?).map_err(|e| at(p, e))?,
        None => Doctrine::default_doctrine(),
    };
    let k = if mode == Mode::Best { 1 } else { args.k as usize };
    let opts = PipelineOptions {
        k,
        m: args.m as usize,
        selection: if mode == Mode::Best {
            Selection::Greedy
        } else {
            Selection::Enumerate
        },
        max_phases: args.phases.map(|p| p as usize),
    };
    // Type and id problems surface against the scenario file.
    let out = run_pipeline(&scenario, &doctrine, &opts).map_err(|e| at(&args.scenario, e))?;
    let phases = opts.max_phases.unwrap_or(4).min(4);
    let report = Report::from_output(mode, k, opts.m, phases, &out, args.trace);
    Ok(match args.format {
        Format::Text => report.render_text(),
        Format::Structured => report.to_structured(),
    })
}

fn explain(args: &ExplainArgs) -> Result<String, InputError> {
    let report = Report::parse_structured(&read(&args.report)?).map_err(|e| match e {
        ReportError::Parse { line, message } => InputError(format!("{}:{line}: {message}", args.report.display())),
        other => InputError(format!("{}: {other}", args.report.display())),
    })?;
    report
        .explain(&args.explain_id)
        .map_err(|e| InputError(format!("{}: {e}", args.report.display())))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match &cli.command {
        Command::Run(a) => run(a, Mode::Run),
        Command::Best(a) => run(a, Mode::Best),
        Command::Explain(a) => explain(a),
    };
    match result {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(InputError(msg)) => {
            eprintln!("piatms: {msg}");
            ExitCode::from(2)
        }
    }
}
