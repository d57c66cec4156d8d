//! Command-line front door for object-spatial programs.
//!
//! Three commands cover the artifact surface:
//!
//! * `run` — execute a program and print its event trace (and, with
//!   `--dump`, the final graph snapshot).
//! * `dump` — execute a program and print only the final graph snapshot.
//! * `check` — parse and statically check without executing.
//!
//! Exit codes are part of the interface: 0 success, 1 parse or check
//! diagnostics, 2 runtime error (including unreadable input and golden
//! mismatches), 3 step-budget abort. Diagnostics and error messages go to
//! standard error; standard output carries only the trace, reports, and
//! snapshot, so goldens can be compared byte for byte.

use clap::{Args, Parser, Subcommand, ValueEnum};
use osp_core::dsl::{self, RunFailure, RunOutput};
use osp_core::engine::DEFAULT_BUDGET;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

const EXIT_OK: u8 = 0;
const EXIT_DIAGNOSTICS: u8 = 1;
const EXIT_RUNTIME: u8 = 2;
const EXIT_BUDGET: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "osp", version, about = "Run object-spatial programs")]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Execute a program and print its event trace.
    Run(RunArgs),
    /// Execute a program and print only the final graph snapshot.
    Dump(DumpArgs),
    /// Parse and statically check a program without executing it.
    Check(CheckArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TraceLevel {
    /// Report payloads only, one per line.
    Quiet,
    /// Every trace line except ability firings.
    Events,
    /// Every trace line.
    Full,
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Program file to execute.
    input: PathBuf,

    /// Trace verbosity.
    #[arg(long, value_enum, default_value_t = TraceLevel::Events)]
    trace: TraceLevel,

    /// Abort the run after this many walker arrivals.
    #[arg(long, default_value_t = DEFAULT_BUDGET, value_parser = clap::value_parser!(u64).range(1..))]
    budget: u64,

    /// Print the final graph snapshot after the trace.
    #[arg(long)]
    dump: bool,

    /// Compare standard output against this file; a mismatch exits 2.
    #[arg(long, value_name = "PATH")]
    golden: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct DumpArgs {
    /// Program file to execute.
    input: PathBuf,

    /// Abort the run after this many walker arrivals.
    #[arg(long, default_value_t = DEFAULT_BUDGET, value_parser = clap::value_parser!(u64).range(1..))]
    budget: u64,

    /// Compare standard output against this file; a mismatch exits 2.
    #[arg(long, value_name = "PATH")]
    golden: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CheckArgs {
    /// Program file to check.
    input: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.cmd {
        Command::Run(args) => cmd_run(&args),
        Command::Dump(args) => cmd_dump(&args),
        Command::Check(args) => cmd_check(&args),
    };
    ExitCode::from(code)
}

fn cmd_run(args: &RunArgs) -> u8 {
    let src = match read_input(&args.input) {
        Ok(src) => src,
        Err(code) => return code,
    };
    match dsl::run_source(&src, args.budget) {
        Ok(out) => {
            let mut text = render_trace(&out.trace, &out.reports, args.trace);
            if args.dump {
                text.push_str(&out.snapshot);
            }
            print!("{text}");
            match &args.golden {
                Some(golden) => compare_golden(golden, &text),
                None => EXIT_OK,
            }
        }
        Err(failure) => report_failure(&args.input, failure, args.trace),
    }
}

fn cmd_dump(args: &DumpArgs) -> u8 {
    let src = match read_input(&args.input) {
        Ok(src) => src,
        Err(code) => return code,
    };
    match dsl::run_source(&src, args.budget) {
        Ok(RunOutput { snapshot, .. }) => {
            print!("{snapshot}");
            match &args.golden {
                Some(golden) => compare_golden(golden, &snapshot),
                None => EXIT_OK,
            }
        }
        // A failed run has no complete snapshot; print nothing on standard
        // output and suppress the partial trace too.
        Err(failure) => report_failure(&args.input, failure, TraceLevel::Quiet),
    }
}

fn cmd_check(args: &CheckArgs) -> u8 {
    let src = match read_input(&args.input) {
        Ok(src) => src,
        Err(code) => return code,
    };
    let program = match dsl::parse(&src) {
        Ok(program) => program,
        Err(diag) => {
            eprintln!("{}:{}", args.input.display(), diag);
            return EXIT_DIAGNOSTICS;
        }
    };
    let diags = dsl::check(&program);
    if diags.is_empty() {
        EXIT_OK
    } else {
        for diag in &diags {
            eprintln!("{}:{}", args.input.display(), diag);
        }
        EXIT_DIAGNOSTICS
    }
}

fn read_input(path: &Path) -> Result<String, u8> {
    std::fs::read_to_string(path).map_err(|err| {
        eprintln!("error: cannot read {}: {}", path.display(), err);
        EXIT_RUNTIME
    })
}

/// Renders the standard-output text for a run at the given verbosity.
fn render_trace(trace: &str, reports: &[String], level: TraceLevel) -> String {
    match level {
        TraceLevel::Quiet => {
            let mut out = String::new();
            for report in reports {
                out.push_str(report);
                out.push('\n');
            }
            out
        }
        TraceLevel::Events => {
            let mut out = String::new();
            for line in trace.lines() {
                if trace_kind(line) != Some("ability") {
                    out.push_str(line);
                    out.push('\n');
                }
            }
            out
        }
        TraceLevel::Full => trace.to_string(),
    }
}

/// The event kind is the second whitespace-separated word of a trace line.
fn trace_kind(line: &str) -> Option<&str> {
    line.split_whitespace().nth(1)
}

fn report_failure(input: &Path, failure: RunFailure, level: TraceLevel) -> u8 {
    match failure {
        RunFailure::Diagnostics(diags) => {
            for diag in &diags {
                eprintln!("{}:{}", input.display(), diag);
            }
            EXIT_DIAGNOSTICS
        }
        RunFailure::Runtime {
            pos,
            error,
            trace,
            reports,
        } => {
            print!("{}", render_trace(&trace, &reports, level));
            eprintln!("{}:{}: error: {}", input.display(), pos, error);
            if error.is_budget() {
                EXIT_BUDGET
            } else {
                EXIT_RUNTIME
            }
        }
    }
}

fn compare_golden(golden: &Path, actual: &str) -> u8 {
    match std::fs::read_to_string(golden) {
        Ok(expected) if expected == actual => EXIT_OK,
        Ok(_) => {
            eprintln!("error: output does not match golden {}", golden.display());
            EXIT_RUNTIME
        }
        Err(err) => {
            eprintln!("error: cannot read golden {}: {}", golden.display(), err);
            EXIT_RUNTIME
        }
    }
}
