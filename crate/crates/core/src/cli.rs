//! Command-line front end: `solve`, `bench` and `validate`.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use crate::bench::Benchmark;
use crate::emit::{emit_program, EmitError, EmitOptions};
use crate::engine::{Engine, EngineError, Mode};
use crate::model::{validate_domain, PlanningDomain, ValidationReport};
use crate::oracle::{check_state, MAX_FLUENTS};
use crate::parser::{parse_domain, ParseError};
use crate::plan::{replay, verdict, ConditionalPlan, ReplayError};
use crate::report::{OracleCheck, RunReport};
use crate::search::{
    default_max_branches, engine_config, find_optimal_plan_with_stats, find_plan_with_stats, SearchOptions,
};

const DEFAULT_MAX_STEPS: usize = 8;

#[derive(Debug, Parser)]
#[command(name = "hpx", version, about = "Conditional planner with sensing and postdiction")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Search for a conditional plan for a domain file.
    Solve {
        file: PathBuf,
        #[command(flatten)]
        plan: PlanArgs,
    },
    /// Generate a benchmark domain and solve it; prints a JSON run report.
    Bench {
        #[arg(value_enum)]
        benchmark: Benchmark,
        #[arg(long)]
        n: usize,
        #[command(flatten)]
        plan: PlanArgs,
    },
    /// Parse and validate a domain file.
    Validate { file: PathBuf },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum PlanFormat {
    #[default]
    Tree,
    Atoms,
    JsonLines,
}

#[derive(Debug, Args)]
pub struct PlanArgs {
    /// Step bound [default: 8 for `solve`, size-dependent for `bench`].
    #[arg(long)]
    pub max_steps: Option<usize>,
    /// Branch bound [default: sensing actions times the step bound].
    #[arg(long)]
    pub max_branches: Option<usize>,
    /// Allow several actions per step.
    #[arg(long)]
    pub concurrent: bool,
    /// Minimize the total number of action occurrences.
    #[arg(long)]
    pub optimal: bool,
    /// Write the domain as a logic program to this path.
    #[arg(long, value_name = "PATH")]
    pub emit_asp: Option<PathBuf>,
    /// Check every derived knowledge atom against possible-worlds semantics.
    #[arg(long)]
    pub oracle_check: bool,
    /// Use static fluents and skip actions that cannot change anything.
    #[arg(long)]
    pub optimize: bool,
    /// Write all atoms of the replayed plan to this path.
    #[arg(long, value_name = "PATH")]
    pub trace: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t)]
    pub format: PlanFormat,
    /// Worker threads for the search.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// Append the run report as a JSON line to this path.
    #[arg(long, value_name = "PATH")]
    pub report: Option<PathBuf>,
}

impl PlanArgs {
    fn mode(&self) -> Mode {
        if self.concurrent {
            Mode::Concurrent
        } else {
            Mode::Sequential
        }
    }

    fn search_options(&self) -> SearchOptions {
        SearchOptions { optimize: self.optimize, jobs: self.jobs.max(1) }
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}:{source}")]
    Parse { path: PathBuf, source: ParseError },
    #[error("{0}")]
    Invalid(ValidationReport),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Emit(#[from] EmitError),
    #[error("{benchmark} needs n >= {min}")]
    BenchSize { benchmark: &'static str, min: usize },
    #[error("internal inconsistency: {0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Internal(_) => 3,
            _ => 2,
        }
    }
}

impl From<ReplayError> for CliError {
    fn from(e: ReplayError) -> Self {
        CliError::Internal(format!("found plan does not replay: {e}"))
    }
}

pub const EXIT_FOUND: i32 = 0;
pub const EXIT_NO_PLAN: i32 = 1;

/// Runs a parsed command line, writing results to `out` and diagnostics to
/// `err`. Returns the process exit code.
pub fn run(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let result = match cli.command {
        Command::Solve { file, plan } => solve(&file, &plan, out),
        Command::Bench { benchmark, n, plan } => bench(benchmark, n, &plan, out),
        Command::Validate { file } => validate(&file, out),
    };
    match result {
        Ok(code) => {
            if code == EXIT_NO_PLAN {
                let _ = writeln!(err, "no plan within the given bounds");
            }
            code
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

fn load(path: &Path) -> Result<PlanningDomain, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
    let d = parse_domain(&text).map_err(|source| CliError::Parse { path: path.to_path_buf(), source })?;
    let report = validate_domain(&d);
    if !report.is_ok() {
        return Err(CliError::Invalid(report));
    }
    Ok(d)
}

fn validate(path: &Path, out: &mut dyn Write) -> Result<i32, CliError> {
    let d = load(path)?;
    let _ = writeln!(out, "ok: {} fluents, {} actions", d.fluents.len(), d.actions.len());
    Ok(EXIT_FOUND)
}

fn solve(path: &Path, args: &PlanArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let d = load(path)?;
    let name = path.file_stem().map_or_else(|| "domain".to_string(), |s| s.to_string_lossy().into_owned());
    let max_steps = args.max_steps.unwrap_or(DEFAULT_MAX_STEPS);
    let (report, plan) = plan_and_check(&d, name, max_steps, args)?;
    if let Some(plan) = &plan {
        let text = match args.format {
            PlanFormat::Tree => plan.render_tree(),
            PlanFormat::Atoms => crate::plan::render_atoms(&plan.extract_atoms()),
            PlanFormat::JsonLines => plan.to_json_lines(&d),
        };
        let _ = out.write_all(text.as_bytes());
    }
    finish(&report, args)
}

fn bench(benchmark: Benchmark, n: usize, args: &PlanArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let d =
        benchmark.generate(n).ok_or(CliError::BenchSize { benchmark: benchmark.name(), min: benchmark.min_size() })?;
    let max_steps = args.max_steps.unwrap_or_else(|| benchmark.max_steps(n));
    let (mut report, _) = plan_and_check(&d, benchmark.name().to_string(), max_steps, args)?;
    report.size = Some(n);
    let _ = writeln!(out, "{}", report.to_json_line());
    finish(&report, args)
}

fn finish(report: &RunReport, args: &PlanArgs) -> Result<i32, CliError> {
    if let Some(path) = &args.report {
        let mut f = std::fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|source| CliError::Io { path: path.clone(), source })?;
        writeln!(f, "{}", report.to_json_line()).map_err(|source| CliError::Io { path: path.clone(), source })?;
    }
    if let Some(OracleCheck::Checked(s)) = &report.oracle {
        if s.violations > 0 {
            return Err(CliError::Internal(format!("{} knowledge atoms are not entailed by the oracle", s.violations)));
        }
    }
    Ok(if report.plan_found { EXIT_FOUND } else { EXIT_NO_PLAN })
}

/// Searches, replays the plan through a fresh engine, checks it reaches the
/// goals and optionally compares its knowledge with the oracle.
fn plan_and_check(
    d: &PlanningDomain,
    name: String,
    max_steps: usize,
    args: &PlanArgs,
) -> Result<(RunReport, Option<ConditionalPlan>), CliError> {
    let max_branches = args.max_branches.unwrap_or_else(|| default_max_branches(d, max_steps));
    let mode = args.mode();
    let options = args.search_options();
    let mut report = RunReport::new(name, max_steps, max_branches, mode);

    if let Some(path) = &args.emit_asp {
        let program = emit_program(d, max_steps, max_branches, mode, EmitOptions { optimize: args.optimize })?;
        write_file(path, &program)?;
    }

    let start = Instant::now();
    let (plan, stats) = if args.optimal {
        find_optimal_plan_with_stats(d, max_steps, max_branches, mode, options)?
    } else {
        find_plan_with_stats(d, max_steps, max_branches, mode, options)?
    };
    report.set_wall_time(start.elapsed());
    report.search_nodes = stats.nodes;

    let Some(plan) = plan else { return Ok((report, None)) };
    report.plan_found = true;
    report.plan = Some(plan.to_compact());
    report.occ_count = Some(plan.occ_count());
    report.horizon = Some(plan.depth());

    let engine = Engine::new(d, engine_config(max_steps, max_branches, mode, SearchOptions::default()))?;
    let state = replay(&engine, &plan)?;
    let problems = engine.check_invariants(&state);
    if !problems.is_empty() {
        return Err(CliError::Internal(problems.join("; ")));
    }
    if !verdict(&engine, &state).plan_found {
        return Err(CliError::Internal("found plan does not reach the goals on replay".into()));
    }
    report.atom_counts = state.atom_counts();
    if let Some(path) = &args.trace {
        write_file(path, &engine.trace(&state))?;
    }
    if args.oracle_check {
        report.oracle = Some(if d.fluents.len() > MAX_FLUENTS {
            OracleCheck::Skipped(format!("{} fluents exceed the oracle's limit of {MAX_FLUENTS}", d.fluents.len()))
        } else {
            let r = check_state(d, &engine, &state).map_err(|e| CliError::Internal(format!("oracle: {e}")))?;
            OracleCheck::Checked((&r).into())
        });
    }
    Ok((report, Some(plan)))
}
