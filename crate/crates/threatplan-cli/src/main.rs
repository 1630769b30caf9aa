//! `threatplan`: validate threat models, score their risk, and plan
//! countermeasure spending from the command line.
//!
//! Reports go to stdout; findings and diagnostics go to stderr (except
//! for `validate`, whose findings are its report). Exit codes: 0 on
//! success, 1 when the model has validation errors (or warnings under
//! `--strict`), 2 for usage and I/O problems, 3 when no countermeasure
//! set can reach a requested residual bound.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use threatplan::{
    analyze, decimal4, format_ratio, parse_model, parse_ratio, render_report, select_with,
    EngineError, Finding, FindingCode, Model, Money, RenderFormat, SelectError, SelectionMode,
    Severity,
};

const EXIT_FINDINGS: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_INFEASIBLE: u8 = 3;

#[derive(Parser)]
#[command(name = "threatplan", version, about = "Threat-tree risk analysis and countermeasure planning")]
struct Cli {
    /// Output format for reports and validation findings.
    #[arg(long, global = true, value_enum, default_value_t = FormatArg::Text)]
    format: FormatArg,

    /// Write the report to a file instead of stdout.
    #[arg(long, global = true, value_name = "FILE")]
    output: Option<PathBuf>,

    /// Treat warnings as errors.
    #[arg(long, global = true)]
    strict: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a model file and report all findings.
    Validate { file: PathBuf },
    /// Score every threat and print the risk report.
    Analyze { file: PathBuf },
    /// Choose countermeasures under a budget or a residual-risk ceiling.
    Select {
        file: PathBuf,

        /// Spend at most this much (minor currency units).
        #[arg(long, value_name = "AMOUNT")]
        budget: Option<u64>,

        /// Leave at most this much residual risk (integer, fraction
        /// like 7/2, or decimal).
        #[arg(long, value_name = "RATIO")]
        max_residual: Option<String>,

        /// Treat these countermeasures as already in place, at no cost.
        #[arg(long, value_name = "IDS", value_delimiter = ',')]
        assume: Vec<String>,

        /// Use the greedy heuristic even when the exact solver would run.
        #[arg(long)]
        greedy: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Text,
    Json,
    Csv,
}

impl From<FormatArg> for RenderFormat {
    fn from(f: FormatArg) -> RenderFormat {
        match f {
            FormatArg::Text => RenderFormat::Text,
            FormatArg::Json => RenderFormat::Json,
            FormatArg::Csv => RenderFormat::Csv,
        }
    }
}

struct Failure {
    code: u8,
    message: String,
}

fn fail(code: u8, message: impl Into<String>) -> Failure {
    Failure {
        code,
        message: message.into(),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            if !failure.message.is_empty() {
                eprintln!("{}", failure.message);
            }
            ExitCode::from(failure.code)
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let format = cli.format.into();
    match cli.command {
        Command::Validate { file } => cmd_validate(&file, format, cli.strict, &cli.output),
        Command::Analyze { file } => cmd_analyze(&file, format, cli.strict, &cli.output),
        Command::Select {
            file,
            budget,
            max_residual,
            assume,
            greedy,
        } => cmd_select(
            &file,
            format,
            cli.strict,
            &cli.output,
            budget,
            max_residual,
            &assume,
            greedy,
        ),
    }
}

fn read_file(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path)
        .map_err(|e| fail(EXIT_USAGE, format!("cannot read {}: {e}", path.display())))
}

/// Writes a rendered report to `--output` or stdout.
fn emit(payload: &str, output: &Option<PathBuf>) -> Result<(), Failure> {
    match output {
        Some(path) => std::fs::write(path, payload)
            .map_err(|e| fail(EXIT_USAGE, format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{payload}");
            Ok(())
        }
    }
}

fn eprint_findings(findings: &[Finding]) {
    for finding in findings {
        eprintln!("{finding}");
    }
}

fn cmd_validate(
    file: &Path,
    format: RenderFormat,
    strict: bool,
    output: &Option<PathBuf>,
) -> Result<(), Failure> {
    let text = read_file(file)?;
    let findings = match parse_model(&text) {
        Ok(parsed) => parsed.warnings,
        Err(findings) => findings,
    };
    emit(&render_report(&findings, format), output)?;
    let errors = findings.iter().any(|f| f.severity == Severity::Error);
    if errors || (strict && !findings.is_empty()) {
        // The findings are the report; no second message needed.
        return Err(fail(EXIT_FINDINGS, ""));
    }
    Ok(())
}

/// Parses and validates for `analyze`/`select`: errors abort with the
/// findings on stderr, warnings pass through to stderr (and abort too
/// under `--strict`).
fn load_model(file: &Path, strict: bool) -> Result<Model, Failure> {
    let text = read_file(file)?;
    match parse_model(&text) {
        Ok(parsed) => {
            eprint_findings(&parsed.warnings);
            if strict && !parsed.warnings.is_empty() {
                Err(fail(
                    EXIT_FINDINGS,
                    format!("strict mode: {} warning(s) treated as errors", parsed.warnings.len()),
                ))
            } else {
                Ok(parsed.model)
            }
        }
        Err(findings) => {
            eprint_findings(&findings);
            Err(fail(EXIT_FINDINGS, ""))
        }
    }
}

fn cmd_analyze(
    file: &Path,
    format: RenderFormat,
    strict: bool,
    output: &Option<PathBuf>,
) -> Result<(), Failure> {
    let model = load_model(file, strict)?;
    let report = analyze(&model).expect("a model that passed validation analyzes cleanly");
    emit(&render_report(&report, format), output)
}

#[allow(clippy::too_many_arguments)]
fn cmd_select(
    file: &Path,
    format: RenderFormat,
    strict: bool,
    output: &Option<PathBuf>,
    budget: Option<u64>,
    max_residual: Option<String>,
    assume: &[String],
    greedy: bool,
) -> Result<(), Failure> {
    let mode = match (budget, max_residual) {
        (Some(amount), None) => SelectionMode::Budget(Money::new(amount)),
        (None, Some(raw)) => {
            let bound = parse_ratio(&raw).ok_or_else(|| {
                fail(
                    EXIT_USAGE,
                    format!(
                        "invalid --max-residual \"{raw}\": expected a non-negative integer, \
                         fraction like 7/2, or decimal"
                    ),
                )
            })?;
            SelectionMode::Assurance(bound)
        }
        _ => {
            return Err(fail(
                EXIT_USAGE,
                "select requires exactly one of --budget or --max-residual",
            ))
        }
    };

    let model = load_model(file, strict)?;
    let assumed: Vec<&str> = assume.iter().map(String::as_str).collect();
    match select_with(&model, &mode, &assumed, greedy) {
        Ok(plan) => emit(&render_report(&plan, format), output),
        Err(SelectError::Infeasible { best_residual }) => Err(fail(
            EXIT_INFEASIBLE,
            format!(
                "infeasible: no countermeasure set gets residual risk under {}; \
                 best achievable is {} ({})",
                match &mode {
                    SelectionMode::Assurance(bound) => format_ratio(bound),
                    SelectionMode::Budget(_) => unreachable!("budget mode is always feasible"),
                },
                format_ratio(&best_residual),
                decimal4(&best_residual)
            ),
        )),
        Err(SelectError::Engine(EngineError::UnknownCountermeasure(id))) => {
            let finding = Finding::new(
                FindingCode::BadRef,
                "--assume",
                format!("no countermeasure has id \"{id}\""),
            );
            eprintln!("{finding}");
            Err(fail(EXIT_FINDINGS, ""))
        }
        Err(other) => Err(fail(EXIT_USAGE, other.to_string())),
    }
}
