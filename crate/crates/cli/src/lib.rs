//! The `dss` command line.
//!
//! Exit codes:
//!
//! | code | meaning |
//! |---|---|
//! | 0 | success |
//! | 1 | the program, knowledge base, criteria or question bank is unusable (diagnostics on stderr) |
//! | 2 | bad input data, a runtime error, an I/O failure, or a usage error |

use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use dss_core::assessment::{QuestionBank, Subject};
use dss_core::dsl::{parse_source, Program};
use dss_core::engine::{Session, SessionIo};
use dss_core::kb::{self, assemble_kb, compile_criteria_text, evaluate_input, EvaluateError, KbError};
use dss_service::{Config, StartupError};

#[derive(Debug, Parser)]
#[command(name = "dss", version, about = "Rule-based student advisement")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run rule programs directly.
    #[command(subcommand)]
    Engine(EngineCommand),
    /// Evaluate one student record and write the advisement report.
    Advise(AdviseArgs),
    /// Work with knowledge base and criteria files.
    #[command(subcommand)]
    Kb(KbCommand),
    /// Work with question banks.
    #[command(subcommand)]
    Bank(BankCommand),
    /// Start the HTTP service.
    Serve(ServeArgs),
}

#[derive(Debug, Subcommand)]
pub enum EngineCommand {
    /// Load the files, reset, and run to quiescence.
    Run {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        /// Directory that `open` paths are relative to.
        #[arg(long, default_value = ".")]
        input_dir: PathBuf,
        /// Stop after this many rule firings.
        #[arg(long)]
        max_fires: Option<usize>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    /// The report file exactly as the knowledge base writes it.
    Raw,
    Json,
}

#[derive(Debug, Args)]
pub struct KbArgs {
    /// Extra rule files (.clp) or criteria files (.ini), loaded in order.
    #[arg(long = "kb")]
    pub kb: Vec<PathBuf>,
    /// Leave out the shipped template, loader and Mathematics rule.
    #[arg(long)]
    pub no_shipped_kb: bool,
}

impl KbArgs {
    fn load(&self) -> Result<Program, CliError> {
        assemble_kb(&self.kb, !self.no_shipped_kb).map_err(kb_error)
    }
}

#[derive(Debug, Args)]
pub struct AdviseArgs {
    /// Student record: 13 whitespace-separated fields.
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub kb: KbArgs,
    #[arg(long, value_enum, default_value_t = Format::Raw)]
    pub format: Format,
}

#[derive(Debug, Subcommand)]
pub enum KbCommand {
    /// Compile faculty criteria to rules.
    Compile {
        criteria: PathBuf,
        /// Output file, or `-` for standard output.
        #[arg(long)]
        out: PathBuf,
    },
    /// Load and validate a knowledge base.
    Check {
        #[command(flatten)]
        kb: KbArgs,
    },
}

#[derive(Debug, Subcommand)]
pub enum BankCommand {
    /// Parse a bank and check it can fill a full test.
    Check { file: PathBuf },
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Use this draw seed for every session, overriding the config.
    #[arg(long)]
    pub seed: Option<u64>,
}

/// A failed command, by exit-code class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CliError {
    /// Program, KB, criteria or bank problems.
    Diagnostics(String),
    /// The engine failed while running.
    Runtime(String),
    /// Missing or malformed input, unwritable output.
    Input(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Diagnostics(_) => 1,
            CliError::Runtime(_) | CliError::Input(_) => 2,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Diagnostics(m) | CliError::Runtime(m) | CliError::Input(m) => m,
        }
    }
}

fn kb_error(e: KbError) -> CliError {
    CliError::Diagnostics(e.to_string())
}

fn read_text(path: &Path, class: fn(String) -> CliError) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| class(format!("{}: {e}", path.display())))
}

fn write_out(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let result = if path == Path::new("-") {
        std::io::stdout().write_all(bytes)
    } else {
        std::fs::write(path, bytes)
    };
    result.map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn engine_run(files: &[PathBuf], input_dir: &Path, max_fires: Option<usize>) -> Result<(), CliError> {
    let mut sources = Vec::new();
    for file in files {
        let text = read_text(file, CliError::Diagnostics)?;
        // Report syntax errors against the right file before combining.
        parse_source(&text).map_err(|e| CliError::Diagnostics(format!("{}:{e}", file.display())))?;
        sources.push((file.display().to_string(), text));
    }
    let program = Arc::new(kb::load_kb_sources(&sources).map_err(kb_error)?);
    let mut session =
        Session::reset(program, SessionIo::disk(input_dir)).map_err(|e| CliError::Runtime(e.to_string()))?;
    let fires = session.run(max_fires).map_err(|e| CliError::Runtime(e.to_string()))?;
    eprintln!("{fires} {}", if fires == 1 { "rule fired" } else { "rules fired" });
    Ok(())
}

fn advise(args: &AdviseArgs) -> Result<Vec<String>, CliError> {
    let input = read_text(&args.input, CliError::Input)?;
    let kb = Arc::new(args.kb.load()?);
    let advice = evaluate_input(&input, &kb).map_err(|e| match e {
        EvaluateError::MalformedRecord(_) | EvaluateError::Io(_) => {
            CliError::Input(format!("{}: {e}", args.input.display()))
        }
        EvaluateError::Engine(_) | EvaluateError::Reset(_) => CliError::Runtime(e.to_string()),
        EvaluateError::MissingOutput | EvaluateError::Report(_) => CliError::Diagnostics(e.to_string()),
    })?;
    let bytes = match args.format {
        Format::Raw => advice.raw.clone(),
        Format::Json => {
            let mut json = serde_json::to_vec_pretty(&advice.report).expect("reports serialize");
            json.push(b'\n');
            json
        }
    };
    write_out(&args.out, &bytes)?;
    Ok(advice.report.summary())
}

fn kb_compile(criteria: &Path, out: &Path) -> Result<(), CliError> {
    let text = read_text(criteria, CliError::Diagnostics)?;
    let rules = compile_criteria_text(&text)
        .map_err(|e| CliError::Diagnostics(format!("{}: {e}", criteria.display())))?;
    if rules.is_empty() {
        eprintln!("warning: {} defines no faculties", criteria.display());
    } else {
        // The emitted rules must load next to the shipped template.
        let mut sources: Vec<(String, String)> =
            kb::DEFAULT_SOURCES[..2].iter().map(|(n, s)| (n.to_string(), s.to_string())).collect();
        sources.push((out.display().to_string(), rules.clone()));
        kb::load_kb_sources(&sources).map_err(kb_error)?;
    }
    write_out(out, rules.as_bytes())
}

fn bank_check(file: &Path) -> Result<Vec<String>, CliError> {
    let bank = QuestionBank::load(file).map_err(|e| CliError::Diagnostics(format!("{}: {e}", file.display())))?;
    let mut lines: Vec<String> = Subject::ALL
        .iter()
        .map(|&s| format!("{s}: {} (need {})", bank.count(s), s.required()))
        .collect();
    lines.push(format!("{} questions", bank.questions().len()));
    Ok(lines)
}

fn serve(args: &ServeArgs) -> Result<(), CliError> {
    let mut config = Config::load(&args.config).map_err(|e| CliError::Diagnostics(e.to_string()))?;
    if args.seed.is_some() {
        config.seed = args.seed;
    }
    let _ = tracing_subscriber::fmt()
        .json()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env()
                .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("info")),
        )
        .try_init();
    let runtime = tokio::runtime::Runtime::new().map_err(|e| CliError::Runtime(e.to_string()))?;
    runtime.block_on(dss_service::serve(config)).map_err(|e| match e {
        StartupError::Config(_) | StartupError::Bank(_) | StartupError::Kb(_) => {
            CliError::Diagnostics(e.to_string())
        }
        StartupError::Store(_) | StartupError::Io(_) => CliError::Runtime(e.to_string()),
    })
}

/// Runs a parsed command; lines for standard output are printed as they come.
pub fn execute(cli: &Cli) -> Result<(), CliError> {
    let print = |lines: Vec<String>| lines.iter().for_each(|l| println!("{l}"));
    match &cli.command {
        Command::Engine(EngineCommand::Run { files, input_dir, max_fires }) => {
            engine_run(files, input_dir, *max_fires)
        }
        Command::Advise(args) => advise(args).map(print),
        Command::Kb(KbCommand::Compile { criteria, out }) => kb_compile(criteria, out),
        Command::Kb(KbCommand::Check { kb }) => {
            let program = kb.load()?;
            println!("ok: {} templates, {} rules", program.templates().count(), program.rules().count());
            Ok(())
        }
        Command::Bank(BankCommand::Check { file }) => bank_check(file).map(print),
        Command::Serve(args) => serve(args),
    }
}

/// Parses `args` (program name first) and runs; returns the exit code.
pub fn run<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.exit_code()
        }
    }
}
