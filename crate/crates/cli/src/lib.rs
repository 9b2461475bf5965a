//! The `npls` command: check, run, repl and scenario.
//!
//! Exit codes: 0 success, 1 parse or config error, 2 I/O error,
//! 3 unmet script expectation.

pub mod repl;
pub mod script;

use std::fs::{self, File};
use std::io::{self, BufRead, Write};
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Parser, Subcommand};
use npls::engine::{Engine, ProgramError, TraceWriter};
use script::{parse_script, RunError, Runner};

#[derive(Debug, Parser)]
#[command(name = "npls", version, about = "Run NPL(s) normative programs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse and load a program, reporting the first problem.
    Check { program: PathBuf },
    /// Replay a script of assert/retract/tick/expect directives.
    Run {
        program: PathBuf,
        script: PathBuf,
        /// Write every event as a JSON line.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Sleep for each tick's logical duration.
        #[arg(long)]
        real_time: bool,
        #[arg(long)]
        max_iterations: Option<usize>,
    },
    /// Interactive session over one engine.
    Repl {
        program: PathBuf,
        #[arg(long)]
        max_iterations: Option<usize>,
    },
    /// Run a bundled scenario and print its summary.
    Scenario {
        /// Only `myjoghurt` exists.
        name: String,
        /// TOML config; defaults apply to missing fields.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Overrides the config's seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        trace: Option<PathBuf>,
    },
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Invalid(String),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("{0}")]
    Expectation(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Invalid(_) => 1,
            CliError::Io { .. } => 2,
            CliError::Expectation(_) => 3,
        }
    }
}

fn io_at(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.to_path_buf(), source }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(io_at(path))
}

fn load(path: &Path, max_iterations: Option<usize>) -> Result<Engine, CliError> {
    let src = read(path)?;
    let mut engine = Engine::from_source(&src).map_err(|e| match e {
        ProgramError::Parse(p) => CliError::Invalid(format!("{}:{}:{}: {}", path.display(), p.line, p.column, p.message)),
        ProgramError::Load(l) => CliError::Invalid(format!("{}: {l}", path.display())),
    })?;
    if let Some(n) = max_iterations {
        if n == 0 {
            return Err(CliError::Invalid("--max-iterations must be at least 1".into()));
        }
        engine.set_max_iterations(n);
    }
    Ok(engine)
}

fn create(path: &Path) -> Result<TraceWriter<File>, CliError> {
    File::create(path).map(TraceWriter::new).map_err(io_at(path))
}

/// Runs `cli`; everything meant for the user goes to `out`.
pub fn execute(cli: &Cli, stdin: impl BufRead, out: &mut impl Write, prompt: bool) -> Result<(), CliError> {
    let stdout = |e| CliError::Io { path: "<stdout>".into(), source: e };
    match &cli.command {
        Command::Check { program } => {
            load(program, None)?;
            writeln!(out, "ok").map_err(stdout)
        }
        Command::Run { program, script, trace, real_time, max_iterations } => {
            let mut engine = load(program, *max_iterations)?;
            let lines = parse_script(&read(script)?).map_err(|e| CliError::Invalid(format!("{}: {e}", script.display())))?;
            let mut writer = trace.as_deref().map(create).transpose()?;
            let mut runner = Runner::new(&mut engine);
            let result = runner.run(
                &lines,
                |events| match writer.as_mut() {
                    Some(w) => w.write_events(events),
                    None => Ok(()),
                },
                |ms| {
                    if *real_time {
                        std::thread::sleep(Duration::from_millis(ms));
                    }
                },
            );
            let n = runner.events().len();
            match result {
                Ok(()) => writeln!(out, "ok: {n} events").map_err(stdout),
                Err(RunError::Trace(e)) => Err(io_at(trace.as_deref().unwrap_or(Path::new("<trace>")))(e)),
                Err(e @ RunError::Unmet { .. }) => Err(CliError::Expectation(format!("{}: {e}", script.display()))),
                Err(e @ RunError::Engine { .. }) => Err(CliError::Invalid(format!("{}: {e}", script.display()))),
            }
        }
        Command::Repl { program, max_iterations } => {
            let mut engine = load(program, *max_iterations)?;
            if prompt {
                write!(out, "> ").and_then(|()| out.flush()).map_err(stdout)?;
            }
            repl::repl(&mut engine, stdin, out, prompt).map_err(stdout)
        }
        Command::Scenario { name, config, seed, trace } => {
            if name != "myjoghurt" {
                return Err(CliError::Invalid(format!("unknown scenario '{name}' (known: myjoghurt)")));
            }
            let mut cfg = match config {
                Some(path) => myjoghurt::ScenarioConfig::from_toml(&read(path)?)
                    .map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))?,
                None => myjoghurt::ScenarioConfig::default(),
            };
            if let Some(s) = seed {
                cfg.seed = *s;
            }
            let sink: Option<Box<dyn Write>> = match trace {
                Some(path) => Some(Box::new(File::create(path).map_err(io_at(path))?)),
                None => None,
            };
            let report = myjoghurt::run_scenario(&cfg, sink).map_err(|e| match e {
                myjoghurt::ScenarioError::Agent(npls::runtime::AgentError::Trace(io)) => {
                    io_at(trace.as_deref().unwrap_or(Path::new("<trace>")))(io)
                }
                other => CliError::Invalid(other.to_string()),
            })?;
            write!(out, "{}", report.summary.to_toml()).map_err(stdout)
        }
    }
}
