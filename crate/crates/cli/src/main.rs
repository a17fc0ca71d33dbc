//! `pimp`: headless access to the PIM prototyper engine.
//!
//! Exit status is 0 on success, 1 when the input has errors (or, for
//! `analyze`, unreachable states or a failed gate) and 2 on usage errors.
//! Diagnostics go to stderr as `error[Code]: message`.

use std::fs;
use std::io::{self, Read, Write};
use std::net::IpAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Parser, Subcommand, ValueEnum};
use pimp_core::io::{export_dot, export_pim_text, load_project, to_canonical_json, write_atomic};
use pimp_core::{
    analyze_with_gate, convert, generate_tests, validate_pim, ConversionReport, Project,
    SimulationSession, TraceEvent, TraceKind, Violation, Warning,
};
use serde::Serialize;

#[derive(Parser)]
#[command(
    name = "pimp",
    version,
    about = "Turn clickable mock-ups into presentation interaction models and analyse them"
)]
struct Cli {
    /// Output format for reports.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Check a project file and the PIM it converts to.
    Validate { project: PathBuf },
    /// Convert a project to PIM text (or, with --format json, the full conversion report).
    Convert {
        project: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Export the converted PIM as a Graphviz digraph.
    ExportDot {
        project: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Report unreachable states, dead ends and dangling hotspots.
    Analyze {
        project: PathBuf,
        /// State every path to --target must pass through.
        #[arg(long, requires = "target")]
        gate: Option<String>,
        #[arg(long, requires = "gate")]
        target: Option<String>,
    },
    /// Generate abstract tests covering every reachable transition.
    GenTests {
        project: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Fire a sequence of I-behaviours from the initial state.
    Simulate {
        project: PathBuf,
        /// Comma-separated behaviours, e.g. I_Settings,I_Home.
        #[arg(long, value_delimiter = ',', default_value = "")]
        trace: Vec<String>,
    },
    /// Run the HTTP API.
    Serve {
        #[arg(long, env = "PIMP_HOST", default_value = "127.0.0.1")]
        host: IpAddr,
        #[arg(long, env = "PIMP_PORT", default_value_t = 8080)]
        port: u16,
        #[arg(long, env = "PIMP_DATA_DIR", default_value = "pimp-data")]
        data_dir: PathBuf,
        #[arg(long, env = "PIMP_MAX_IMAGE_BYTES", default_value_t = 10 * 1024 * 1024)]
        max_image_bytes: usize,
        /// Minutes before an idle simulation session is dropped.
        #[arg(long, default_value_t = 30)]
        session_idle_minutes: u64,
    },
}

/// A failure reported as `error[code]: message`.
struct Failure {
    code: String,
    message: String,
    path: Option<String>,
}

impl Failure {
    fn new(code: &str, message: impl ToString) -> Self {
        Self {
            code: code.to_owned(),
            message: message.to_string(),
            path: None,
        }
    }

    fn at(mut self, path: Option<String>) -> Self {
        self.path = path;
        self
    }
}

macro_rules! impl_from_error {
    ($($ty:ty),*) => {$(
        impl From<$ty> for Failure {
            fn from(e: $ty) -> Self {
                Failure::new(e.code(), &e)
            }
        }
    )*};
}
impl_from_error!(
    pimp_core::AnalysisError,
    pimp_core::SimulatorError,
    pimp_service::ServeError
);

impl From<pimp_core::ConvertError> for Failure {
    fn from(e: pimp_core::ConvertError) -> Self {
        Failure::new(e.code(), &e).at(e.path())
    }
}

impl From<pimp_core::io::FormatError> for Failure {
    fn from(e: pimp_core::io::FormatError) -> Self {
        Failure::new(e.code(), &e).at(e.path())
    }
}

/// Outcome of a command that ran to completion: 0 or 1.
type Outcome = Result<bool, Failure>;

fn read_input(path: &Path) -> Result<Vec<u8>, Failure> {
    let res = if path == Path::new("-") {
        let mut buf = Vec::new();
        io::stdin().read_to_end(&mut buf).map(|_| buf)
    } else {
        fs::read(path)
    };
    res.map_err(|e| Failure::new("IoError", format!("{}: {e}", path.display())))
}

fn load(path: &Path) -> Result<Project, Failure> {
    Ok(load_project(&read_input(path)?)?)
}

fn emit(output: Option<&Path>, bytes: &[u8]) -> Result<(), Failure> {
    match output {
        Some(path) if path != Path::new("-") => write_atomic(path, bytes)
            .map_err(|e| Failure::new("IoError", format!("{}: {e}", path.display()))),
        _ => {
            let mut out = io::stdout().lock();
            out.write_all(bytes)
                .and_then(|_| out.flush())
                .map_err(|e| Failure::new("IoError", e))
        }
    }
}

fn print_warnings(warnings: &[Warning]) {
    for w in warnings {
        eprintln!("warning[{:?}]: {} ({})", w.code, w.message, w.path);
    }
}

#[derive(Serialize)]
struct Validation {
    valid: bool,
    violations: Vec<Violation>,
    warnings: Vec<Warning>,
}

fn validate(format: Format, path: &Path) -> Outcome {
    let project = load(path)?;
    let report = convert(&project)?;
    let violations = validate_pim(&report.pim);
    let valid = violations.is_empty();
    match format {
        Format::Json => emit(
            None,
            &to_canonical_json(&Validation {
                valid,
                violations,
                warnings: report.warnings,
            }),
        )?,
        Format::Text => {
            print_warnings(&report.warnings);
            for v in &violations {
                eprintln!("error[{}]: {} ({})", v.code, v.message, v.path);
            }
            let hotspots: usize = project.screens().iter().map(|s| s.hotspots.len()).sum();
            let text = format!(
                "{}: {} screen(s), {} hotspot(s), {} transition(s), {} warning(s)\n",
                if valid { "ok" } else { "invalid" },
                project.screens().len(),
                hotspots,
                report.pim.transitions.len(),
                report.warnings.len(),
            );
            emit(None, text.as_bytes())?;
        }
    }
    Ok(valid)
}

fn convert_cmd(format: Format, path: &Path, output: Option<&Path>) -> Outcome {
    let report: ConversionReport = convert(&load(path)?)?;
    match format {
        Format::Json => emit(output, &to_canonical_json(&report))?,
        Format::Text => {
            print_warnings(&report.warnings);
            emit(output, &export_pim_text(&report.pim)?)?;
        }
    }
    Ok(true)
}

fn analyze(format: Format, path: &Path, gate: Option<(&str, &str)>) -> Outcome {
    let conversion = convert(&load(path)?)?;
    let outcome = analyze_with_gate(&conversion, gate)?;
    match format {
        Format::Json => emit(None, &to_canonical_json(&outcome))?,
        Format::Text => {
            let r = &outcome.report;
            let list = |set: &mut dyn Iterator<Item = &String>| {
                let v: Vec<_> = set.map(String::as_str).collect();
                if v.is_empty() {
                    "(none)".to_owned()
                } else {
                    v.join(", ")
                }
            };
            let mut text = String::new();
            text += &format!("reachable:   {}\n", list(&mut r.reachable.iter()));
            text += &format!("unreachable: {}\n", list(&mut r.unreachable.iter()));
            text += &format!("dead ends:   {}\n", list(&mut r.dead_ends.iter()));
            for d in &r.dangling_hotspots {
                text += &format!("dangling hotspot {} on screen {}\n", d.hotspot, d.screen);
            }
            if let Some(g) = &outcome.gate_check {
                let verdict = match (g.holds, g.vacuous) {
                    (true, true) => "holds (target unreachable)",
                    (true, false) => "holds",
                    (false, _) => "FAILS",
                };
                text += &format!(
                    "every path to {} passes through {}: {verdict}\n",
                    g.target, g.gate
                );
            }
            emit(None, text.as_bytes())?;
        }
    }
    Ok(outcome.passed())
}

fn gen_tests(format: Format, path: &Path, output: Option<&Path>) -> Outcome {
    let suite = generate_tests(&convert(&load(path)?)?.pim)?;
    let bytes = match format {
        Format::Json => to_canonical_json(&suite),
        Format::Text => {
            let mut text = String::new();
            for t in &suite.tests {
                text += &t.id;
                text += ": ";
                text += &t.steps[0].state;
                for s in &t.steps {
                    text += &format!(" --{}--> {}", s.behaviour, s.next);
                }
                text.push('\n');
            }
            for k in &suite.uncovered {
                text += &format!("uncovered: {} --{}-->\n", k.source, k.behaviour);
            }
            text.into_bytes()
        }
    };
    emit(output, &bytes)?;
    Ok(true)
}

#[derive(Serialize)]
struct SimulationResult<'a> {
    final_state: &'a str,
    trace: &'a [TraceEvent],
}

fn simulate(format: Format, path: &Path, trace: &[String]) -> Outcome {
    let project = load(path)?;
    let mut session = SimulationSession::start(&project)?;
    for behaviour in trace.iter().filter(|b| !b.is_empty()) {
        session.step(behaviour.trim())?;
    }
    let result = SimulationResult {
        final_state: session.current(),
        trace: session.trace(),
    };
    match format {
        Format::Json => emit(None, &to_canonical_json(&result))?,
        Format::Text => {
            let mut text = String::new();
            for e in result.trace {
                if e.kind == TraceKind::Navigate {
                    let b = e.behaviour.as_deref().unwrap_or_default();
                    text += &format!("{}. {} --{b}--> {}\n", e.seq, e.source, e.result);
                }
            }
            text += &format!("final state: {}\n", result.final_state);
            emit(None, text.as_bytes())?;
        }
    }
    Ok(true)
}

async fn shutdown_signal() {
    let ctrl_c = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    #[cfg(unix)]
    let term = async {
        match tokio::signal::unix::signal(tokio::signal::unix::SignalKind::terminate()) {
            Ok(mut s) => {
                s.recv().await;
            }
            Err(_) => std::future::pending().await,
        }
    };
    #[cfg(not(unix))]
    let term = std::future::pending::<()>();
    tokio::select! {
        _ = ctrl_c => {},
        _ = term => {},
    }
}

fn serve(config: pimp_service::Config) -> Outcome {
    tracing_subscriber::fmt().with_writer(io::stderr).init();
    let runtime = tokio::runtime::Runtime::new().map_err(|e| Failure::new("IoError", e))?;
    runtime.block_on(async {
        let server = pimp_service::serve(config).await?;
        eprintln!("listening on http://{}", server.local_addr());
        server
            .run_until(shutdown_signal())
            .await
            .map_err(|e| Failure::new("IoError", e))
    })?;
    Ok(true)
}

fn run(cli: Cli) -> Outcome {
    let format = cli.format;
    match cli.command {
        Command::Validate { project } => validate(format, &project),
        Command::Convert { project, output } => convert_cmd(format, &project, output.as_deref()),
        Command::ExportDot { project, output } => {
            let pim = convert(&load(&project)?)?.pim;
            emit(output.as_deref(), &export_dot(&pim)?)?;
            Ok(true)
        }
        Command::Analyze {
            project,
            gate,
            target,
        } => {
            let gate = gate.as_deref().zip(target.as_deref());
            analyze(format, &project, gate)
        }
        Command::GenTests { project, output } => gen_tests(format, &project, output.as_deref()),
        Command::Simulate { project, trace } => simulate(format, &project, &trace),
        Command::Serve {
            host,
            port,
            data_dir,
            max_image_bytes,
            session_idle_minutes,
        } => serve(pimp_service::Config {
            host,
            port,
            data_dir,
            max_image_bytes,
            session_idle: Duration::from_secs(session_idle_minutes * 60),
        }),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(f) => {
            eprintln!("error[{}]: {}", f.code, f.message);
            if let Some(path) = f.path {
                eprintln!("  at {path}");
            }
            ExitCode::from(1)
        }
    }
}
