//! Batch front end: named verification suites and scenario experiments with JSON or CSV reports.
//!
//! Exit status is 0 when every check passes, 1 when some check fails and 2 for usage or
//! library errors.

use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use thiserror::Error;

pub mod report;
pub mod suites;

pub use report::{Check, Report, Table, CHECKS_CSV_HEADER, SCHEMA_VERSION};
use suites::*;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] ncmech::Error),
    #[error("cannot write {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

#[derive(ValueEnum, Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Parser, Debug)]
#[command(name = "ncmech", version, about = "Verification suites for noncommutative symplectic mechanics")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value = "json")]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Bracket and cochain-calculus identities on a matrix superalgebra.
    Verify(VerifyArgs),
    /// Existence of a product symplectic structure for two factors.
    Coupling(CouplingArgs),
    /// GNS representations of vector, tracial and mixed states.
    Gns(GnsArgs),
    /// The unique state on G3 and the failure of complete classification.
    Grassmann(GrassmannArgs),
    /// Star product, Moyal bracket and their classical limit.
    MoyalLimit(MoyalArgs),
    /// Stern-Gerlach order-of-magnitude estimate.
    SternGerlach(SternGerlachArgs),
    /// Interference suppression for a measurement interaction.
    Decoherence(DecoherenceArgs),
    /// Heisenberg/Liouville duality along Hamiltonian flows.
    Evolve(EvolveArgs),
}

impl Command {
    pub fn execute(&self, common: &Common) -> Result<Report, CliError> {
        match self {
            Command::Verify(a) => verify(common, a),
            Command::Coupling(a) => coupling(common, a),
            Command::Gns(a) => gns_suite(common, a),
            Command::Grassmann(a) => grassmann(common, a),
            Command::MoyalLimit(a) => moyal_limit(common, a),
            Command::SternGerlach(a) => stern_gerlach_suite(common, a),
            Command::Decoherence(a) => decoherence(common, a),
            Command::Evolve(a) => evolve(common, a),
        }
    }
}

/// What the process should print and return.
#[derive(Debug, Default)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

pub fn render(report: &Report, format: Format) -> String {
    match format {
        Format::Json => report.to_json(),
        Format::Csv => report.to_csv(),
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            return if code == 0 {
                Outcome { code, stdout: text, stderr: String::new() }
            } else {
                Outcome { code, stdout: String::new(), stderr: text }
            };
        }
    };
    let report = match cli.command.execute(&cli.common) {
        Ok(r) => r,
        Err(e) => return Outcome { code: 2, stdout: String::new(), stderr: format!("error: {e}\n") },
    };
    let text = render(&report, cli.format);
    let mut out = Outcome { code: if report.passed { 0 } else { 1 }, ..Default::default() };
    match &cli.out {
        Some(path) => {
            if let Err(source) = std::fs::write(path, &text) {
                let e = CliError::Io { path: path.display().to_string(), source };
                return Outcome { code: 2, stdout: String::new(), stderr: format!("error: {e}\n") };
            }
        }
        None => out.stdout = text,
    }
    let total = report.checks.len();
    out.stderr = format!("{}: {}/{} checks passed\n", report.command, total - report.failed.len(), total);
    for id in &report.failed {
        out.stderr.push_str(&format!("FAILED {id}\n"));
    }
    out
}
