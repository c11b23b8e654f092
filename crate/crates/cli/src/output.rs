use std::fmt;
use std::path::{Path, PathBuf};

use serde::Serialize;

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, unreadable input, or parameters outside a command's domain.
    Usage(String),
    /// A numerical contract failed (invalid POVM, non-stochastic model, ...).
    Contract(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Contract(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::Contract(m) => write!(f, "numerical contract violated: {m}"),
        }
    }
}

impl From<psi_gauge::Error> for CliError {
    fn from(e: psi_gauge::Error) -> Self {
        use psi_gauge::Error as E;
        match e {
            E::NotNormalized(_)
            | E::ZeroVector
            | E::GramMismatch(_)
            | E::RankDeficient(_)
            | E::InvalidPovm(_)
            | E::ProbabilityOutOfRange(_)
            | E::InvalidModel { .. } => CliError::Contract(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Usage(e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Every JSON report: tool identity, the command's full configuration and
/// seed, then the command-specific payload. No timestamps, so identical
/// invocations give identical bytes.
#[derive(Serialize)]
pub struct Report<'a, C: Serialize, R: Serialize> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub seed: u64,
    pub config: &'a C,
    pub result: R,
}

pub fn report<C: Serialize, R: Serialize>(command: &'static str, seed: u64, config: &C, result: R) -> CliResult<String> {
    let r = Report {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        command,
        seed,
        config,
        result,
    };
    let mut text = serde_json::to_string_pretty(&r)?;
    text.push('\n');
    Ok(text)
}

pub fn emit(text: &str, out: Option<&Path>) -> CliResult<()> {
    match out {
        Some(path) => write_file(path, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

pub fn write_file(path: &Path, text: &str) -> CliResult<()> {
    std::fs::write(path, text).map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display())))
}

pub fn read_file(path: &PathBuf) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))
}

pub fn csv_line<I: IntoIterator<Item = String>>(fields: I) -> String {
    let mut line = fields.into_iter().collect::<Vec<_>>().join(",");
    line.push('\n');
    line
}
