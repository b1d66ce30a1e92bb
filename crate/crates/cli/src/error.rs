use numsynth_core::abstraction::AbstractionError;
use numsynth_core::bernstein::BernsteinError;
use numsynth_core::cegar::CegarError;
use numsynth_core::speclang::SpecError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error(transparent)]
    Spec(#[from] SpecError),
    #[error("line {line}: {msg}")]
    Format { line: usize, msg: String },
    #[error(transparent)]
    Cegar(#[from] CegarError),
    #[error(transparent)]
    Theory(#[from] BernsteinError),
    #[error(transparent)]
    Abstraction(#[from] AbstractionError),
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    pub fn format(line: usize, msg: impl Into<String>) -> Self {
        CliError::Format { line, msg: msg.into() }
    }
}

pub fn read_file(path: &std::path::Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.display().to_string(), source })
}

pub fn write_file(path: &std::path::Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|source| CliError::Io { path: path.display().to_string(), source })
}
