use std::fmt;
use std::process::ExitCode;

use manipkit_core::metrics::MetricsError;
use manipkit_core::normals::NormalsError;
use manipkit_core::proposer::ProposeError;
use manipkit_core::raster::RasterError;

pub const EXIT_INPUT: u8 = 2;
pub const EXIT_DIMENSIONS: u8 = 3;
pub const EXIT_NO_PROPOSAL: u8 = 4;
pub const EXIT_UNMATCHED: u8 = 5;

/// Error carrying the process exit code it maps to.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn new(code: u8, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }

    pub fn input(message: impl fmt::Display) -> Self {
        Self::new(EXIT_INPUT, message.to_string())
    }

    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(self.code)
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

impl From<RasterError> for CliError {
    fn from(e: RasterError) -> Self {
        let code = match e {
            RasterError::DimensionMismatch { .. } => EXIT_DIMENSIONS,
            _ => EXIT_INPUT,
        };
        Self::new(code, e.to_string())
    }
}

impl From<NormalsError> for CliError {
    fn from(e: NormalsError) -> Self {
        match e {
            NormalsError::Raster(r) => r.into(),
            other => Self::input(other),
        }
    }
}

impl From<ProposeError> for CliError {
    fn from(e: ProposeError) -> Self {
        match e {
            ProposeError::EmptyMask | ProposeError::NoProposal => Self::new(EXIT_NO_PROPOSAL, e.to_string()),
            ProposeError::Raster(r) => r.into(),
            ProposeError::Normals(n) => n.into(),
            ProposeError::InvalidConfig(_) => Self::input(e),
        }
    }
}

impl From<MetricsError> for CliError {
    fn from(e: MetricsError) -> Self {
        match e {
            MetricsError::Raster(r) => r.into(),
            MetricsError::Empty => Self::input(e),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Create parent directories and write `contents`.
pub fn write_output(path: &std::path::Path, contents: &str) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::input(format!("{}: {e}", dir.display())))?;
    }
    std::fs::write(path, contents).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}
