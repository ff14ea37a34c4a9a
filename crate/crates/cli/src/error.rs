use lidarcull::{CloudParseError, EvalError, FilterError, LabelError};
use std::fmt;

/// Exit code for configuration problems (bad flags, unparseable config).
pub const EXIT_CONFIG: u8 = 2;
/// Exit code for frame-level I/O and parse failures.
pub const EXIT_FRAME: u8 = 3;
/// Exit code for evaluating detections that carry no score.
pub const EXIT_UNSCORED: u8 = 4;

#[derive(Debug)]
pub enum CliError {
    /// Bad configuration or flag values; exit 2.
    Config(String),
    /// Frame I/O, parse or dataset-consistency failure; exit 3.
    Frame(String),
    /// A detection without a score reached evaluation; exit 4.
    Unscored(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Frame(_) => EXIT_FRAME,
            CliError::Unscored(_) => EXIT_UNSCORED,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(msg) | CliError::Frame(msg) | CliError::Unscored(msg) => {
                f.write_str(msg)
            }
        }
    }
}

impl std::error::Error for CliError {}

impl From<FilterError> for CliError {
    fn from(e: FilterError) -> Self {
        CliError::Frame(e.to_string())
    }
}

impl From<LabelError> for CliError {
    fn from(e: LabelError) -> Self {
        CliError::Frame(e.to_string())
    }
}

impl From<CloudParseError> for CliError {
    fn from(e: CloudParseError) -> Self {
        CliError::Frame(e.to_string())
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::MissingScore { .. } => CliError::Unscored(e.to_string()),
            EvalError::InvalidThreshold { .. } => CliError::Config(e.to_string()),
            EvalError::NoGroundTruth | EvalError::FrameMismatch { .. } => {
                CliError::Frame(e.to_string())
            }
        }
    }
}
