use std::fmt;

use maskkit::MaskError;

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, unreadable inputs or failed validation; exit code 2.
    Usage(String),
    /// Anything else; exit code 1.
    Internal(String),
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    pub fn internal(msg: impl Into<String>) -> Self {
        CliError::Internal(msg.into())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Internal(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Internal(m) => f.write_str(m),
        }
    }
}

/// Validation failure attributed to the flag that caused it.
pub fn flag_error(flag: &str, err: MaskError) -> CliError {
    CliError::Usage(format!("invalid value for {flag}: {err}"))
}

/// Flag most likely responsible for a pattern validation error.
pub fn pattern_flag(err: &MaskError) -> &'static str {
    match err {
        MaskError::RatioOutOfRange(_) | MaskError::RatioBelowHalf(_) | MaskError::KeptExceedsCandidates { .. } => {
            "--ratio"
        }
        MaskError::ImpossibleGeometry { .. } => "--side-k",
        MaskError::InvalidDimension(_) => "--grid",
        MaskError::InvalidParameter(m) if m.contains("min_block_area") => "--min-block-area",
        MaskError::InvalidParameter(m) if m.contains("aspect") => "--aspect-low/--aspect-high",
        _ => "--pattern",
    }
}

impl From<MaskError> for CliError {
    fn from(e: MaskError) -> Self {
        CliError::Usage(e.to_string())
    }
}
