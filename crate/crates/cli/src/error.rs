use std::fmt;

/// A command failure with its process exit code: 2 for bad input (files,
/// arguments, placements), 1 for failures while computing.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }

    pub fn failure(message: impl Into<String>) -> Self {
        Self {
            code: 1,
            message: message.into(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

/// Whether an error is caused by the caller's input rather than by the
/// computation itself.
pub fn is_input_error(e: &rfsplat::Error) -> bool {
    use rfsplat::Error::*;
    matches!(
        e,
        Validation(_)
            | DegeneratePlacement(_)
            | Precondition(_)
            | UnitMismatch { .. }
            | GeometryFrozen { .. }
            | Format(_)
            | Io(_)
            | Json(_)
    )
}

impl From<rfsplat::Error> for CliError {
    fn from(e: rfsplat::Error) -> Self {
        Self {
            code: if is_input_error(&e) { 2 } else { 1 },
            message: e.to_string(),
        }
    }
}
