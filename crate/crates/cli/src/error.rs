use std::fmt;

/// Process exit statuses.
pub const EXIT_PASS: u8 = 0;
pub const EXIT_FAIL: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_NONCONVERGENCE: u8 = 3;

#[derive(Debug)]
pub enum CliError {
    Parse { line: usize, message: String },
    Usage(String),
    Io(std::io::Error),
    Core(qmeasure::Error),
}

impl CliError {
    pub fn parse(line: usize, message: impl Into<String>) -> Self {
        CliError::Parse {
            line,
            message: message.into(),
        }
    }

    pub fn usage(message: impl Into<String>) -> Self {
        CliError::Usage(message.into())
    }

    pub fn exit_code(&self) -> u8 {
        use qmeasure::Error as E;
        match self {
            CliError::Parse { .. } | CliError::Usage(_) | CliError::Io(_) => EXIT_USAGE,
            CliError::Core(E::NonConvergence { .. }) => EXIT_NONCONVERGENCE,
            CliError::Core(E::AxiomViolation(_) | E::HypothesisFailure { .. }) => EXIT_FAIL,
            CliError::Core(_) => EXIT_USAGE,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Parse { line, message } => write!(f, "scenario line {line}: {message}"),
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Io(e) => write!(f, "i/o error: {e}"),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<qmeasure::Error> for CliError {
    fn from(e: qmeasure::Error) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}
