use std::fmt;

/// Failures of the front end, each with its process exit code.
#[derive(Debug)]
pub enum CliError {
    /// Malformed or incomplete configuration.
    Schema { line: Option<usize>, message: String },
    Library(liouville::Error),
    Io(String),
}

impl CliError {
    pub fn schema(message: impl Into<String>) -> Self {
        CliError::Schema { line: None, message: message.into() }
    }

    pub fn exit_code(&self) -> i32 {
        use liouville::Error as E;
        match self {
            CliError::Schema { .. } => 2,
            CliError::Library(E::InvalidArgument(_) | E::Parse { .. } | E::Semantic(_)) => 2,
            CliError::Library(E::Numeric(_) | E::ImpossibleOutcome { .. } | E::NotASymmetry(_)) => 3,
            CliError::Library(E::Capability(_)) => 4,
            CliError::Io(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Schema { line: Some(l), message } => write!(f, "config error at line {l}: {message}"),
            CliError::Schema { line: None, message } => write!(f, "config error: {message}"),
            CliError::Library(e) => write!(f, "{e}"),
            CliError::Io(m) => write!(f, "{m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<liouville::Error> for CliError {
    fn from(e: liouville::Error) -> Self {
        CliError::Library(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
