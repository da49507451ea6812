use std::fmt;

/// Failure of a command, carrying its process exit code.
#[derive(Debug)]
pub enum Failure {
    /// Bad flags, config or input files. Exit code 2.
    Validation(String),
    /// A fit or estimator failed on valid input. Exit code 3.
    Numerical(String),
    /// Reading or writing files failed. Exit code 1.
    Io(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Validation(_) => 2,
            Failure::Numerical(_) => 3,
            Failure::Io(_) => 1,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Validation(m) => write!(f, "invalid input: {m}"),
            Failure::Numerical(m) => write!(f, "numerical failure: {m}"),
            Failure::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl std::error::Error for Failure {}

pub type CliResult<T> = Result<T, Failure>;

pub fn invalid(msg: impl Into<String>) -> Failure {
    Failure::Validation(msg.into())
}

/// Wraps a core error raised while computing `context`.
pub fn numerical(context: impl fmt::Display) -> impl FnOnce(rkcca_core::Error) -> Failure {
    move |e| Failure::Numerical(format!("{context}: {e}"))
}

/// Wraps a core error raised while validating `context`.
pub fn rejected(context: impl fmt::Display) -> impl FnOnce(rkcca_core::Error) -> Failure {
    move |e| Failure::Validation(format!("{context}: {e}"))
}

pub fn io_error(path: &std::path::Path) -> impl FnOnce(std::io::Error) -> Failure + '_ {
    move |e| Failure::Io(format!("{}: {e}", path.display()))
}
