use std::fmt;

#[derive(Debug)]
pub enum CliError {
    /// Usage, configuration or parameter problem.
    Config(String),
    /// Failure inside a computation.
    Numeric(rgfp::Error),
    Io(std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) | Self::Io(_) => 1,
            Self::Numeric(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Config(m) => write!(f, "{m}"),
            Self::Numeric(e) => write!(f, "{e}"),
            Self::Io(e) => write!(f, "output error: {e}"),
        }
    }
}

impl From<rgfp::Error> for CliError {
    fn from(e: rgfp::Error) -> Self {
        use rgfp::Error as E;
        match e {
            E::InvalidParams(m) | E::InvalidLabel(m) => Self::Config(m),
            E::InvalidOrder(_) => Self::Config(e.to_string()),
            other => Self::Numeric(other),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::Io(e)
    }
}
