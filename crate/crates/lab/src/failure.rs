use std::fmt;

/// Why a command stopped, and the process status it maps to.
#[derive(Debug)]
pub enum Failure {
    /// Bad flags or arguments.
    Usage(String),
    /// Unreadable or invalid inputs: configs, specs, parameters, paths.
    Config(anyhow::Error),
    /// Anything that went wrong after the inputs were accepted.
    Runtime(anyhow::Error),
}

pub const EXIT_USAGE: u8 = 64;
pub const EXIT_CONFIG: u8 = 65;
pub const EXIT_RUNTIME: u8 = 74;

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Usage(_) => EXIT_USAGE,
            Failure::Config(_) => EXIT_CONFIG,
            Failure::Runtime(_) => EXIT_RUNTIME,
        }
    }

    pub fn config(msg: impl fmt::Display) -> Self {
        Failure::Config(anyhow::anyhow!("{msg}"))
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(m) => write!(f, "{m}"),
            Failure::Config(e) => write!(f, "invalid configuration: {e:#}"),
            Failure::Runtime(e) => write!(f, "{e:#}"),
        }
    }
}

impl From<composed_core::Error> for Failure {
    fn from(e: composed_core::Error) -> Self {
        match e {
            composed_core::Error::InvalidState(_) => Failure::Runtime(e.into()),
            _ => Failure::Config(e.into()),
        }
    }
}

pub type Result<T, E = Failure> = std::result::Result<T, E>;

/// Tag errors from reading inputs as configuration failures.
pub trait ConfigContext<T> {
    fn config_context(self, what: impl fmt::Display) -> Result<T>;
}

impl<T, E: Into<anyhow::Error>> ConfigContext<T> for std::result::Result<T, E> {
    fn config_context(self, what: impl fmt::Display) -> Result<T> {
        self.map_err(|e| Failure::Config(e.into().context(what.to_string())))
    }
}

/// Tag errors as runtime failures.
pub trait RuntimeContext<T> {
    fn runtime_context(self, what: impl fmt::Display) -> Result<T>;
}

impl<T, E: Into<anyhow::Error>> RuntimeContext<T> for std::result::Result<T, E> {
    fn runtime_context(self, what: impl fmt::Display) -> Result<T> {
        self.map_err(|e| Failure::Runtime(e.into().context(what.to_string())))
    }
}
