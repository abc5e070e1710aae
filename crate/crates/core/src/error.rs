use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A precondition of an operation was violated by the caller.
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("domain error: {0}")]
    Domain(String),

    /// The state stopped being finite; carries the last finite state.
    #[error("numeric overflow at y = {last_y} (last finite x = {last_x:?})")]
    NumericOverflow { last_x: Vec<f64>, last_y: f64 },

    #[error("normalization failed: {0}")]
    Normalization(String),

    #[error("no event within horizon: {0}")]
    Horizon(String),

    #[error("estimation failed: {0}")]
    Estimation(String),

    #[error("prediction failed: {0}")]
    Prediction(String),

    #[error("undefined statistic: {0}")]
    UndefinedStatistic(String),

    #[error("indeterminate classification: {0}")]
    Indeterminate(String),

    #[error("config error at `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            message: message.into(),
        }
    }

    /// True for errors caused by bad input configuration rather than by the
    /// numerics themselves.
    pub fn is_config_error(&self) -> bool {
        matches!(self, Error::Config { .. } | Error::Contract(_))
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
