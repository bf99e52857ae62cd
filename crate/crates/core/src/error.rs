use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    /// The backend answered, but with an error or with something that
    /// violates the wire protocol.
    #[error("backend error [{code}]: {msg}")]
    Backend { code: String, msg: String },

    #[error("protocol violation: {0}")]
    Protocol(String),

    #[error("data error: {0}")]
    Data(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn backend(code: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Backend { code: code.into(), msg: msg.into() }
    }

    /// True for failures that originate on the backend side of a session.
    pub fn is_backend(&self) -> bool {
        matches!(self, Error::Backend { .. } | Error::Protocol(_) | Error::Io(_))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
