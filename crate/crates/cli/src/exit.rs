//! Exit codes and the mapping from errors to them.

use std::process::ExitCode;

pub const USAGE: u8 = 1;
pub const BACKEND: u8 = 2;
pub const DATA: u8 = 3;

/// Errors raised by the CLI itself, tagged with their exit class.
#[derive(Debug, thiserror::Error)]
pub enum Failure {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Backend(String),
    #[error("{0}")]
    Data(String),
}

pub fn code_of(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(f) = cause.downcast_ref::<Failure>() {
            return match f {
                Failure::Usage(_) => USAGE,
                Failure::Backend(_) => BACKEND,
                Failure::Data(_) => DATA,
            };
        }
        if let Some(e) = cause.downcast_ref::<fsd_core::Error>() {
            return match e {
                fsd_core::Error::Config(_) | fsd_core::Error::Argument(_) => USAGE,
                fsd_core::Error::Backend { .. } | fsd_core::Error::Protocol(_) => BACKEND,
                fsd_core::Error::Data(_) | fsd_core::Error::Io(_) => DATA,
            };
        }
    }
    DATA
}

pub fn exit(code: u8) -> ExitCode {
    ExitCode::from(code)
}
