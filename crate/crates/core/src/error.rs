//! Error taxonomy shared by every module. Variants are grouped by the
//! process exit code the command-line front end maps them to: invalid
//! parameters (1), data problems (2), numerical failures (3).

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Caller passed an argument outside the documented domain.
    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    /// Input data is malformed or inconsistent (parse failures, ragged
    /// rows, shape mismatches, empty inputs, unknown labels, ...).
    #[error("data error: {0}")]
    Data(String),

    /// Parse failure with location information, for delimited files.
    #[error("parse error at {path}:{line}:{column}: {message}")]
    Parse {
        path: String,
        line: usize,
        column: usize,
        message: String,
    },

    /// A numerical routine failed to produce a usable result
    /// (non-convergence, singular systems, non-finite values, ...).
    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("model file error: {0}")]
    Model(String),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParam(msg.into())
    }

    pub fn data(msg: impl Into<String>) -> Self {
        Error::Data(msg.into())
    }

    pub fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }

    pub fn model(msg: impl Into<String>) -> Self {
        Error::Model(msg.into())
    }

    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for the command-line front end:
    /// 1 usage, 2 data, 3 numerical.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidParam(_) => 1,
            Error::Data(_) | Error::Parse { .. } | Error::Io { .. } | Error::Model(_) => 2,
            Error::Numerical(_) => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_follow_the_taxonomy() {
        assert_eq!(Error::invalid("x").exit_code(), 1);
        assert_eq!(Error::data("x").exit_code(), 2);
        assert_eq!(
            Error::Parse {
                path: "f".into(),
                line: 3,
                column: 2,
                message: "bad float".into()
            }
            .exit_code(),
            2
        );
        assert_eq!(Error::numerical("x").exit_code(), 3);
    }

    #[test]
    fn parse_error_reports_location() {
        let e = Error::Parse {
            path: "data.csv".into(),
            line: 7,
            column: 4,
            message: "expected a number".into(),
        };
        let s = e.to_string();
        assert!(s.contains("data.csv:7:4"), "got: {s}");
    }
}
