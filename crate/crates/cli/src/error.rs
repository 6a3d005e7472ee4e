//! Error type of the command-line driver.
//!
//! Two failure classes map to two exit codes: configuration problems (bad
//! keys, values violating a block's invariants) exit with 2 before any
//! computation starts, and runtime failures inside a library module exit
//! with 1 carrying the module's name.

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A configuration key is unknown, unparsable, or violates the invariant
    /// of the block it configures. The message always names the key.
    #[error("config: {0}")]
    Config(String),

    /// A library call failed; the module name is carried for attribution.
    #[error("{module}: {source}")]
    Module {
        module: &'static str,
        #[source]
        source: mixed_schrodinger::Error,
    },

    #[error("cannot read {path}: {source}")]
    ReadFile {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("cannot write {path}: {source}")]
    WriteFile {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("{path}: line {line}: {msg}")]
    BadArtifact {
        path: PathBuf,
        line: usize,
        msg: String,
    },
}

impl Error {
    /// Attaches a module name to a library error.
    pub fn module(module: &'static str) -> impl Fn(mixed_schrodinger::Error) -> Error {
        move |source| Error::Module { module, source }
    }

    /// Process exit code for this failure: 2 for configuration problems
    /// (nothing was computed), 1 otherwise.
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::Config(_) => 2,
            _ => 1,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_errors_exit_with_two_and_name_the_key() {
        let e = Error::Config("model.alpha: bad".into());
        assert_eq!(e.exit_code(), 2);
        assert!(e.to_string().contains("model.alpha"));
    }

    #[test]
    fn module_errors_exit_with_one_and_name_the_module() {
        let e = Error::module("analysis")(mixed_schrodinger::Error::InvalidParam("x".into()));
        assert_eq!(e.exit_code(), 1);
        assert!(e.to_string().starts_with("analysis:"));
    }
}
