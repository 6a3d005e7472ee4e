//! Library behind the `mss` binary: configuration loading, artifact
//! formats with their readers, the operator self-check battery, and the
//! subcommand implementations. Kept as a library so integration tests can
//! read every artifact back through the same code that wrote it.

pub mod artifacts;
pub mod battery;
pub mod commands;
pub mod config;
pub mod error;

pub use config::RunConfig;
pub use error::{Error, Result};
