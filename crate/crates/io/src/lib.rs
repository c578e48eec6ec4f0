//! Std companion to `georoute-core`: file formats, run configuration, a thread-safe
//! embedding cache, the subcommand implementations and the `georoute` binary.
//!
//! ```text
//! georoute gen      # scenario JSON lines (regimes + BA/WS/ER families)
//! georoute train    # gate weights + per-example label audit
//! georoute eval     # per-scenario CSV, summary JSON, component table
//! georoute cascade  # criticality CSV
//! georoute bench    # per-call latency table
//! ```

pub mod cache;
pub mod commands;
pub mod config;
pub mod error;
pub mod formats;

pub use cache::SharedCache;
pub use config::RunConfig;
pub use error::{CliError, CliResult};
