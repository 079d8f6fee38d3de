//! Command-line pipeline around `drselect-core`: configuration, the staged
//! experiment runner and a generator for a small synthetic benchmark.

pub mod config;
pub mod error;
pub mod pipeline;
pub mod synth;

pub use config::{Loaded, PipelineConfig};
pub use error::{CliError, Result};
pub use pipeline::Workspace;
