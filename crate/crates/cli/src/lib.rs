//! Command-line pipeline over the talking-point library.

pub mod config;
pub mod stages;

pub use config::{BackendKind, ConfigError, PipelineConfig};
pub use stages::{build_gateway, Filters, MissingInput, Pipeline, Stage, StageSummary};
