pub mod commands;
pub mod pipeline;

pub use commands::{run, Cli};
pub use pipeline::{run_pipeline, PipelineConfig, PipelineSummary};
