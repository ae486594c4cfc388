//! Frame pipeline, configuration, telemetry server and CLI for gazemouse.

pub mod cli;
pub mod config;
pub mod error;
pub mod pipeline;
pub mod protocol;
pub mod run;
pub mod source;
pub mod telemetry;

pub use config::{DetectorChoice, EngineConfig};
pub use error::{EngineError, Result};
pub use pipeline::{process_frame, FrameReport, Pipeline, PipelineState};
pub use protocol::{apply_control, ControlMessage, Reply};
pub use run::{run, RunContext, RunSummary};
