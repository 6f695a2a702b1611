//! Project workbench: configuration, artifact store, stage pipeline,
//! review handling, reports and the HTTP API.

pub mod audit;
pub mod config;
pub mod error;
pub mod pipeline;
pub mod providers;
pub mod report;
pub mod review;
pub mod server;
pub mod store;

pub use config::ProjectConfig;
pub use error::{exit, DecisionError, WorkbenchError};
pub use pipeline::{Options, Outcome, Project, Wait};
pub use store::{ArtifactStore, PipelineState, Stage};
