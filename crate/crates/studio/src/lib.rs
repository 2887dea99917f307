//! HTTP service and operational front end for the ideation workbench.

pub mod api;
pub mod app;
pub mod boards;
pub mod demo;
pub mod jobs;
pub mod report;

pub use api::{router, AppState};
pub use app::{ChainExecutor, Clients, DataDir, Studio};
