//! Training, evaluation, file formats and the command line around the
//! `organ-core` models.

pub mod checkpoint;
pub mod cli;
pub mod config;
pub mod corpus;
pub mod error;
pub mod evaluate;
pub mod plot;
pub mod report;
pub mod trainer;

pub use checkpoint::Checkpoint;
pub use config::TrainConfig;
pub use error::{OrganError, Result};
pub use report::MetricReport;
pub use trainer::Trainer;
