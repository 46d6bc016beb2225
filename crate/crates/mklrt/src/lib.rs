//! File formats, model persistence, experiment configuration and the
//! `mklrt` command-line tool, on top of [`mklrt_core`].

pub mod commands;
pub mod config;
pub mod error;
pub mod io;
pub mod model;
pub mod parallel;
pub mod prep;
pub mod report;
pub mod toy;

pub use config::ExperimentConfig;
pub use error::{CliError, Result};
pub use model::ModelFile;
