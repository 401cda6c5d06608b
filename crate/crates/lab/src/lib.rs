//! File formats, experiment drivers and the command-line front end for the
//! `superaccel` optimizer library.

pub mod config;
pub mod data;
pub mod error;
pub mod experiments;
pub mod output;
pub mod svg;

pub use config::ExperimentConfig;
pub use error::{LabError, Result};
pub use experiments::{rerun, run, Outcome};
