//! File formats, experiment configuration, the reproducible pipeline and the
//! command line for [`switchcode_core`].

pub mod cli;
pub mod config;
pub mod documents;
pub mod error;
pub mod formats;
pub mod parallel;
pub mod pipeline;
pub mod reproduce;

pub use switchcode_core as core;

pub use config::ExperimentConfig;
pub use error::{Error, ErrorKind, Result};
pub use pipeline::{run_experiment, Context, Manifest, Outcome};
