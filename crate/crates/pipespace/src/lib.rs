//! File formats, dataset manifests, orchestration and the command line for
//! pipeline-space analysis. Algorithms live in `pipespace-core`.

pub mod cli;
pub mod config;
pub mod error;
pub mod manifest;
pub mod nifti;
pub mod report;
pub mod svg;
pub mod synth;
pub mod workflow;

pub use error::{Error, Result};
pub use pipespace_core as core;
