// SPDX-License-Identifier: Apache-2.0

//! Command-line driver for the engagegraph pipeline.

pub mod config;
pub mod pipeline;
pub mod synth;

pub use config::{ConfigLoadError, FieldError, RunConfig};
pub use pipeline::{stage_seed, CliError, Pipeline, STAGES};
