//! IO, file formats and the CLI for the `pinsound-core` attack pipeline.
//!
//! - [`wav`]: 16-bit PCM clip reading/writing
//! - [`dataset`]: on-disk dataset layout (manifest + truth + clips)
//! - [`model_fmt`]: plain-text timing-model serialization
//! - [`reports`]: detection/ranking/eval record schemas
//! - [`cli`]: the `pinsound` subcommands

pub mod cli;
pub mod dataset;
pub mod error;
pub mod model_fmt;
pub mod reports;
pub mod wav;

pub use error::{Result, ToolError};
