//! File formats, the alignment pipeline and the `lexalign` command line, on
//! top of the numeric core in `lexalign-core`.

pub mod cli;
pub mod config;
mod error;
pub mod formats;
pub mod pipeline;

pub use error::{Error, Result};
pub use lexalign_core as core;
