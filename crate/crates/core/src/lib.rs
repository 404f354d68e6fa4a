pub mod communities;
pub mod config;
pub mod corpus;
pub mod detector;
pub mod error;
pub mod graph;
pub mod keys;
#[cfg(feature = "cli")]
pub mod pipeline;
pub mod report;
pub mod synth;

pub use error::{Error, Result};
