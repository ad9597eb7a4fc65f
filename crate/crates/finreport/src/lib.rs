//! End-to-end pipeline turning daily index time series into analyst-style
//! reports via chat-completion backends, then evaluating the output: rubric
//! scoring, segment-source classification with highlighting, linguistic
//! profiling, and classification/correlation metrics.

pub mod chart;
pub mod error;
pub mod gateway;
pub mod geval;
pub mod indicators;
pub mod market;
pub mod metrics;
pub mod prompt;
pub mod segments;

pub use error::{Error, Result};
