//! Command-line plumbing around `mrlt-core`: a synthetic singing corpus,
//! dataset loading, the end-to-end experiment and its report directory.

pub mod dataset;
pub mod error;
pub mod experiment;
pub mod report;
pub mod synth;

pub use error::{HarnessError, Result};
pub use experiment::{run_experiment, ExperimentConfig, ExperimentReport, LmKind};
pub use synth::{synth_corpus, SynthConfig};
