//! Building blocks for transcribing sung lyrics in polyphonic music.
//!
//! The pipeline extracts MFCCs from the mixture (music-present) and from
//! separated vocals (music-removed), stacks the two streams, scores them
//! with an HMM acoustic model and decodes with an interpolated n-gram
//! language model. The [`eval`] module holds the scoring tools: csid
//! alignment, WER, error tables, genre breakdowns, confidence histograms
//! and line segmentation.

pub mod am;
pub mod audio;
pub mod eval;
pub mod features;
pub mod lm;
pub mod separation;

pub use audio::{AudioBuffer, FrameConfig};
pub use features::{FeatureMatrix, StreamKind};
pub use lm::NGramModel;
