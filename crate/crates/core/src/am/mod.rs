//! Acoustic modeling and decoding: pronunciation lexicon, flat-start
//! GMM-HMM training, word-loop Viterbi decoding with N-best output, N-best
//! rescoring and word confidences.

mod decode;
mod lexicon;
mod model;
mod nbest;
mod train;

use thiserror::Error;

pub use decode::{viterbi_decode, viterbi_decode_with, DecoderConfig, DecodingGraph, Hypothesis, NBestList};
pub use lexicon::{parse_lexicon, parse_lexicon_with_silence, Lexicon, DEFAULT_SILENCE_PHONE};
pub use model::{AcousticModel, AcousticScorer, DiagGmm, GmmScorer, HmmTopology};
pub use nbest::{
    ctm_lines, hypothesis_posteriors, lm_word_log10, parse_ctm, rescore_nbest, sequence_lm_score, word_confidence,
    CtmLine,
};
pub use train::{train_gmm_hmm, IterationLog, TrainConfig, TrainedModel};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AmError {
    #[error("lexicon line {line}: {word} has no pronunciation")]
    EmptyPronunciation { line: usize, word: String },
    #[error("lexicon has no words")]
    EmptyLexicon,
    #[error("phone {0:?} is not in the model's inventory")]
    UnknownPhone(String),
    #[error("utterance {utterance}: word {word:?} is not in the lexicon")]
    OovWord { utterance: usize, word: String },
    #[error("no training data")]
    EmptyData,
    #[error("feature dimension {found} does not match the expected {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("scorer has {scorer} states but the network needs {graph}")]
    StateCountMismatch { scorer: usize, graph: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("N-best list is empty")]
    EmptyNBest,
    #[error("CTM line {line}: {message}")]
    CtmSyntax { line: usize, message: String },
}
