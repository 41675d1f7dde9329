use alloc::boxed::Box;
use alloc::string::String;

use crate::geometry::MappingMatrix;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("zero vector has no direction")]
    ZeroVector,

    #[error("word `{word}` has a zero-norm vector")]
    ZeroNorm { word: String },

    #[error("duplicate word `{word}` in embedding set")]
    DuplicateWord { word: String },

    #[error("non-finite value in {context}")]
    NonFinite { context: &'static str },

    #[error("anchor cross-covariance is all zero; cannot solve Procrustes")]
    DegenerateAnchors,

    #[error("neighborhood size k = {k} exceeds the opposing vocabulary of {available} rows")]
    NeighborhoodTooLarge { k: usize, available: usize },

    #[error("row index {index} out of range for {len} rows")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("invalid configuration: {field} {reason}")]
    InvalidConfig { field: &'static str, reason: &'static str },

    #[error("seed dictionary has no pairs resolvable against the vocabularies")]
    EmptySeed,

    #[error("induced anchor dictionary collapsed to zero pairs at iteration {iteration}")]
    AnchorCollapse { iteration: usize },

    #[error("induced dictionary is empty; the mapping produced no usable pairs")]
    EmptyDictionary,

    #[error("vocabulary of {available} words is smaller than the required {required}")]
    VocabularyTooSmall { available: usize, required: usize },

    #[error("non-finite gradient at epoch {epoch}, step {step}")]
    NonFiniteGradient { epoch: usize, step: usize },

    #[error("training diverged at epoch {epoch}, step {step} (loss is not finite)")]
    Diverged {
        epoch: usize,
        step: usize,
        last_finite: Box<MappingMatrix>,
    },

    #[error("no test word has an in-vocabulary gold translation")]
    NoEvaluableWords,

    #[error("need at least {required} pairs, found {found}")]
    TooFewPairs { found: usize, required: usize },
}
