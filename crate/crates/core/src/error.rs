use alloc::string::String;

use crate::types::MentionKey;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("span ({start}, {end}) is out of bounds for a sentence of {len} tokens")]
    InvalidSpan { start: usize, end: usize, len: usize },

    #[error("mention {0} does not resolve in its document")]
    UnknownMention(MentionKey),

    #[error("document {0}: {1}")]
    InvalidDocument(String, String),

    #[error("duplicate mention {0}")]
    DuplicateMention(MentionKey),

    #[error("mention {0} has no information status label")]
    MissingLabel(MentionKey),

    #[error("gold and predicted mention sets differ: {0}")]
    SpanMismatch(String),

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("span ({start}, {end}) needs {needed} encoder units, budget is {budget}")]
    SpanExceedsBudget {
        start: usize,
        end: usize,
        needed: usize,
        budget: usize,
    },

    #[error("sequence of {len} encoder units exceeds the backend budget of {budget}; truncate first")]
    OverBudget { len: usize, budget: usize },

    #[error("training data contains no positive instances")]
    NoPositiveInstances,

    #[error("cannot build {k} folds from {docs} documents")]
    TooFewDocuments { k: usize, docs: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("systems were run on different document sets: {0}")]
    DocumentSetMismatch(String),

    #[error("encoder backend failure: {0}")]
    Backend(String),
}
