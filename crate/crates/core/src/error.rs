use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("vocabulary is empty")]
    EmptyVocabulary,
    #[error("duplicate term {term:?} at line {line}")]
    DuplicateTerm { line: usize, term: String },
    #[error("document {doc}: word id {word} is out of range for a vocabulary of {vocab_size} words")]
    WordOutOfRange { doc: usize, word: u64, vocab_size: usize },
    #[error("document {doc}: word {word} has a zero count")]
    ZeroCount { doc: usize, word: u32 },
    #[error("document {doc}: word {word} listed twice")]
    RepeatedWord { doc: usize, word: u32 },
    #[error("document {doc} is empty")]
    EmptyDocument { doc: usize },
    #[error("document id {0} appears twice in the corpus")]
    DuplicateDocId(usize),
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("dimension mismatch: {what} is {found}, expected {expected}")]
    DimensionMismatch { what: &'static str, expected: usize, found: usize },
    #[error("{what} index {index} out of range (limit {limit})")]
    IndexOutOfRange { what: &'static str, index: usize, limit: usize },
    #[error("document {doc} has no present topic")]
    NoPresentTopic { doc: usize },
    #[error("invalid model structure: {0}")]
    InvalidStructure(&'static str),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("vector has zero norm")]
    ZeroVector,
    #[error("document {doc}: word {word} has zero probability under every present topic")]
    ZeroProbability { doc: usize, word: u32 },
}
