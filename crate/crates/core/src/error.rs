use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dataset has no samples")]
    EmptyDataset,
    #[error("class {0} has no samples")]
    MissingClass(usize),
    #[error("feature vectors have inconsistent lengths (expected {expected}, sample {index} has {found})")]
    RaggedFeatures { expected: usize, index: usize, found: usize },
    #[error("sample {index} has label {label} outside [0, {class_count})")]
    LabelOutOfRange { index: usize, label: usize, class_count: usize },
    #[error("sample {0} has an empty token sequence")]
    EmptySequence(usize),
    #[error("dataset mixes dense and token samples")]
    MixedKinds,
    #[error("class {0} has fewer than 2 samples")]
    ClassTooSmall(usize),
    #[error("length must be positive")]
    ZeroLength,
    #[error("invalid score vector: {0}")]
    InvalidScores(String),

    #[error("invalid model spec: {0}")]
    InvalidSpec(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("non-finite loss at epoch {epoch}")]
    NonFiniteLoss { epoch: usize },
    #[error("invalid training config: {0}")]
    InvalidConfig(String),

    #[error("empty input")]
    EmptyInput,
    #[error("score vectors have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("empty list of score vectors")]
    EmptyList,

    #[error("text is empty after tokenization")]
    EmptyAfterTokenize,
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("n-gram {0:?} not present in corpus statistics")]
    UnknownNgram(Vec<String>),
    #[error("token id {token} in sample {index} is outside the vocabulary of {vocab_size}")]
    TokenOutOfVocab { index: usize, token: u32, vocab_size: usize },
    #[error("n-gram order must be 1, 2 or 3 (got {0})")]
    BadOrder(usize),

    #[error("pacing needs N >= 3 and T >= 3 (got N={n}, T={t})")]
    TooSmall { n: usize, t: usize },

    #[error("cannot select {k} of {n} samples")]
    Infeasible { k: usize, n: usize },

    #[error("bad magic number {found:#010x} (expected {expected:#010x})")]
    BadMagic { expected: u32, found: u32 },
    #[error("malformed input at {location}: {reason}")]
    Ragged { location: String, reason: String },
    #[error("unknown label {0:?}")]
    UnknownLabel(String),
    #[error("bad dataset spec: {0}")]
    BadSpec(String),
    #[error("unknown method {0:?}")]
    UnknownMethod(String),
    #[error("method {0} needs data the source does not provide: {1}")]
    Unsupported(String, String),
    #[error("io error on {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed json")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
