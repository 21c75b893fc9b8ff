use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid game: {0}")]
    InvalidGame(String),
    #[error("invalid action id {action} (game has {available} env actions)")]
    InvalidAction { action: usize, available: usize },
    #[error("cannot step from a terminal state")]
    TerminalState,
    #[error("enumeration cap exceeded: {what} requires {required} items, bound is {bound}")]
    EnumerationCap {
        what: &'static str,
        required: u128,
        bound: u64,
    },
    #[error("invalid message: {0}")]
    InvalidMessage(String),
    #[error("vocabulary too small: {needed} distinct messages needed, {available} available")]
    VocabularyTooSmall { needed: usize, available: usize },
    #[error("invalid policy: {0}")]
    InvalidPolicy(String),
    #[error("trajectories come from different games ({0} vs {1})")]
    DomainMismatch(String, String),
    #[error("distributions are defined over different supports")]
    SupportMismatch,
    #[error("distribution is not normalized (total mass {0})")]
    NotNormalized(f64),
    #[error("transport support has {atoms} atoms, cap is {cap}; use the total_variation lift")]
    SupportTooLarge { atoms: usize, cap: usize },
    #[error("invalid distance config: {0}")]
    InvalidDistanceConfig(String),
    #[error("too few episodes for signalling test: {got} < {min}")]
    TooFewEpisodes { got: usize, min: usize },
    #[error("empty message list")]
    NoMessages,
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("record {index} does not belong to this game")]
    ForeignRecord { index: usize },
    #[error("record {index} has no hidden target; only generated datasets carry one")]
    MissingHiddenTarget { index: usize },
    #[error("variant=expected requires a listener model")]
    MissingListenerModel,
    #[error("invalid inference config: {0}")]
    InvalidInferenceConfig(String),
    #[error("invalid community config: {0}")]
    InvalidCommunityConfig(String),
    #[error("community document does not match a rebuild from its config and seed")]
    CommunityMismatch,
    #[error("episode count must be at least 1")]
    NoEpisodes,
    #[error("{path}: line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("game fingerprint mismatch: expected {expected}, found {found}")]
    Fingerprint { expected: String, found: String },
    #[error("unsupported format version {found} (supported: {supported})")]
    FormatVersion { found: u32, supported: u32 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}
