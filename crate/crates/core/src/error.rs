use std::path::PathBuf;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("profile schema error: {0}")]
    ProfileSchema(String),

    #[error("codepoint U+{codepoint:04X} assigned to both {first} and {second}")]
    DuplicateCodepoint {
        codepoint: u32,
        first: String,
        second: String,
    },

    #[error("unknown built-in profile {0:?}")]
    UnknownProfile(String),

    #[error("profile {profile:?} has no scheme named {scheme:?}")]
    UnknownScheme { profile: String, scheme: String },

    #[error("combining mark with no base character at byte {byte}{}", fmt_line(.line))]
    OrphanMark { byte: usize, line: Option<usize> },

    #[error("line {line}: source has {src_tokens} tokens but target has {tgt_tokens}")]
    TokenMismatch {
        line: usize,
        src_tokens: usize,
        tgt_tokens: usize,
    },

    #[error("reference has {refs} lines but hypothesis has {hyps}")]
    LineCountMismatch { refs: usize, hyps: usize },

    #[error("corpus is empty")]
    EmptyCorpus,

    #[error("invalid split spec: {0}")]
    InvalidSplitSpec(String),

    #[error("corpus of {lines} lines is too small to give every part at least one line")]
    SplitTooSmall { lines: usize },

    #[error("subset target of {target} words exceeds the {available} words available")]
    SubsetTargetTooLarge { target: usize, available: usize },

    #[error("n-gram order must be at least 1, got {0}")]
    InvalidOrder(usize),

    #[error("model was trained with profile {model:?} but {profile:?} is in use")]
    ProfileMismatch { model: String, profile: String },

    #[error("model file error: {0}")]
    ModelFormat(String),

    #[error("model file checksum mismatch (file corrupt or truncated)")]
    ModelChecksum,

    #[error("corruption config error: {0}")]
    CorruptionConfig(String),

    #[error("unknown built-in corruption config {0:?}")]
    UnknownCorruptionConfig(String),

    #[error("experiment error: {0}")]
    Experiment(String),
}

fn fmt_line(line: &Option<usize>) -> String {
    match line {
        Some(n) => format!(" of line {n}"),
        None => String::new(),
    }
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for the CLI: distinct per error family.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. } => 3,
            Error::ProfileSchema(_)
            | Error::DuplicateCodepoint { .. }
            | Error::UnknownProfile(_)
            | Error::UnknownScheme { .. }
            | Error::InvalidSplitSpec(_)
            | Error::CorruptionConfig(_)
            | Error::UnknownCorruptionConfig(_)
            | Error::Experiment(_) => 4,
            Error::OrphanMark { .. }
            | Error::TokenMismatch { .. }
            | Error::LineCountMismatch { .. }
            | Error::EmptyCorpus
            | Error::SplitTooSmall { .. }
            | Error::SubsetTargetTooLarge { .. } => 5,
            Error::InvalidOrder(_) => 4,
            Error::ModelFormat(_) | Error::ModelChecksum | Error::ProfileMismatch { .. } => 6,
        }
    }
}
