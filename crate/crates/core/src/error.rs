use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A malformed row in an input file. `line` is 1-based.
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("instance `{instance_id}` has scores but no gold tag")]
    MissingGold { instance_id: String },

    /// A constructor rejected its input; `invariant` names the violated rule.
    #[error("invariant violated ({invariant}): {detail}")]
    Invariant {
        invariant: &'static str,
        detail: String,
    },

    #[error("cannot bin an empty set of scores")]
    EmptyInput,

    #[error("invalid bin count {bins} for {items} items (need 1 <= bins <= items)")]
    BinCount { bins: usize, items: usize },

    #[error("invalid fixed-width range [{lo}, {hi}]")]
    Range { lo: f64, hi: f64 },

    #[error("group {group} has no records to fit a recalibrator on")]
    EmptyGroup { group: usize },

    #[error(
        "group {group} has {records} records, fewer than the {bins} bins requested; \
         use a smaller bin count or fewer groups"
    )]
    GroupTooSmall {
        group: usize,
        records: usize,
        bins: usize,
    },

    #[error("invalid group count {groups}: {reason}")]
    GroupCount { groups: usize, reason: String },

    #[error("classes with fewer than {bins} records: {classes:?}")]
    SparseClasses { bins: usize, classes: Vec<String> },

    #[error("relative change is undefined for a baseline of {before}")]
    ZeroBaseline { before: f64 },

    #[error("invalid model: {0}")]
    Model(String),

    #[error("unknown report format `{0}` (expected json, markdown or csv)")]
    Format(String),

    #[error("invalid synthetic-data parameters: {0}")]
    Synth(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invariant(invariant: &'static str, detail: impl Into<String>) -> Self {
        Error::Invariant {
            invariant,
            detail: detail.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
