//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown word `{word}` in utterance `{utt}`")]
    UnknownWord { word: String, utt: String },

    #[error("empty transcript in utterance `{utt}`")]
    EmptyTranscript { utt: String },

    #[error("minimum duration must be >= 1, got {0}")]
    InvalidMinDuration(u32),

    #[error("subsample factor must be >= 1, got {0}")]
    InvalidSubsampleFactor(u32),

    #[error("frame scores row {row} has no finite entry")]
    InvalidScoreRow { row: usize },

    #[error("frame scores entry ({row}, {col}) is {value} (must be finite or -inf)")]
    InvalidScoreEntry { row: usize, col: usize, value: f64 },

    #[error("arc emission label {label} out of range for {labels} emission labels")]
    LabelOutOfRange { label: usize, labels: usize },

    #[error("no alignment path for utterance `{utt}`: T={frames} frames, lattice needs at least {min_frames}")]
    EmptyLattice {
        utt: String,
        frames: usize,
        min_frames: usize,
    },

    #[error("model variant `{variant}` requires a {missing}")]
    MissingModelComponent {
        variant: &'static str,
        missing: &'static str,
    },

    #[error("invalid probability table: {0}")]
    InvalidProbability(String),

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    #[error("bad file format in `{path}`: {msg}")]
    Format { path: String, msg: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("no complete hypothesis survived the beam (width {beam}); retry with a larger beam")]
    BeamExhausted { beam: f64 },

    #[error("no overlapping utterances between candidate and reference")]
    NoOverlap,

    #[error("empty reference corpus")]
    EmptyReference,

    #[error("inconsistent frame counts: {0}")]
    FrameMismatch(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
