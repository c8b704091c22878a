//! Label sequences and alignment FSAs for CTC and HMM-0-1 topologies.

mod fsa;
mod labels;

pub use fsa::{
    apply_min_duration, build_ctc_fsa, build_hmm_fsa, AlignmentFsa, FsaArc, SilenceMode,
    StateUnit, Topology, TransitionClass,
};
pub use labels::{
    build_label_sequence, expand_pronunciation, LabelConfig, LabelSequence, LabelSpace,
    LabelUnit, Lexicon, BLANK_NAME, SILENCE_NAME,
};
