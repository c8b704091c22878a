//! Alignment-quality and accuracy metrics: time-stamp error against a
//! reference alignment, word error rate, and alignment plots.

mod align_io;
mod plot;
mod tse;
mod wer;

pub use align_io::{read_alignments, write_alignments, AlignmentSet, UttAlignment};
pub use plot::{emit_alignment_plot, render_alignment_svg};
pub use tse::{compute_tse, TseReport, UttTse};
pub use wer::{compute_wer, WerReport};
