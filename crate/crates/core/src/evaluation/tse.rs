//! Time-stamp error: mean absolute word-boundary distance in
//! milliseconds against a reference alignment.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::evaluation::align_io::AlignmentSet;

/// Per-utterance boundary errors.
#[derive(Debug, Clone, PartialEq)]
pub struct UttTse {
    pub utt: String,
    pub words: usize,
    pub total_error_ms: f64,
}

/// Aggregated time-stamp error report.
///
/// The mean divides the total absolute error by twice the matched word
/// count, since every word contributes a start and an end boundary.
/// Silence and blank segments never contribute boundaries.
#[derive(Debug, Clone, PartialEq)]
pub struct TseReport {
    pub mean_ms: f64,
    pub words: usize,
    pub per_utt: Vec<UttTse>,
    /// Boundary-error histogram: (bucket lower edge in ms, count) with
    /// 10 ms buckets.
    pub histogram: Vec<(u64, usize)>,
    /// Utterances skipped because the word sequences disagree.
    pub skipped: Vec<String>,
}

/// Compares candidate word boundaries to the reference, in milliseconds.
///
/// Utterances present on both sides with identical word sequences are
/// scored; mismatched utterances are collected in `skipped`. Frame
/// indices convert to milliseconds through each side's own frame shift,
/// so subsampled alignments compare directly against full-rate
/// references.
pub fn compute_tse(candidate: &AlignmentSet, reference: &AlignmentSet) -> Result<TseReport> {
    let mut per_utt = Vec::new();
    let mut skipped = Vec::new();
    let mut total = 0.0f64;
    let mut words = 0usize;
    let mut hist: BTreeMap<u64, usize> = BTreeMap::new();

    let mut any_overlap = false;
    for (utt, cand) in &candidate.utts {
        let Some(refr) = reference.utts.get(utt) else {
            continue;
        };
        any_overlap = true;
        let cand_words: Vec<&str> = cand.words.iter().map(|(w, _, _)| w.as_str()).collect();
        let ref_words: Vec<&str> = refr.words.iter().map(|(w, _, _)| w.as_str()).collect();
        if cand_words != ref_words {
            skipped.push(utt.clone());
            continue;
        }
        let mut utt_total = 0.0;
        for ((_, cs, ce), (_, rs, re)) in cand.words.iter().zip(&refr.words) {
            let cs_ms = *cs as f64 * candidate.frame_shift_ms;
            let ce_ms = *ce as f64 * candidate.frame_shift_ms;
            let rs_ms = *rs as f64 * reference.frame_shift_ms;
            let re_ms = *re as f64 * reference.frame_shift_ms;
            let start_err = (cs_ms - rs_ms).abs();
            let end_err = (ce_ms - re_ms).abs();
            utt_total += start_err + end_err;
            for err in [start_err, end_err] {
                *hist.entry((err / 10.0).floor() as u64 * 10).or_default() += 1;
            }
        }
        total += utt_total;
        words += cand.words.len();
        per_utt.push(UttTse { utt: utt.clone(), words: cand.words.len(), total_error_ms: utt_total });
    }

    if !any_overlap {
        return Err(Error::NoOverlap);
    }
    let mean_ms = if words == 0 { 0.0 } else { total / (2.0 * words as f64) };
    Ok(TseReport {
        mean_ms,
        words,
        per_utt,
        histogram: hist.into_iter().collect(),
        skipped,
    })
}
