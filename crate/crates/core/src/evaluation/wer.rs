//! Word error rate via minimum edit distance.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// WER and edit-operation counts over a corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct WerReport {
    pub substitutions: usize,
    pub insertions: usize,
    pub deletions: usize,
    pub reference_words: usize,
    pub utts: usize,
}

impl WerReport {
    pub fn errors(&self) -> usize {
        self.substitutions + self.insertions + self.deletions
    }

    pub fn percent(&self) -> f64 {
        if self.reference_words == 0 {
            0.0
        } else {
            self.errors() as f64 / self.reference_words as f64 * 100.0
        }
    }
}

/// Unit-cost edit distance with deterministic tie preference
/// substitution > deletion > insertion during backtrace.
fn edit_counts(hyp: &[&str], refr: &[&str]) -> (usize, usize, usize) {
    let n = refr.len();
    let m = hyp.len();
    let mut d = vec![0usize; (n + 1) * (m + 1)];
    let idx = |i: usize, j: usize| i * (m + 1) + j;
    for i in 0..=n {
        d[idx(i, 0)] = i;
    }
    for j in 0..=m {
        d[idx(0, j)] = j;
    }
    for i in 1..=n {
        for j in 1..=m {
            let sub = d[idx(i - 1, j - 1)] + usize::from(refr[i - 1] != hyp[j - 1]);
            let del = d[idx(i - 1, j)] + 1;
            let ins = d[idx(i, j - 1)] + 1;
            d[idx(i, j)] = sub.min(del).min(ins);
        }
    }
    // Backtrace; match/substitution preferred, then deletion, then insertion.
    let (mut i, mut j) = (n, m);
    let (mut s, mut ins, mut del) = (0, 0, 0);
    while i > 0 || j > 0 {
        if i > 0 && j > 0 {
            let sub_cost = usize::from(refr[i - 1] != hyp[j - 1]);
            if d[idx(i, j)] == d[idx(i - 1, j - 1)] + sub_cost {
                s += sub_cost;
                i -= 1;
                j -= 1;
                continue;
            }
        }
        if i > 0 && d[idx(i, j)] == d[idx(i - 1, j)] + 1 {
            del += 1;
            i -= 1;
            continue;
        }
        ins += 1;
        j -= 1;
    }
    (s, ins, del)
}

/// Computes WER over matched utterance ids.
///
/// `WER = (S + I + D) / N * 100` against the reference word counts.
pub fn compute_wer(
    hypotheses: &BTreeMap<String, Vec<String>>,
    references: &BTreeMap<String, Vec<String>>,
) -> Result<WerReport> {
    if references.is_empty() {
        return Err(Error::EmptyReference);
    }
    let mut report =
        WerReport { substitutions: 0, insertions: 0, deletions: 0, reference_words: 0, utts: 0 };
    for (utt, refr) in references {
        let Some(hyp) = hypotheses.get(utt) else {
            continue;
        };
        let hyp_ref: Vec<&str> = hyp.iter().map(|s| s.as_str()).collect();
        let ref_ref: Vec<&str> = refr.iter().map(|s| s.as_str()).collect();
        let (s, i, d) = edit_counts(&hyp_ref, &ref_ref);
        report.substitutions += s;
        report.insertions += i;
        report.deletions += d;
        report.reference_words += refr.len();
        report.utts += 1;
    }
    if report.utts == 0 {
        return Err(Error::NoOverlap);
    }
    Ok(report)
}
