//! Log-semiring dynamic programming over time-unrolled alignment FSAs.
//!
//! The FSA stays static; frames iterate over it, so memory is O(states)
//! per frame plus O(T x states) where backtraces or the backward pass
//! need history.

mod container;

pub use container::{
    read_frame_scores, read_hard_alignment, read_soft_alignment, write_frame_scores,
    write_hard_alignment, write_soft_alignment, FRAME_SCORES_MAGIC, HARD_ALIGNMENT_MAGIC,
    SOFT_ALIGNMENT_MAGIC,
};

use crate::error::{Error, Result};
use crate::logmath::{log_add, log_sum};
use crate::topology::{AlignmentFsa, FsaArc, StateUnit};

/// T x L matrix of per-frame label log-scores.
///
/// Entries must be finite or `-inf`; a row with no finite entry is
/// rejected at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameScores {
    num_frames: usize,
    num_labels: usize,
    frame_shift_ms: f32,
    data: Vec<f64>,
}

pub const DEFAULT_FRAME_SHIFT_MS: f32 = 10.0;

impl FrameScores {
    pub fn new(
        num_frames: usize,
        num_labels: usize,
        frame_shift_ms: f32,
        data: Vec<f64>,
    ) -> Result<Self> {
        assert!(num_frames >= 1 && num_labels >= 1, "scores must be non-empty");
        assert_eq!(data.len(), num_frames * num_labels, "data length mismatch");
        for (i, &v) in data.iter().enumerate() {
            if v.is_nan() || v == f64::INFINITY {
                return Err(Error::InvalidScoreEntry {
                    row: i / num_labels,
                    col: i % num_labels,
                    value: v,
                });
            }
        }
        for (row, chunk) in data.chunks(num_labels).enumerate() {
            if chunk.iter().all(|&v| v == f64::NEG_INFINITY) {
                return Err(Error::InvalidScoreRow { row });
            }
        }
        Ok(FrameScores { num_frames, num_labels, frame_shift_ms, data })
    }

    pub fn num_frames(&self) -> usize {
        self.num_frames
    }

    pub fn num_labels(&self) -> usize {
        self.num_labels
    }

    pub fn frame_shift_ms(&self) -> f32 {
        self.frame_shift_ms
    }

    pub fn row(&self, t: usize) -> &[f64] {
        &self.data[t * self.num_labels..(t + 1) * self.num_labels]
    }

    pub fn get(&self, t: usize, label: usize) -> f64 {
        self.data[t * self.num_labels + label]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }
}

/// Per-arc log-weight at a frame, combining the emission score with any
/// transition or prior terms. Supplied by the models module; closures
/// work for tests.
pub trait ArcWeight {
    fn log_weight(&self, scores: &FrameScores, t: usize, arc: &FsaArc) -> f64;
}

impl<F> ArcWeight for F
where
    F: Fn(&FrameScores, usize, &FsaArc) -> f64,
{
    fn log_weight(&self, scores: &FrameScores, t: usize, arc: &FsaArc) -> f64 {
        self(scores, t, arc)
    }
}

/// Weight function that uses the emission score alone.
#[derive(Debug, Clone, Copy)]
pub struct EmissionOnly;

impl ArcWeight for EmissionOnly {
    fn log_weight(&self, scores: &FrameScores, t: usize, arc: &FsaArc) -> f64 {
        scores.get(t, arc.label as usize)
    }
}

fn check_labels(fsa: &AlignmentFsa, scores: &FrameScores) -> Result<()> {
    let bound = fsa.max_label_bound();
    if bound > scores.num_labels() {
        return Err(Error::LabelOutOfRange { label: bound - 1, labels: scores.num_labels() });
    }
    Ok(())
}

/// Log path-sum over all accepted alignments of length T.
///
/// Returns `-inf` when the FSA language at length T is empty.
pub fn forward_score<W: ArcWeight + ?Sized>(
    fsa: &AlignmentFsa,
    scores: &FrameScores,
    weights: &W,
) -> Result<f64> {
    check_labels(fsa, scores)?;
    let n = fsa.num_states();
    let mut alpha = vec![f64::NEG_INFINITY; n];
    for &s in fsa.initial_states() {
        alpha[s as usize] = 0.0;
    }
    let mut next = vec![f64::NEG_INFINITY; n];
    for t in 0..scores.num_frames() {
        next.iter_mut().for_each(|v| *v = f64::NEG_INFINITY);
        for arc in fsa.arcs() {
            let a = alpha[arc.from as usize];
            if a == f64::NEG_INFINITY {
                continue;
            }
            let w = weights.log_weight(scores, t, arc);
            let tgt = &mut next[arc.to as usize];
            *tgt = log_add(*tgt, a + w);
        }
        std::mem::swap(&mut alpha, &mut next);
    }
    Ok(log_sum(
        &fsa.final_states().iter().map(|&s| alpha[s as usize]).collect::<Vec<_>>(),
    ))
}

fn forward_alphas<W: ArcWeight + ?Sized>(
    fsa: &AlignmentFsa,
    scores: &FrameScores,
    weights: &W,
) -> Vec<Vec<f64>> {
    let n = fsa.num_states();
    let t_max = scores.num_frames();
    let mut alphas = Vec::with_capacity(t_max + 1);
    let mut alpha = vec![f64::NEG_INFINITY; n];
    for &s in fsa.initial_states() {
        alpha[s as usize] = 0.0;
    }
    alphas.push(alpha.clone());
    for t in 0..t_max {
        let mut next = vec![f64::NEG_INFINITY; n];
        for arc in fsa.arcs() {
            let a = alpha[arc.from as usize];
            if a == f64::NEG_INFINITY {
                continue;
            }
            let w = weights.log_weight(scores, t, arc);
            let tgt = &mut next[arc.to as usize];
            *tgt = log_add(*tgt, a + w);
        }
        alphas.push(next.clone());
        alpha = next;
    }
    alphas
}

/// Occupation probabilities q_t: the probability mass of all alignment
/// paths passing through each emission label at each frame.
///
/// Rows are restricted to reachable labels and sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftAlignment {
    num_frames: usize,
    num_labels: usize,
    frame_shift_ms: f32,
    data: Vec<f64>,
}

impl SoftAlignment {
    pub fn from_parts(
        num_frames: usize,
        num_labels: usize,
        frame_shift_ms: f32,
        data: Vec<f64>,
    ) -> Self {
        assert_eq!(data.len(), num_frames * num_labels);
        SoftAlignment { num_frames, num_labels, frame_shift_ms, data }
    }

    pub fn num_frames(&self) -> usize {
        self.num_frames
    }

    pub fn num_labels(&self) -> usize {
        self.num_labels
    }

    pub fn frame_shift_ms(&self) -> f32 {
        self.frame_shift_ms
    }

    pub fn row(&self, t: usize) -> &[f64] {
        &self.data[t * self.num_labels..(t + 1) * self.num_labels]
    }

    pub fn get(&self, t: usize, label: usize) -> f64 {
        self.data[t * self.num_labels + label]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Checks every row sums to one within `tol`.
    pub fn validate_rows(&self, tol: f64) -> Result<()> {
        for t in 0..self.num_frames {
            let sum: f64 = self.row(t).iter().sum();
            if (sum - 1.0).abs() > tol {
                return Err(Error::InvalidProbability(format!(
                    "occupation row {t} sums to {sum}, expected 1"
                )));
            }
        }
        Ok(())
    }
}

/// Forward-backward occupation probabilities.
///
/// Fails with `NoAlignmentPath` when the lattice language is empty at
/// this frame count.
pub fn occupation_probabilities<W: ArcWeight + ?Sized>(
    fsa: &AlignmentFsa,
    scores: &FrameScores,
    weights: &W,
) -> Result<SoftAlignment> {
    check_labels(fsa, scores)?;
    let n = fsa.num_states();
    let t_max = scores.num_frames();
    let l = scores.num_labels();

    let alphas = forward_alphas(fsa, scores, weights);
    let total = log_sum(
        &fsa.final_states().iter().map(|&s| alphas[t_max][s as usize]).collect::<Vec<_>>(),
    );
    if total == f64::NEG_INFINITY {
        return Err(Error::EmptyLattice {
            utt: String::new(),
            frames: t_max,
            min_frames: fsa.min_frames().unwrap_or(usize::MAX),
        });
    }

    let mut q = vec![0.0f64; t_max * l];
    let mut beta = vec![f64::NEG_INFINITY; n];
    for &s in fsa.final_states() {
        beta[s as usize] = 0.0;
    }
    for t in (0..t_max).rev() {
        let mut prev_beta = vec![f64::NEG_INFINITY; n];
        let alpha_t = &alphas[t];
        for arc in fsa.arcs() {
            let b = beta[arc.to as usize];
            if b == f64::NEG_INFINITY {
                continue;
            }
            let w = weights.log_weight(scores, t, arc);
            let src = &mut prev_beta[arc.from as usize];
            *src = log_add(*src, w + b);
            let a = alpha_t[arc.from as usize];
            if a == f64::NEG_INFINITY {
                continue;
            }
            let mass = a + w + b - total;
            if mass > f64::NEG_INFINITY {
                q[t * l + arc.label as usize] += mass.exp();
            }
        }
        beta = prev_beta;
    }
    Ok(SoftAlignment::from_parts(t_max, l, scores.frame_shift_ms(), q))
}

/// Log path mass per frame: logsumexp over arcs of fwd + weight + bwd.
///
/// Every entry equals the forward score on a consistent lattice; used as
/// a forward-backward cross-check.
pub fn frame_path_mass<W: ArcWeight + ?Sized>(
    fsa: &AlignmentFsa,
    scores: &FrameScores,
    weights: &W,
) -> Result<Vec<f64>> {
    check_labels(fsa, scores)?;
    let n = fsa.num_states();
    let t_max = scores.num_frames();
    let alphas = forward_alphas(fsa, scores, weights);
    let mut out = vec![f64::NEG_INFINITY; t_max];
    let mut beta = vec![f64::NEG_INFINITY; n];
    for &s in fsa.final_states() {
        beta[s as usize] = 0.0;
    }
    for t in (0..t_max).rev() {
        let mut prev_beta = vec![f64::NEG_INFINITY; n];
        for arc in fsa.arcs() {
            let b = beta[arc.to as usize];
            if b == f64::NEG_INFINITY {
                continue;
            }
            let w = weights.log_weight(scores, t, arc);
            let src = &mut prev_beta[arc.from as usize];
            *src = log_add(*src, w + b);
            let a = alphas[t][arc.from as usize];
            if a > f64::NEG_INFINITY {
                out[t] = log_add(out[t], a + w + b);
            }
        }
        beta = prev_beta;
    }
    Ok(out)
}

/// Segment kinds in a hard alignment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SegmentKind {
    Phoneme,
    Silence,
    Blank,
}

/// One maximal run of frames emitted by the same lattice unit.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelSegment {
    pub label: u32,
    pub kind: SegmentKind,
    /// First frame, inclusive.
    pub start: usize,
    /// End frame, exclusive.
    pub end: usize,
}

/// Frames covered by one transcript word.
#[derive(Debug, Clone, PartialEq)]
pub struct WordSegment {
    pub word: String,
    pub start: usize,
    pub end: usize,
}

/// Viterbi forced alignment: one emission label per frame plus derived
/// label and word segments.
#[derive(Debug, Clone, PartialEq)]
pub struct HardAlignment {
    pub labels: Vec<u32>,
    pub label_segments: Vec<LabelSegment>,
    pub word_segments: Vec<WordSegment>,
    pub frame_shift_ms: f32,
}

/// Best-path decoding over the lattice.
///
/// The recursion runs backward over frames and the path is rebuilt
/// forward, so ties resolve by what the path does next: higher score
/// first, then the arc class (forward before loop before silence and
/// blank), then the lower target-state index. On ties the alignment
/// therefore takes forward transitions as early as possible. The
/// initial state with the lowest index wins among equal scores.
pub fn viterbi<W: ArcWeight + ?Sized>(
    fsa: &AlignmentFsa,
    scores: &FrameScores,
    weights: &W,
) -> Result<(f64, HardAlignment)> {
    check_labels(fsa, scores)?;
    let n = fsa.num_states();
    let t_max = scores.num_frames();

    // delta[t][s]: best score of completing the path from state s with
    // frames t..T. choice[t][s]: the outgoing arc achieving it.
    let mut delta = vec![f64::NEG_INFINITY; n];
    for &s in fsa.final_states() {
        delta[s as usize] = 0.0;
    }
    let mut choice = vec![u32::MAX; t_max * n];
    let mut prev = vec![f64::NEG_INFINITY; n];
    for t in (0..t_max).rev() {
        prev.iter_mut().for_each(|v| *v = f64::NEG_INFINITY);
        let choice_row = &mut choice[t * n..(t + 1) * n];
        for (idx, arc) in fsa.arcs().iter().enumerate() {
            let tail = delta[arc.to as usize];
            if tail == f64::NEG_INFINITY {
                continue;
            }
            let cand = weights.log_weight(scores, t, arc) + tail;
            if cand == f64::NEG_INFINITY {
                continue;
            }
            let src = arc.from as usize;
            let better = if cand > prev[src] {
                true
            } else if cand == prev[src] && choice_row[src] != u32::MAX {
                let cur = &fsa.arcs()[choice_row[src] as usize];
                (arc.class.priority(), arc.to, idx as u32)
                    < (cur.class.priority(), cur.to, choice_row[src])
            } else {
                false
            };
            if better {
                prev[src] = cand;
                choice_row[src] = idx as u32;
            }
        }
        std::mem::swap(&mut delta, &mut prev);
    }

    let mut start = None;
    let mut best_score = f64::NEG_INFINITY;
    for &s in fsa.initial_states() {
        let v = delta[s as usize];
        if v > best_score {
            best_score = v;
            start = Some(s);
        }
    }
    let Some(mut state) = start else {
        return Err(Error::EmptyLattice {
            utt: String::new(),
            frames: t_max,
            min_frames: fsa.min_frames().unwrap_or(usize::MAX),
        });
    };

    let mut path_arcs = vec![u32::MAX; t_max];
    for (t, slot) in path_arcs.iter_mut().enumerate() {
        let arc_idx = choice[t * n + state as usize];
        debug_assert_ne!(arc_idx, u32::MAX);
        *slot = arc_idx;
        state = fsa.arcs()[arc_idx as usize].to;
    }

    let alignment = alignment_from_path(fsa, &path_arcs, scores.frame_shift_ms());
    Ok((best_score, alignment))
}

fn alignment_from_path(fsa: &AlignmentFsa, path_arcs: &[u32], frame_shift_ms: f32) -> HardAlignment {
    let arcs = fsa.arcs();
    let labels: Vec<u32> = path_arcs.iter().map(|&i| arcs[i as usize].label).collect();

    let mut label_segments: Vec<LabelSegment> = Vec::new();
    let mut units: Vec<StateUnit> = Vec::with_capacity(path_arcs.len());
    for &i in path_arcs {
        units.push(fsa.state_unit(arcs[i as usize].to));
    }
    let mut t = 0;
    while t < units.len() {
        let unit = units[t];
        let start = t;
        while t < units.len() && units[t] == unit {
            t += 1;
        }
        let kind = match unit {
            StateUnit::Speech { .. } => SegmentKind::Phoneme,
            StateUnit::Silence { .. } => SegmentKind::Silence,
            StateUnit::Blank { .. } => SegmentKind::Blank,
            StateUnit::Start => unreachable!("start state has no entering arc"),
        };
        label_segments.push(LabelSegment { label: labels[start], kind, start, end: t });
    }

    // Word segments: first to last speech frame of the units each word
    // owns. CTC blanks between a word's labels fall inside the span;
    // silence and boundary blanks fall outside.
    let seq = fsa.seq();
    let mut spans: Vec<Option<(usize, usize)>> = vec![None; seq.num_words()];
    for (t, unit) in units.iter().enumerate() {
        if let StateUnit::Speech { unit: u } = unit {
            let w = seq.word_of_unit(*u);
            let span = spans[w].get_or_insert((t, t + 1));
            span.1 = t + 1;
        }
    }
    let word_segments: Vec<WordSegment> = spans
        .iter()
        .enumerate()
        .filter_map(|(w, s)| {
            s.map(|(start, end)| WordSegment { word: seq.words()[w].clone(), start, end })
        })
        .collect();

    HardAlignment { labels, label_segments, word_segments, frame_shift_ms }
}

/// Elementwise max over rows of a row-major matrix, in windows of
/// `factor` rows; the trailing window may be shorter.
pub fn max_pool_rows(data: &[f64], rows: usize, cols: usize, factor: usize) -> Vec<f64> {
    assert!(factor >= 1);
    let out_rows = rows.div_ceil(factor);
    let mut out = vec![f64::NEG_INFINITY; out_rows * cols];
    for r in 0..rows {
        let o = r / factor;
        for c in 0..cols {
            let v = data[r * cols + c];
            let slot = &mut out[o * cols + c];
            if v > *slot {
                *slot = v;
            }
        }
    }
    out
}

/// Max-pooling subsampling: T' = ceil(T / factor), frame shift scaled by
/// the factor.
pub fn subsample_scores(scores: &FrameScores, factor: u32) -> Result<FrameScores> {
    if factor < 1 {
        return Err(Error::InvalidSubsampleFactor(factor));
    }
    if factor == 1 {
        return Ok(scores.clone());
    }
    let pooled = max_pool_rows(
        scores.data(),
        scores.num_frames(),
        scores.num_labels(),
        factor as usize,
    );
    FrameScores::new(
        scores.num_frames().div_ceil(factor as usize),
        scores.num_labels(),
        scores.frame_shift_ms() * factor as f32,
        pooled,
    )
}
