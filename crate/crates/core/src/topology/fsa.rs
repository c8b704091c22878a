//! Alignment FSAs for CTC and HMM-0-1 topologies.
//!
//! FSAs are in Mealy form: emission labels sit on arcs, and an accepted
//! alignment of length T is a path of T arcs from an initial to a final
//! state. Time-unrolling happens in the lattice module, so one FSA is
//! reusable across frame counts.
//!
//! Every arc carries a transition class derived from its emitted unit:
//! staying in the same unit is a loop, entering a unit is a forward, and
//! blank arcs form their own class. Minimum-duration surgery duplicates
//! each speech state so its label must be emitted at least k consecutive
//! times; the duplicate-chain arcs keep the loop class so a path's weight
//! depends only on its unit segmentation, never on the surgery.

use crate::error::{Error, Result};
use crate::topology::labels::{LabelSequence, LabelSpace};

/// Pooled transition classes: loop/forward for speech/silence, plus blank.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TransitionClass {
    SpeechForward,
    SpeechLoop,
    SilenceForward,
    SilenceLoop,
    Blank,
}

impl TransitionClass {
    /// Viterbi tie-break priority: forward before loop before
    /// silence/blank. Lower wins.
    pub fn priority(self) -> u8 {
        match self {
            TransitionClass::SpeechForward => 0,
            TransitionClass::SpeechLoop => 1,
            TransitionClass::SilenceForward => 2,
            TransitionClass::SilenceLoop => 3,
            TransitionClass::Blank => 4,
        }
    }
}

/// One FSA transition emitting `label` when traversed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FsaArc {
    pub from: u32,
    pub to: u32,
    /// Emission label index into the owning [`LabelSpace`].
    pub label: u32,
    pub class: TransitionClass,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Topology {
    Ctc,
    Hmm01,
}

/// Optional silence in HMM lattices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SilenceMode {
    None,
    /// Silence may appear before the first word, between words, and
    /// after the last word. Sentence begin/end count as word boundaries.
    WordBoundaries,
}

/// What the arcs entering a state emit; drives segment extraction and
/// minimum-duration surgery.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StateUnit {
    /// Virtual start, nothing emitted yet.
    Start,
    /// Speech unit `unit` of the generating sequence.
    Speech { unit: usize },
    /// Optional silence at word-boundary gap `gap` (0 = sentence begin).
    Silence { gap: usize },
    /// CTC blank at segment boundary `gap` (0 = before the first label).
    Blank { gap: usize },
}

/// Weighted-FSA skeleton of all alignment paths for one utterance.
#[derive(Debug, Clone)]
pub struct AlignmentFsa {
    topology: Topology,
    min_duration: u32,
    num_states: usize,
    arcs: Vec<FsaArc>,
    initial: Vec<u32>,
    finals: Vec<u32>,
    state_units: Vec<StateUnit>,
    seq: LabelSequence,
}

impl AlignmentFsa {
    pub fn topology(&self) -> Topology {
        self.topology
    }

    pub fn min_duration(&self) -> u32 {
        self.min_duration
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn arcs(&self) -> &[FsaArc] {
        &self.arcs
    }

    pub fn initial_states(&self) -> &[u32] {
        &self.initial
    }

    pub fn final_states(&self) -> &[u32] {
        &self.finals
    }

    pub fn is_final(&self, state: u32) -> bool {
        self.finals.binary_search(&state).is_ok()
    }

    pub fn state_unit(&self, state: u32) -> StateUnit {
        self.state_units[state as usize]
    }

    /// The label sequence this FSA was built from.
    pub fn seq(&self) -> &LabelSequence {
        &self.seq
    }

    /// Largest emission label index referenced by any arc, plus one.
    pub fn max_label_bound(&self) -> usize {
        self.arcs.iter().map(|a| a.label as usize + 1).max().unwrap_or(0)
    }

    /// Length of the shortest accepted path, or `None` when the
    /// language is empty at every length.
    pub fn min_frames(&self) -> Option<usize> {
        let mut dist = vec![usize::MAX; self.num_states];
        let mut queue = std::collections::VecDeque::new();
        for &s in &self.initial {
            dist[s as usize] = 0;
            queue.push_back(s);
        }
        let mut best: Option<usize> = None;
        while let Some(s) = queue.pop_front() {
            let d = dist[s as usize];
            if self.is_final(s) {
                best = Some(best.map_or(d, |b| b.min(d)));
            }
            for arc in &self.arcs {
                if arc.from == s && dist[arc.to as usize] == usize::MAX {
                    dist[arc.to as usize] = d + 1;
                    queue.push_back(arc.to);
                }
            }
        }
        best
    }
}

/// Builds the standard CTC lattice: optional blank with a loop at every
/// segment boundary and both sentence ends, a loop on every label, and a
/// mandatory blank between identical consecutive labels.
pub fn build_ctc_fsa(space: &LabelSpace, seq: &LabelSequence) -> AlignmentFsa {
    assert!(!seq.is_empty(), "label sequence must be non-empty");
    let s_len = seq.len();
    let blank = space.blank_index() as u32;
    let label = |i: usize| space.index_of(&seq.units()[i]) as u32;

    // State layout: start = 0, label state for unit i = 2i + 2,
    // blank state at gap g (before unit g) = 2g + 1.
    let num_states = 2 * s_len + 2;
    let start = 0u32;
    let blank_state = |g: usize| (2 * g + 1) as u32;
    let label_state = |i: usize| (2 * i + 2) as u32;

    let mut state_units = vec![StateUnit::Start; num_states];
    for g in 0..=s_len {
        state_units[blank_state(g) as usize] = StateUnit::Blank { gap: g };
    }
    for i in 0..s_len {
        state_units[label_state(i) as usize] = StateUnit::Speech { unit: i };
    }

    let mut arcs = Vec::new();
    arcs.push(FsaArc { from: start, to: blank_state(0), label: blank, class: TransitionClass::Blank });
    arcs.push(FsaArc {
        from: start,
        to: label_state(0),
        label: label(0),
        class: TransitionClass::SpeechForward,
    });
    for i in 0..s_len {
        let l = label_state(i);
        let b_before = blank_state(i);
        let b_after = blank_state(i + 1);
        arcs.push(FsaArc { from: b_before, to: b_before, label: blank, class: TransitionClass::Blank });
        arcs.push(FsaArc {
            from: b_before,
            to: l,
            label: label(i),
            class: TransitionClass::SpeechForward,
        });
        arcs.push(FsaArc { from: l, to: l, label: label(i), class: TransitionClass::SpeechLoop });
        arcs.push(FsaArc { from: l, to: b_after, label: blank, class: TransitionClass::Blank });
        if i + 1 < s_len && label(i) != label(i + 1) {
            arcs.push(FsaArc {
                from: l,
                to: label_state(i + 1),
                label: label(i + 1),
                class: TransitionClass::SpeechForward,
            });
        }
    }
    let last_blank = blank_state(s_len);
    arcs.push(FsaArc { from: last_blank, to: last_blank, label: blank, class: TransitionClass::Blank });

    let mut finals = vec![label_state(s_len - 1), last_blank];
    finals.sort_unstable();

    AlignmentFsa {
        topology: Topology::Ctc,
        min_duration: 1,
        num_states,
        arcs,
        initial: vec![start],
        finals,
        state_units,
        seq: seq.clone(),
    }
}

/// Builds the HMM-0-1 lattice: a loop and a forward on every unit, no
/// skips, with optional silence (loop only) at word boundaries including
/// sentence begin and end.
pub fn build_hmm_fsa(
    space: &LabelSpace,
    seq: &LabelSequence,
    silence: SilenceMode,
) -> AlignmentFsa {
    assert!(!seq.is_empty(), "label sequence must be non-empty");
    let s_len = seq.len();
    let num_words = seq.num_words();
    let sil = space.silence_index() as u32;
    let label = |i: usize| space.index_of(&seq.units()[i]) as u32;

    // State layout: start = 0, unit i = 1 + i, silence for gap g = 1 + S + g.
    let with_sil = silence == SilenceMode::WordBoundaries;
    let num_states = 1 + s_len + if with_sil { num_words + 1 } else { 0 };
    let start = 0u32;
    let unit_state = |i: usize| (1 + i) as u32;
    let sil_state = |g: usize| (1 + s_len + g) as u32;

    let mut state_units = vec![StateUnit::Start; num_states];
    for i in 0..s_len {
        state_units[unit_state(i) as usize] = StateUnit::Speech { unit: i };
    }
    if with_sil {
        for g in 0..=num_words {
            state_units[sil_state(g) as usize] = StateUnit::Silence { gap: g };
        }
    }

    let mut arcs = Vec::new();
    arcs.push(FsaArc {
        from: start,
        to: unit_state(0),
        label: label(0),
        class: TransitionClass::SpeechForward,
    });
    if with_sil {
        let s0 = sil_state(0);
        arcs.push(FsaArc { from: start, to: s0, label: sil, class: TransitionClass::SilenceForward });
        arcs.push(FsaArc { from: s0, to: s0, label: sil, class: TransitionClass::SilenceLoop });
        arcs.push(FsaArc {
            from: s0,
            to: unit_state(0),
            label: label(0),
            class: TransitionClass::SpeechForward,
        });
    }
    for i in 0..s_len {
        let u = unit_state(i);
        arcs.push(FsaArc { from: u, to: u, label: label(i), class: TransitionClass::SpeechLoop });
        if i + 1 < s_len {
            arcs.push(FsaArc {
                from: u,
                to: unit_state(i + 1),
                label: label(i + 1),
                class: TransitionClass::SpeechForward,
            });
        }
    }
    if with_sil {
        // Internal gaps: after word j (1-based), between its last unit and
        // the next word's first unit.
        for (j, &end) in seq.word_ends().iter().enumerate() {
            if end == s_len {
                break;
            }
            let gap = j + 1;
            let s = sil_state(gap);
            let prev = unit_state(end - 1);
            let next = unit_state(end);
            arcs.push(FsaArc { from: prev, to: s, label: sil, class: TransitionClass::SilenceForward });
            arcs.push(FsaArc { from: s, to: s, label: sil, class: TransitionClass::SilenceLoop });
            arcs.push(FsaArc {
                from: s,
                to: next,
                label: label(end),
                class: TransitionClass::SpeechForward,
            });
        }
        let s_end = sil_state(num_words);
        arcs.push(FsaArc {
            from: unit_state(s_len - 1),
            to: s_end,
            label: sil,
            class: TransitionClass::SilenceForward,
        });
        arcs.push(FsaArc { from: s_end, to: s_end, label: sil, class: TransitionClass::SilenceLoop });
    }

    let mut finals = vec![unit_state(s_len - 1)];
    if with_sil {
        finals.push(sil_state(num_words));
    }
    finals.sort_unstable();

    AlignmentFsa {
        topology: Topology::Hmm01,
        min_duration: 1,
        num_states,
        arcs,
        initial: vec![start],
        finals,
        state_units,
        seq: seq.clone(),
    }
}

/// Rebuilds `fsa` so every speech unit is emitted at least `k`
/// consecutive times. Silence and blank keep free loops with duration
/// at least one frame. `k = 1` returns the input unchanged.
///
/// Each speech state is split into a chain of `k` copies; entering arcs
/// land on the first copy, loops and exits stay on the last, and the
/// chain arcs emit the unit's label with the loop class.
pub fn apply_min_duration(fsa: &AlignmentFsa, k: u32) -> Result<AlignmentFsa> {
    if k < 1 {
        return Err(Error::InvalidMinDuration(k));
    }
    if k == 1 {
        return Ok(fsa.clone());
    }
    let mut out = fsa.clone();
    out.min_duration = fsa.min_duration.max(k);

    let orig_states = fsa.num_states;
    for s in 0..orig_states as u32 {
        let StateUnit::Speech { unit } = fsa.state_units[s as usize] else {
            continue;
        };
        let label = fsa
            .arcs
            .iter()
            .find(|a| a.to == s)
            .map(|a| a.label)
            .expect("speech state has an entering arc");

        // Chain of k-1 fresh copies; the original state stays the mature
        // end of the chain so loops, exits, and finality need no rewiring.
        let first_copy = out.num_states as u32;
        for c in 0..k - 1 {
            out.state_units.push(StateUnit::Speech { unit });
            let this = first_copy + c;
            let next = if c + 1 < k - 1 { this + 1 } else { s };
            out.arcs.push(FsaArc { from: this, to: next, label, class: TransitionClass::SpeechLoop });
        }
        out.num_states += (k - 1) as usize;
        for arc in out.arcs.iter_mut() {
            if arc.to == s && arc.from != s && arc.from < orig_states as u32 {
                arc.to = first_copy;
            }
        }
    }
    Ok(out)
}
