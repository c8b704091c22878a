//! Time-synchronous Viterbi decoding over a lexical prefix tree with an
//! n-gram language model.
//!
//! The graph shares common expanded-unit prefixes across words. Word
//! identity is resolved by epsilon word-end transitions back to a
//! re-entry root, where the language model weight applies. CTC graphs
//! insert optional blank states (mandatory between identical adjacent
//! labels, also across word boundaries); HMM graphs add unit loops and
//! optional silence at word boundaries including sentence begin and end.

mod arpa;

pub use arpa::{NGramLm, SENT_BEGIN, SENT_END};

use std::collections::{BTreeMap, HashMap};

use crate::error::{Error, Result};
use crate::lattice::FrameScores;
use crate::models::{PriorModel, Scales, TransitionModel, VariantKind};
use crate::topology::{expand_pronunciation, LabelSpace, Lexicon, Topology, TransitionClass};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GraphArc {
    pub from: u32,
    pub to: u32,
    pub label: u32,
    pub class: TransitionClass,
}

/// Epsilon word-completion: a hypothesis at `state` may commit `word`
/// and continue from `to`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WordEnd {
    pub state: u32,
    pub word: u32,
    pub to: u32,
}

/// Static decoding graph: lexical prefix tree composed with the
/// topology's blank/silence structure.
#[derive(Debug, Clone)]
pub struct DecodingGraph {
    topology: Topology,
    num_states: usize,
    arcs: Vec<GraphArc>,
    arcs_from: Vec<Vec<u32>>,
    word_ends: Vec<WordEnd>,
    start: u32,
    finals: Vec<u32>,
    /// Sorted word strings; ids are therefore in lexicographic order.
    words: Vec<String>,
    num_labels: usize,
}

impl DecodingGraph {
    pub fn topology(&self) -> Topology {
        self.topology
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn arcs(&self) -> &[GraphArc] {
        &self.arcs
    }

    pub fn word_ends(&self) -> &[WordEnd] {
        &self.word_ends
    }

    pub fn start(&self) -> u32 {
        self.start
    }

    pub fn final_states(&self) -> &[u32] {
        &self.finals
    }

    pub fn is_final(&self, state: u32) -> bool {
        self.finals.binary_search(&state).is_ok()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn num_labels(&self) -> usize {
        self.num_labels
    }
}

struct GraphBuilder {
    arcs: Vec<GraphArc>,
    num_states: usize,
}

impl GraphBuilder {
    fn new() -> Self {
        GraphBuilder { arcs: Vec::new(), num_states: 0 }
    }

    fn state(&mut self) -> u32 {
        self.num_states += 1;
        (self.num_states - 1) as u32
    }

    fn arc(&mut self, from: u32, to: u32, label: u32, class: TransitionClass) {
        self.arcs.push(GraphArc { from, to, label, class });
    }
}

/// Builds the decoding graph for a lexicon under the variant's topology.
pub fn build_decoding_graph(
    lexicon: &Lexicon,
    space: &LabelSpace,
    variant: VariantKind,
) -> Result<DecodingGraph> {
    if lexicon.num_words() == 0 {
        return Err(Error::Config("empty lexicon".into()));
    }
    let mut words: Vec<String> = lexicon.words().cloned().collect();
    words.sort();

    let expansions: Vec<Vec<u32>> = words
        .iter()
        .map(|w| {
            let pron = lexicon.pronunciation(w).expect("word exists");
            expand_pronunciation(pron, space.config(), true)
                .iter()
                .map(|u| space.index_of(u) as u32)
                .collect()
        })
        .collect();

    match variant.topology() {
        Topology::Hmm01 => build_hmm_graph(space, &words, &expansions),
        Topology::Ctc => build_ctc_graph(space, &words, &expansions),
    }
}

/// Shared prefix tree over expanded unit sequences. Returns per-node
/// (unit label, parent) with node 0 reserved for the virtual root, plus
/// each word's final node.
fn build_trie(expansions: &[Vec<u32>]) -> (Vec<(u32, usize)>, Vec<usize>) {
    let mut nodes: Vec<(u32, usize)> = vec![(u32::MAX, 0)];
    let mut children: Vec<BTreeMap<u32, usize>> = vec![BTreeMap::new()];
    let mut word_nodes = Vec::with_capacity(expansions.len());
    for units in expansions {
        let mut at = 0usize;
        for &label in units {
            at = match children[at].get(&label) {
                Some(&n) => n,
                None => {
                    let n = nodes.len();
                    nodes.push((label, at));
                    children.push(BTreeMap::new());
                    children[at].insert(label, n);
                    n
                }
            };
        }
        word_nodes.push(at);
    }
    (nodes, word_nodes)
}

fn build_hmm_graph(
    space: &LabelSpace,
    words: &[String],
    expansions: &[Vec<u32>],
) -> Result<DecodingGraph> {
    let sil = space.silence_index() as u32;
    let mut b = GraphBuilder::new();
    let root0 = b.state();
    let sil_begin = b.state();
    let root_ret = b.state();
    let sil_mid = b.state();
    b.arc(root0, sil_begin, sil, TransitionClass::SilenceForward);
    b.arc(sil_begin, sil_begin, sil, TransitionClass::SilenceLoop);
    b.arc(root_ret, sil_mid, sil, TransitionClass::SilenceForward);
    b.arc(sil_mid, sil_mid, sil, TransitionClass::SilenceLoop);

    let (trie, word_nodes) = build_trie(expansions);
    // Trie node i >= 1 becomes graph state base + i - 1.
    let base = b.num_states as u32;
    let state_of = |node: usize| base + node as u32 - 1;
    for (i, &(label, parent)) in trie.iter().enumerate().skip(1) {
        let s = b.state();
        debug_assert_eq!(s, state_of(i));
        b.arc(s, s, label, TransitionClass::SpeechLoop);
        if parent == 0 {
            for entry in [root0, sil_begin, root_ret, sil_mid] {
                b.arc(entry, s, label, TransitionClass::SpeechForward);
            }
        } else {
            b.arc(state_of(parent), s, label, TransitionClass::SpeechForward);
        }
    }

    let word_ends: Vec<WordEnd> = word_nodes
        .iter()
        .enumerate()
        .map(|(w, &node)| WordEnd { state: state_of(node), word: w as u32, to: root_ret })
        .collect();

    finish_graph(b, Topology::Hmm01, root0, vec![root_ret, sil_mid], word_ends, words, space)
}

fn build_ctc_graph(
    space: &LabelSpace,
    words: &[String],
    expansions: &[Vec<u32>],
) -> Result<DecodingGraph> {
    let blank = space.blank_index() as u32;
    let mut b = GraphBuilder::new();
    let root0 = b.state();
    let blank_pre = b.state();
    let blank_mid = b.state();
    b.arc(root0, blank_pre, blank, TransitionClass::Blank);
    b.arc(blank_pre, blank_pre, blank, TransitionClass::Blank);
    b.arc(blank_mid, blank_mid, blank, TransitionClass::Blank);

    let (trie, word_nodes) = build_trie(expansions);
    let base = b.num_states as u32;
    let state_of = |node: usize| base + node as u32 - 1;
    for (i, _) in trie.iter().enumerate().skip(1) {
        let s = b.state();
        debug_assert_eq!(s, state_of(i));
    }

    // Re-entry roots per distinct word-final label, in label order.
    let mut ret_after: BTreeMap<u32, u32> = BTreeMap::new();
    for &node in &word_nodes {
        let label = trie[node].0;
        ret_after.entry(label).or_insert_with(|| b.state());
    }
    // In-word blank states after nodes with children.
    let mut has_children = vec![false; trie.len()];
    for &(_, parent) in trie.iter().skip(1) {
        has_children[parent] = true;
    }
    let mut blank_after: BTreeMap<usize, u32> = BTreeMap::new();
    for (i, &hc) in has_children.iter().enumerate().skip(1) {
        if hc {
            blank_after.insert(i, b.state());
        }
    }

    for (i, &(label, parent)) in trie.iter().enumerate().skip(1) {
        let s = state_of(i);
        b.arc(s, s, label, TransitionClass::SpeechLoop);
        if parent == 0 {
            for entry in [root0, blank_pre, blank_mid] {
                b.arc(entry, s, label, TransitionClass::SpeechForward);
            }
            for (&last_label, &ret) in &ret_after {
                if last_label != label {
                    b.arc(ret, s, label, TransitionClass::SpeechForward);
                }
            }
        } else {
            let p = state_of(parent);
            if trie[parent].0 != label {
                b.arc(p, s, label, TransitionClass::SpeechForward);
            }
            let bs = blank_after[&parent];
            b.arc(bs, s, label, TransitionClass::SpeechForward);
        }
    }
    for (&node, &bs) in &blank_after {
        b.arc(state_of(node), bs, blank, TransitionClass::Blank);
        b.arc(bs, bs, blank, TransitionClass::Blank);
    }
    for (&last_label, &ret) in &ret_after {
        let _ = last_label;
        b.arc(ret, blank_mid, blank, TransitionClass::Blank);
    }

    let word_ends: Vec<WordEnd> = word_nodes
        .iter()
        .enumerate()
        .map(|(w, &node)| WordEnd {
            state: state_of(node),
            word: w as u32,
            to: ret_after[&trie[node].0],
        })
        .collect();

    let mut finals: Vec<u32> = ret_after.values().copied().collect();
    finals.push(blank_mid);
    finish_graph(b, Topology::Ctc, root0, finals, word_ends, words, space)
}

fn finish_graph(
    b: GraphBuilder,
    topology: Topology,
    start: u32,
    mut finals: Vec<u32>,
    word_ends: Vec<WordEnd>,
    words: &[String],
    space: &LabelSpace,
) -> Result<DecodingGraph> {
    finals.sort_unstable();
    finals.dedup();
    let mut arcs_from = vec![Vec::new(); b.num_states];
    for (i, arc) in b.arcs.iter().enumerate() {
        arcs_from[arc.from as usize].push(i as u32);
    }
    Ok(DecodingGraph {
        topology,
        num_states: b.num_states,
        arcs: b.arcs,
        arcs_from,
        word_ends,
        start,
        finals,
        words: words.to_vec(),
        num_labels: space.len(),
    })
}

/// Decoding output: best word sequence and its total log score.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodeResult {
    pub words: Vec<String>,
    pub score: f64,
}

#[derive(Debug, Clone)]
struct Hyp {
    score: f64,
    /// Graph word ids; ids are lexicographically ordered, so sequence
    /// comparison doubles as the word-order tie-break.
    words: Vec<u32>,
}

#[inline]
fn scaled(scale: f64, log_value: f64) -> f64 {
    if scale == 0.0 {
        0.0
    } else {
        scale * log_value
    }
}

fn better(candidate: &Hyp, incumbent: &Hyp) -> bool {
    candidate.score > incumbent.score
        || (candidate.score == incumbent.score && candidate.words < incumbent.words)
}

/// Time-synchronous Viterbi search for the best word sequence.
///
/// With an infinite beam the search is exact over (word sequence,
/// alignment) pairs at the language model's order. The per-frame weight
/// is `gamma*log P - alpha*log prior (+ beta*log T on HMM graphs)`; the
/// language model applies at word ends and sentence end with scale
/// lambda. A zero scale disables its term. Beam pruning keeps
/// hypotheses within `beam` of the per-frame best score.
pub fn decode(
    posteriors: &FrameScores,
    graph: &DecodingGraph,
    lm: &NGramLm,
    scales: &Scales,
    prior: Option<&PriorModel>,
    transitions: Option<&TransitionModel>,
    beam: f64,
) -> Result<DecodeResult> {
    if posteriors.num_labels() < graph.num_labels() {
        return Err(Error::LabelOutOfRange {
            label: graph.num_labels() - 1,
            labels: posteriors.num_labels(),
        });
    }
    if scales.alpha > 0.0 && prior.is_none() {
        return Err(Error::MissingModelComponent { variant: "decode", missing: "prior model" });
    }
    let use_transitions = graph.topology() == Topology::Hmm01 && scales.beta > 0.0;
    if use_transitions && transitions.is_none() {
        return Err(Error::MissingModelComponent {
            variant: "decode",
            missing: "transition model",
        });
    }
    if !(beam.is_sign_positive() && beam > 0.0) {
        return Err(Error::Config(format!("beam must be positive, got {beam}")));
    }
    let sent_begin = lm
        .sent_begin()
        .ok_or_else(|| Error::Config(format!("language model lacks `{SENT_BEGIN}`")))?;
    let sent_end = lm
        .sent_end()
        .ok_or_else(|| Error::Config(format!("language model lacks `{SENT_END}`")))?;
    let lm_ids: Vec<u32> = graph
        .words()
        .iter()
        .map(|w| {
            lm.word_id(w).ok_or_else(|| {
                Error::Config(format!("word `{w}` missing from the language model"))
            })
        })
        .collect::<Result<_>>()?;

    let arc_weight = |t: usize, arc: &GraphArc| -> f64 {
        let mut w = scaled(scales.gamma, posteriors.get(t, arc.label as usize));
        if scales.alpha > 0.0 {
            w -= scaled(scales.alpha, prior.unwrap().log_prob(arc.label as usize));
        }
        if use_transitions {
            w += scaled(scales.beta, transitions.unwrap().log_prob(arc.class));
        }
        w
    };

    let mut current: HashMap<(u32, u32), Hyp> = HashMap::new();
    current.insert((graph.start(), sent_begin), Hyp { score: 0.0, words: Vec::new() });

    let mut next: HashMap<(u32, u32), Hyp> = HashMap::new();
    for t in 0..posteriors.num_frames() {
        next.clear();
        for ((state, hist), hyp) in &current {
            for &ai in &graph.arcs_from[*state as usize] {
                let arc = &graph.arcs[ai as usize];
                let cand = Hyp { score: hyp.score + arc_weight(t, arc), words: hyp.words.clone() };
                if cand.score == f64::NEG_INFINITY {
                    continue;
                }
                match next.entry((arc.to, *hist)) {
                    std::collections::hash_map::Entry::Occupied(mut e) => {
                        if better(&cand, e.get()) {
                            e.insert(cand);
                        }
                    }
                    std::collections::hash_map::Entry::Vacant(e) => {
                        e.insert(cand);
                    }
                }
            }
        }
        // Word-end epsilon pass: commit words that end exactly here.
        let mut commits: Vec<((u32, u32), Hyp)> = Vec::new();
        for ((state, hist), hyp) in &next {
            for we in graph.word_ends() {
                if we.state != *state {
                    continue;
                }
                let lm_word = lm_ids[we.word as usize];
                let mut words = hyp.words.clone();
                words.push(we.word);
                let cand = Hyp {
                    score: hyp.score + scaled(scales.lambda, lm.log_prob(Some(*hist), lm_word)),
                    words,
                };
                commits.push(((we.to, lm_word), cand));
            }
        }
        for (key, cand) in commits {
            match next.entry(key) {
                std::collections::hash_map::Entry::Occupied(mut e) => {
                    if better(&cand, e.get()) {
                        e.insert(cand);
                    }
                }
                std::collections::hash_map::Entry::Vacant(e) => {
                    e.insert(cand);
                }
            }
        }
        if beam.is_finite() {
            let best = next.values().map(|h| h.score).fold(f64::NEG_INFINITY, f64::max);
            next.retain(|_, h| h.score >= best - beam);
        }
        std::mem::swap(&mut current, &mut next);
        if current.is_empty() {
            return Err(Error::BeamExhausted { beam });
        }
    }

    let mut best: Option<Hyp> = None;
    for ((state, hist), hyp) in &current {
        if !graph.is_final(*state) || hyp.words.is_empty() {
            continue;
        }
        let cand = Hyp {
            score: hyp.score + scaled(scales.lambda, lm.log_prob(Some(*hist), sent_end)),
            words: hyp.words.clone(),
        };
        if best.as_ref().is_none_or(|b| better(&cand, b)) {
            best = Some(cand);
        }
    }
    let best = best.ok_or(Error::BeamExhausted { beam })?;
    Ok(DecodeResult {
        words: best.words.iter().map(|&w| graph.words()[w as usize].clone()).collect(),
        score: best.score,
    })
}
