//! Shared brute-force oracles, independent of the lattice DP and FSA
//! builders: alignments are generated from the topology collapse rules
//! directly (run structure for CTC, segmentations for HMM) and weighted
//! by the emitted labels and loop/forward structure alone.

#![allow(dead_code)]
#![allow(clippy::too_many_arguments)]

use std::collections::BTreeSet;

use fullsum::lattice::FrameScores;
use fullsum::models::{ModelVariant, VariantKind};
use fullsum::topology::{AlignmentFsa, LabelSequence, LabelSpace, TransitionClass};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

/// One frame of a brute-force alignment: emitted label and the
/// transition class implied by the unit structure.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PlanFrame {
    pub label: u32,
    pub class: TransitionClass,
}

pub type Plan = Vec<PlanFrame>;

/// All CTC alignments of length `frames`: optional blank runs at every
/// segment boundary, each target label emitted at least `k` consecutive
/// times. Generated from the collapse rules, not from any FSA.
pub fn ctc_plans(labels: &[u32], blank: u32, k: usize, frames: usize) -> Vec<Plan> {
    let mut out = Vec::new();
    let mut plan: Plan = Vec::new();
    fn rec(
        labels: &[u32],
        blank: u32,
        k: usize,
        frames: usize,
        next: usize,
        plan: &mut Plan,
        out: &mut Vec<Plan>,
    ) {
        if next == labels.len() {
            // Optional trailing blank run.
            if plan.len() == frames {
                out.push(plan.clone());
            } else {
                let mut p = plan.clone();
                while p.len() < frames {
                    p.push(PlanFrame { label: blank, class: TransitionClass::Blank });
                }
                out.push(p);
            }
            return;
        }
        let used = plan.len();
        let remaining_min: usize = labels.len() - next;
        // Blank run before the next label. Mandatory between equal
        // adjacent labels, optional elsewhere.
        let mandatory = next > 0 && labels[next - 1] == labels[next];
        let min_blank = usize::from(mandatory);
        let max_blank = frames.saturating_sub(used + remaining_min * k);
        for blanks in min_blank..=max_blank {
            // Only the first label position may follow a leading blank run;
            // blanks after the final label are handled at recursion end.
            let mut p2 = plan.clone();
            for _ in 0..blanks {
                p2.push(PlanFrame { label: blank, class: TransitionClass::Blank });
            }
            let budget = frames - p2.len() - (remaining_min - 1) * k;
            for dur in k..=budget {
                let mut p3 = p2.clone();
                p3.push(PlanFrame { label: labels[next], class: TransitionClass::SpeechForward });
                for _ in 1..dur {
                    p3.push(PlanFrame { label: labels[next], class: TransitionClass::SpeechLoop });
                }
                rec(labels, blank, k, frames, next + 1, &mut p3, out);
            }
        }
    }
    if labels.len() * k <= frames {
        rec(labels, blank, k, frames, 0, &mut plan, &mut out);
    }
    out
}

/// All HMM-0-1 alignments of length `frames`: each unit at least `k`
/// consecutive frames, optional silence runs at word-boundary gaps.
/// `gap_before[u]` marks a word boundary before unit `u`; a final gap
/// follows the last unit. Silence runs are free-length (>= 1).
pub fn hmm_plans(
    units: &[u32],
    gap_before: &[bool],
    silence: u32,
    with_silence: bool,
    k: usize,
    frames: usize,
) -> Vec<Plan> {
    let mut out = Vec::new();
    fn rec(
        units: &[u32],
        gap_before: &[bool],
        silence: u32,
        with_silence: bool,
        k: usize,
        frames: usize,
        next: usize,
        plan: &mut Plan,
        out: &mut Vec<Plan>,
    ) {
        if next == units.len() {
            if plan.len() == frames {
                out.push(plan.clone());
            }
            // Final-gap silence.
            if with_silence && plan.len() < frames {
                let mut p = plan.clone();
                p.push(PlanFrame { label: silence, class: TransitionClass::SilenceForward });
                while p.len() < frames {
                    p.push(PlanFrame { label: silence, class: TransitionClass::SilenceLoop });
                }
                out.push(p);
            }
            return;
        }
        let remaining_min = (units.len() - next) * k;
        let used = plan.len();
        if used + remaining_min > frames {
            return;
        }
        let max_sil = if with_silence && gap_before[next] {
            frames - used - remaining_min
        } else {
            0
        };
        for sil in 0..=max_sil {
            let mut p2 = plan.clone();
            for i in 0..sil {
                p2.push(PlanFrame {
                    label: silence,
                    class: if i == 0 {
                        TransitionClass::SilenceForward
                    } else {
                        TransitionClass::SilenceLoop
                    },
                });
            }
            let budget = frames - p2.len() - (units.len() - next - 1) * k;
            for dur in k..=budget {
                let mut p3 = p2.clone();
                p3.push(PlanFrame { label: units[next], class: TransitionClass::SpeechForward });
                for _ in 1..dur {
                    p3.push(PlanFrame { label: units[next], class: TransitionClass::SpeechLoop });
                }
                rec(units, gap_before, silence, with_silence, k, frames, next + 1, &mut p3, out);
            }
        }
    }
    if !units.is_empty() {
        let mut plan = Vec::new();
        rec(units, gap_before, silence, with_silence, k, frames, 0, &mut plan, &mut out);
    }
    out
}

/// Word-boundary gaps of a label sequence: true before each word's
/// first unit.
pub fn gaps_of(seq: &LabelSequence) -> Vec<bool> {
    let mut gaps = vec![false; seq.len()];
    let mut start = 0;
    for &end in seq.word_ends() {
        gaps[start] = true;
        start = end;
    }
    gaps
}

/// Per-frame log-weight of a plan under a variant's weight rules,
/// computed from labels and classes alone.
pub fn plan_weight(plan: &Plan, variant: &ModelVariant, scores: &FrameScores) -> f64 {
    let s = variant.scales;
    let mut total = 0.0;
    for (t, f) in plan.iter().enumerate() {
        if s.gamma != 0.0 {
            total += s.gamma * scores.get(t, f.label as usize);
        }
        match variant.kind {
            VariantKind::Ctc | VariantKind::PHmmS => {}
            VariantKind::PHmm => {
                if s.beta != 0.0 {
                    total += s.beta * variant.transitions.unwrap().log_prob(f.class);
                }
            }
            VariantKind::HHmm => {
                if s.beta != 0.0 {
                    total += s.beta * variant.transitions.unwrap().log_prob(f.class);
                }
                if s.alpha != 0.0 {
                    total -= s.alpha * variant.prior.as_ref().unwrap().log_prob(f.label as usize);
                }
            }
        }
    }
    total
}

/// Log-sum over plan weights: the brute-force forward score.
pub fn plans_log_sum(plans: &[Plan], variant: &ModelVariant, scores: &FrameScores) -> f64 {
    let mut acc = f64::NEG_INFINITY;
    for p in plans {
        acc = fullsum::logmath::log_add(acc, plan_weight(p, variant, scores));
    }
    acc
}

/// Max weight and the label strings reaching it (within `tol`).
pub fn plans_argmax(
    plans: &[Plan],
    variant: &ModelVariant,
    scores: &FrameScores,
    tol: f64,
) -> (f64, BTreeSet<Vec<u32>>) {
    let mut best = f64::NEG_INFINITY;
    let mut weights = Vec::with_capacity(plans.len());
    for p in plans {
        let w = plan_weight(p, variant, scores);
        weights.push(w);
        if w > best {
            best = w;
        }
    }
    let strings = plans
        .iter()
        .zip(&weights)
        .filter(|(_, &w)| w >= best - tol)
        .map(|(p, _)| p.iter().map(|f| f.label).collect())
        .collect();
    (best, strings)
}

/// Independent string acceptor for the CTC collapse rules: maximal runs,
/// non-blank run labels must equal the target in order, each at least
/// `k` frames (the mandatory blank between equal adjacent labels is
/// implied by run maximality).
pub fn ctc_accepts(string: &[u32], labels: &[u32], blank: u32, k: usize) -> bool {
    let mut runs: Vec<(u32, usize)> = Vec::new();
    for &s in string {
        match runs.last_mut() {
            Some((sym, len)) if *sym == s => *len += 1,
            _ => runs.push((s, 1)),
        }
    }
    let speech: Vec<(u32, usize)> = runs.iter().copied().filter(|&(s, _)| s != blank).collect();
    speech.len() == labels.len()
        && speech.iter().zip(labels).all(|(&(s, len), &l)| s == l && len >= k)
}

/// Independent string acceptor for HMM-0-1: units consumed in order with
/// at least `k` frames each, silence runs only at word-boundary gaps.
pub fn hmm_accepts(
    string: &[u32],
    units: &[u32],
    gap_before: &[bool],
    silence: u32,
    with_silence: bool,
    k: usize,
) -> bool {
    fn rec(
        string: &[u32],
        pos: usize,
        units: &[u32],
        next: usize,
        gap_before: &[bool],
        silence: u32,
        with_silence: bool,
        k: usize,
    ) -> bool {
        if next == units.len() {
            if pos == string.len() {
                return true;
            }
            return with_silence && string[pos..].iter().all(|&s| s == silence);
        }
        let mut start = pos;
        if with_silence && gap_before[next] {
            // Try every silence-run length at this gap, including none.
            while start <= string.len() {
                if try_unit(string, start, units, next, gap_before, silence, with_silence, k) {
                    return true;
                }
                if start < string.len() && string[start] == silence {
                    start += 1;
                } else {
                    return false;
                }
            }
            false
        } else {
            try_unit(string, pos, units, next, gap_before, silence, with_silence, k)
        }
    }
    #[allow(clippy::too_many_arguments)]
    fn try_unit(
        string: &[u32],
        pos: usize,
        units: &[u32],
        next: usize,
        gap_before: &[bool],
        silence: u32,
        with_silence: bool,
        k: usize,
    ) -> bool {
        let label = units[next];
        let mut end = pos;
        while end < string.len() && string[end] == label {
            end += 1;
        }
        // The unit takes d >= k frames from this run.
        for d in k..=end.saturating_sub(pos) {
            if rec(string, pos + d, units, next + 1, gap_before, silence, with_silence, k) {
                return true;
            }
        }
        false
    }
    !units.is_empty() && rec(string, 0, units, 0, gap_before, silence, with_silence, k)
}

/// All length-`frames` label strings the FSA accepts, by arc-path
/// enumeration.
pub fn fsa_language(fsa: &AlignmentFsa, frames: usize) -> BTreeSet<Vec<u32>> {
    let mut out = BTreeSet::new();
    let mut stack: Vec<(u32, Vec<u32>)> =
        fsa.initial_states().iter().map(|&s| (s, Vec::new())).collect();
    while let Some((state, prefix)) = stack.pop() {
        if prefix.len() == frames {
            if fsa.is_final(state) {
                out.insert(prefix);
            }
            continue;
        }
        for arc in fsa.arcs().iter().filter(|a| a.from == state) {
            let mut next = prefix.clone();
            next.push(arc.label);
            stack.push((arc.to, next));
        }
    }
    out
}

/// Random log-score matrix with entries in roughly [-4, -0.2].
pub fn random_scores(rng: &mut ChaCha20Rng, frames: usize, labels: usize) -> FrameScores {
    let data: Vec<f64> = (0..frames * labels).map(|_| -rng.gen_range(0.2..4.0)).collect();
    FrameScores::new(frames, labels, 10.0, data).unwrap()
}

/// Random normalized log-posterior matrix.
pub fn random_posteriors(rng: &mut ChaCha20Rng, frames: usize, labels: usize) -> FrameScores {
    let mut data: Vec<f64> = (0..frames * labels).map(|_| rng.gen_range(-3.0..3.0)).collect();
    fullsum::logmath::log_softmax_rows(&mut data, labels);
    FrameScores::new(frames, labels, 10.0, data).unwrap()
}

/// Builds a one-word-per-label toy sequence over named phonemes, plus
/// the matching spaces.
pub struct Toy {
    pub lexicon: fullsum::topology::Lexicon,
    pub seq: LabelSequence,
    pub hmm_space: LabelSpace,
    pub ctc_space: LabelSpace,
}

pub fn toy_seq(inventory: &[&str], word_labels: &[&str]) -> Toy {
    let cfg = fullsum::topology::LabelConfig::new(false, 1).unwrap();
    let phonemes: Vec<String> = inventory.iter().map(|s| s.to_string()).collect();
    let mut lexicon = fullsum::topology::Lexicon::new(phonemes.clone()).unwrap();
    for p in inventory {
        lexicon.add_entry(&p.to_lowercase(), &[p]).unwrap();
    }
    let transcript: Vec<String> = word_labels.iter().map(|l| l.to_lowercase()).collect();
    let words: Vec<&str> = transcript.iter().map(|s| s.as_str()).collect();
    let seq = fullsum::topology::build_label_sequence(&words, &lexicon, cfg, "toy").unwrap();
    Toy {
        lexicon,
        seq,
        hmm_space: LabelSpace::hmm(phonemes.clone(), cfg).unwrap(),
        ctc_space: LabelSpace::ctc(phonemes, cfg).unwrap(),
    }
}

/// Deterministic RNG for a named test case.
pub fn rng_for(name: &str, case: u64) -> ChaCha20Rng {
    let mut seed = 0xcbf2_9ce4_8422_2325u64;
    for b in name.bytes() {
        seed ^= b as u64;
        seed = seed.wrapping_mul(0x1000_0000_01b3);
    }
    ChaCha20Rng::seed_from_u64(seed ^ case.wrapping_mul(0x9e37_79b9_7f4a_7c15))
}

// ---------------------------------------------------------------------
// Lattice forward/Viterbi oracle cases.

use fullsum::lattice::{forward_score, viterbi};

pub struct LatticeCase {
    pub fsa: AlignmentFsa,
    pub plans: Vec<Plan>,
    pub scores: FrameScores,
    pub variant: ModelVariant,
}

pub fn random_lattice_case(topology: Topology, k: u32, case_id: u64) -> LatticeCase {
    let mut rng = rng_for("lattice-oracle", case_id);
    let inventory = ["A", "B", "C"];
    let s_len = rng.gen_range(1..=3usize);
    let word_labels: Vec<&str> = (0..s_len).map(|_| inventory[rng.gen_range(0..3)]).collect();
    let toy = toy_seq(&inventory, &word_labels);

    let (fsa, space) = match topology {
        Topology::Ctc => (
            apply_min_duration(&build_ctc_fsa(&toy.ctc_space, &toy.seq), k).unwrap(),
            &toy.ctc_space,
        ),
        Topology::Hmm01 => {
            let silence = if rng.gen::<bool>() {
                SilenceMode::WordBoundaries
            } else {
                SilenceMode::None
            };
            (
                apply_min_duration(&build_hmm_fsa(&toy.hmm_space, &toy.seq, silence), k)
                    .unwrap(),
                &toy.hmm_space,
            )
        }
    };
    let frames = rng.gen_range(1..=8usize);
    let scores = random_scores(&mut rng, frames, space.len());

    let labels: Vec<u32> = toy.seq.units().iter().map(|u| space.index_of(u) as u32).collect();
    let plans = match topology {
        Topology::Ctc => ctc_plans(&labels, space.blank_index() as u32, k as usize, frames),
        Topology::Hmm01 => {
            let with_sil =
                fsa.arcs().iter().any(|a| a.label as usize == space.silence_index());
            hmm_plans(
                &labels,
                &gaps_of(&toy.seq),
                space.silence_index() as u32,
                with_sil,
                k as usize,
                frames,
            )
        }
    };
    let variant = match topology {
        Topology::Ctc => ModelVariant::ctc(Scales::default()),
        Topology::Hmm01 => ModelVariant::p_hmm_s(Scales::default()),
    };
    LatticeCase { fsa, plans, scores, variant }
}

/// Checks forward against the plan log-sum and Viterbi against the plan
/// argmax; panics with `ctx` on any mismatch.
pub fn check_lattice_case(case: &LatticeCase, ctx: &str) {
    let weights = fullsum::models::arc_weight_fn(&case.variant).unwrap();
    let got = forward_score(&case.fsa, &case.scores, &weights).unwrap();
    let want = plans_log_sum(&case.plans, &case.variant, &case.scores);
    if case.plans.is_empty() {
        assert_eq!(got, f64::NEG_INFINITY, "{ctx}: empty language");
        return;
    }
    let rel = (got - want).abs() / want.abs().max(1e-30);
    assert!(rel <= 1e-10, "{ctx}: forward {got} vs brute-force {want} (rel {rel:e})");

    let (best, argmax_strings) = plans_argmax(&case.plans, &case.variant, &case.scores, 1e-12);
    let (vit_score, ali) = viterbi(&case.fsa, &case.scores, &weights).unwrap();
    assert!(
        (vit_score - best).abs() <= 1e-10 * best.abs().max(1.0),
        "{ctx}: viterbi {vit_score} vs brute-force max {best}"
    );
    assert!(
        argmax_strings.contains(&ali.labels),
        "{ctx}: viterbi path {:?} not among brute-force argmax strings {argmax_strings:?}",
        ali.labels
    );
    assert!(vit_score <= got + 1e-12, "{ctx}: viterbi exceeds forward");
}

// ---------------------------------------------------------------------
// Gradient finite-difference suite.

use fullsum::logmath::log_softmax_rows;
use fullsum::models::{full_sum_loss, loss_gradient};
use fullsum::topology::{apply_min_duration, build_ctc_fsa, build_hmm_fsa, SilenceMode};

pub fn normalize(logits: &FrameScores) -> FrameScores {
    let mut data = logits.data().to_vec();
    log_softmax_rows(&mut data, logits.num_labels());
    FrameScores::new(logits.num_frames(), logits.num_labels(), logits.frame_shift_ms(), data)
        .unwrap()
}

pub fn random_transitions(rng: &mut ChaCha20Rng) -> fullsum::models::TransitionModel {
    let sl: f64 = rng.gen_range(0.05..0.95);
    let il: f64 = rng.gen_range(0.05..0.95);
    fullsum::models::TransitionModel::new(sl, 1.0 - sl, il, 1.0 - il).unwrap()
}

pub fn random_prior(rng: &mut ChaCha20Rng, len: usize) -> fullsum::models::PriorModel {
    let raw: Vec<f64> = (0..len).map(|_| rng.gen_range(0.05..1.0)).collect();
    let sum: f64 = raw.iter().sum();
    fullsum::models::PriorModel::new(raw.into_iter().map(|v| v / sum).collect()).unwrap()
}

pub struct GradCase {
    pub variant: ModelVariant,
    pub fsa: AlignmentFsa,
    pub logits: FrameScores,
}

pub fn random_grad_case(kind: VariantKind, case_id: u64) -> Option<GradCase> {
    let mut rng = rng_for("grad-check", case_id);
    let inventory = ["A", "B", "C"];
    let s_len = rng.gen_range(1..=3usize);
    let word_labels: Vec<&str> = (0..s_len).map(|_| inventory[rng.gen_range(0..3)]).collect();
    let toy = toy_seq(&inventory, &word_labels);

    // Mix default, random, and exactly-zero scales.
    let pick = |rng: &mut ChaCha20Rng| -> f64 {
        match rng.gen_range(0..3) {
            0 => 0.0,
            1 => 1.0,
            _ => rng.gen_range(0.1..2.0),
        }
    };
    let gamma = match rng.gen_range(0..4) {
        0 => 0.5,
        1 => 2.0,
        _ => 1.0,
    };
    let (space, fsa, variant) = match kind {
        VariantKind::Ctc => {
            let fsa = build_ctc_fsa(&toy.ctc_space, &toy.seq);
            let scales = Scales::new(0.0, 0.0, gamma, 0.0).unwrap();
            (&toy.ctc_space, fsa, ModelVariant::ctc(scales))
        }
        VariantKind::PHmmS => {
            let fsa = build_hmm_fsa(&toy.hmm_space, &toy.seq, SilenceMode::WordBoundaries);
            let scales = Scales::new(0.0, 0.0, gamma, 0.0).unwrap();
            (&toy.hmm_space, fsa, ModelVariant::p_hmm_s(scales))
        }
        VariantKind::PHmm => {
            let fsa = build_hmm_fsa(&toy.hmm_space, &toy.seq, SilenceMode::WordBoundaries);
            let scales = Scales::new(0.0, pick(&mut rng), gamma, 0.0).unwrap();
            (&toy.hmm_space, fsa, ModelVariant::p_hmm(scales, random_transitions(&mut rng)))
        }
        VariantKind::HHmm => {
            let fsa = build_hmm_fsa(&toy.hmm_space, &toy.seq, SilenceMode::WordBoundaries);
            let scales = Scales::new(pick(&mut rng), pick(&mut rng), gamma, 0.0).unwrap();
            let l = toy.hmm_space.len();
            (
                &toy.hmm_space,
                fsa,
                ModelVariant::h_hmm(
                    scales,
                    random_transitions(&mut rng),
                    random_prior(&mut rng, l),
                ),
            )
        }
    };
    let k = rng.gen_range(1..=2u32);
    let fsa = apply_min_duration(&fsa, k).unwrap();
    let min_frames = fsa.min_frames()?;
    let frames = rng.gen_range(min_frames..=6.max(min_frames));
    let l = space.len();
    let data: Vec<f64> = (0..frames * l).map(|_| rng.gen_range(-2.0..2.0)).collect();
    let logits = FrameScores::new(frames, l, 10.0, data).unwrap();
    Some(GradCase { variant, fsa, logits })
}

/// Central finite differences of the loss w.r.t. each logit.
pub fn fd_gradient(case: &GradCase, step: f64) -> Vec<f64> {
    let t = case.logits.num_frames();
    let l = case.logits.num_labels();
    let mut grad = vec![0.0f64; t * l];
    let eval = |data: Vec<f64>| -> f64 {
        let logits = FrameScores::new(t, l, 10.0, data).unwrap();
        full_sum_loss(&case.variant, &case.fsa, &normalize(&logits), "fd").unwrap()
    };
    let base = case.logits.data().to_vec();
    for i in 0..t * l {
        let mut plus = base.clone();
        plus[i] += step;
        let mut minus = base.clone();
        minus[i] -= step;
        grad[i] = (eval(plus) - eval(minus)) / (2.0 * step);
    }
    grad
}

/// Runs the analytic-vs-FD comparison; returns cases checked and the
/// worst absolute deviation. Panics past `tol`.
pub fn run_gradient_suite(cases_per_variant: u64, tol: f64) -> (usize, f64) {
    let mut checked = 0usize;
    let mut worst: f64 = 0.0;
    for kind in [VariantKind::Ctc, VariantKind::PHmmS, VariantKind::PHmm, VariantKind::HHmm] {
        let mut case_id = match kind {
            VariantKind::Ctc => 0,
            VariantKind::PHmmS => 100_000,
            VariantKind::PHmm => 200_000,
            VariantKind::HHmm => 300_000,
        };
        let mut done = 0;
        while done < cases_per_variant {
            case_id += 1;
            let Some(case) = random_grad_case(kind, case_id) else {
                continue;
            };
            let (_, grad) = loss_gradient(&case.variant, &case.fsa, &case.logits, "g").unwrap();
            let fd = fd_gradient(&case, 1e-4);
            let max_dev = grad
                .iter()
                .zip(&fd)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0f64, f64::max);
            assert!(max_dev <= tol, "{kind:?} case {case_id}: max |grad - fd| = {max_dev:e}");
            worst = worst.max(max_dev);
            checked += 1;
            done += 1;
        }
    }
    (checked, worst)
}

// ---------------------------------------------------------------------
// Decoder micro-instance oracle.

use fullsum::decoder::{DecodingGraph, NGramLm};
use fullsum::models::{PriorModel, Scales, TransitionModel};
use fullsum::topology::{expand_pronunciation, LabelConfig, Lexicon, Topology};

pub struct MicroInstance {
    pub lexicon: Lexicon,
    pub space: LabelSpace,
    pub graph: DecodingGraph,
    pub lm: NGramLm,
    pub scales: Scales,
    pub prior: Option<PriorModel>,
    pub transitions: Option<TransitionModel>,
    pub posteriors: FrameScores,
    pub topology: Topology,
}

/// Random ARPA text with exact Katz backoff: every history's listed
/// conditionals sum below one and the backoff weight closes the gap, so
/// conditional sums are exactly one.
pub fn random_arpa(rng: &mut ChaCha20Rng, words: &[String]) -> String {
    let mut vocab: Vec<String> = vec!["<s>".into(), "</s>".into()];
    vocab.extend(words.iter().cloned());
    // Unigram mass over successors (everything but <s>); <s> itself gets
    // a negligible stand-in probability.
    let eps = 1e-10;
    let raw: Vec<f64> = (0..vocab.len() - 1).map(|_| rng.gen_range(0.1..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let mut uni = vec![eps];
    uni.extend(raw.iter().map(|v| v / total * (1.0 - eps)));

    let successors: Vec<usize> = (1..vocab.len()).collect();
    let succ_uni_total: f64 = successors.iter().map(|&i| uni[i]).sum();

    let mut unigram_lines = Vec::new();
    let mut bigram_lines = Vec::new();
    for (h, word) in vocab.iter().enumerate() {
        if word == "</s>" {
            unigram_lines.push(format!("{:.10} {}", uni[h].log10(), word));
            continue;
        }
        // Random subset of successors listed explicitly.
        let listed: Vec<usize> = successors
            .iter()
            .copied()
            .filter(|_| rng.gen::<f64>() < 0.6)
            .collect();
        if listed.is_empty() {
            unigram_lines.push(format!("{:.10} {} 0.0", uni[h].log10(), word));
            continue;
        }
        let masses: Vec<f64> = listed.iter().map(|_| rng.gen_range(0.1..1.0)).collect();
        let mass_total: f64 = masses.iter().sum();
        // With every successor listed there is no mass left to back off to.
        let all_listed = listed.len() == successors.len();
        let explicit_mass = if all_listed { 1.0 } else { rng.gen_range(0.3..0.9) };
        let listed_uni: f64 = listed.iter().map(|&i| uni[i]).sum();
        let backoff = if all_listed {
            1.0
        } else {
            (1.0 - explicit_mass) / (succ_uni_total - listed_uni)
        };
        unigram_lines.push(format!("{:.10} {} {:.10}", uni[h].log10(), word, backoff.log10()));
        for (&w, m) in listed.iter().zip(&masses) {
            let p = m / mass_total * explicit_mass;
            bigram_lines.push(format!("{:.10} {} {}", p.log10(), word, vocab[w]));
        }
    }
    let mut text = String::from("\\data\\\n");
    text.push_str(&format!("ngram 1={}\n", unigram_lines.len()));
    text.push_str(&format!("ngram 2={}\n\n\\1-grams:\n", bigram_lines.len()));
    for l in &unigram_lines {
        text.push_str(l);
        text.push('\n');
    }
    text.push_str("\n\\2-grams:\n");
    for l in &bigram_lines {
        text.push_str(l);
        text.push('\n');
    }
    text.push_str("\n\\end\\\n");
    text
}

/// Builds a random micro decoding instance: vocab <= 3 words over 2-3
/// phonemes, T <= 6 frames of random posteriors, random scales.
pub fn decode_micro_instance(topology: Topology, case_id: u64) -> MicroInstance {
    let mut rng = rng_for("decode-micro", case_id);
    let cfg = LabelConfig::new(rng.gen::<bool>(), 1).unwrap();
    let phoneme_pool = ["A", "B", "C"];
    let n_phonemes = rng.gen_range(2..=3usize);
    let phonemes: Vec<String> =
        phoneme_pool[..n_phonemes].iter().map(|s| s.to_string()).collect();
    let mut lexicon = Lexicon::new(phonemes.clone()).unwrap();
    let n_words = rng.gen_range(1..=3usize);
    let names = ["wa", "wb", "wc"];
    let mut prons: Vec<Vec<usize>> = Vec::new();
    for name in names.iter().take(n_words) {
        loop {
            let len = rng.gen_range(1..=2usize);
            let pron: Vec<usize> = (0..len).map(|_| rng.gen_range(0..n_phonemes)).collect();
            if prons.contains(&pron) {
                continue;
            }
            let pron_names: Vec<&str> = pron.iter().map(|&i| phoneme_pool[i]).collect();
            lexicon.add_entry(name, &pron_names).unwrap();
            prons.push(pron);
            break;
        }
    }
    let space = match topology {
        Topology::Ctc => LabelSpace::ctc(phonemes, cfg).unwrap(),
        Topology::Hmm01 => LabelSpace::hmm(phonemes, cfg).unwrap(),
    };
    let kind = match topology {
        Topology::Ctc => fullsum::models::VariantKind::Ctc,
        Topology::Hmm01 => fullsum::models::VariantKind::PHmm,
    };
    let graph = fullsum::decoder::build_decoding_graph(&lexicon, &space, kind).unwrap();

    let words: Vec<String> = {
        let mut w: Vec<String> = lexicon.words().cloned().collect();
        w.sort();
        w
    };
    let lm = NGramLm::parse(&random_arpa(&mut rng, &words), 2).unwrap();

    let alpha = if rng.gen::<bool>() { rng.gen_range(0.1..1.0) } else { 0.0 };
    let beta = if topology == Topology::Hmm01 && rng.gen::<bool>() {
        rng.gen_range(0.1..1.0)
    } else {
        0.0
    };
    let lambda = match rng.gen_range(0..3) {
        0 => 0.0,
        1 => 1.0,
        _ => rng.gen_range(0.2..3.0),
    };
    let scales = Scales::new(alpha, beta, 1.0, lambda).unwrap();
    let prior = (alpha > 0.0).then(|| {
        let raw: Vec<f64> = (0..space.len()).map(|_| rng.gen_range(0.1..1.0)).collect();
        let sum: f64 = raw.iter().sum();
        PriorModel::new(raw.into_iter().map(|v| v / sum).collect()).unwrap()
    });
    let transitions = (beta > 0.0).then(|| {
        let sl: f64 = rng.gen_range(0.1..0.9);
        let il: f64 = rng.gen_range(0.1..0.9);
        TransitionModel::new(sl, 1.0 - sl, il, 1.0 - il).unwrap()
    });

    let frames = rng.gen_range(1..=6usize);
    let posteriors = random_posteriors(&mut rng, frames, space.len());
    MicroInstance { lexicon, space, graph, lm, scales, prior, transitions, posteriors, topology }
}

/// Runs exact-search decoding against the enumeration oracle for
/// `cases` seeded micro instances, alternating topologies.
pub fn run_decoder_suite(cases: u64) -> usize {
    let mut checked = 0;
    for case_id in 0..cases {
        let topology = if case_id % 2 == 0 { Topology::Hmm01 } else { Topology::Ctc };
        let inst = decode_micro_instance(topology, case_id);
        let want = decode_oracle(&inst);
        let got = fullsum::decoder::decode(
            &inst.posteriors,
            &inst.graph,
            &inst.lm,
            &inst.scales,
            inst.prior.as_ref(),
            inst.transitions.as_ref(),
            f64::INFINITY,
        );
        match (want, got) {
            (None, Err(_)) => {}
            (Some((words, score)), Ok(out)) => {
                assert!(
                    (out.score - score).abs() <= 1e-9 * score.abs().max(1.0),
                    "case {case_id}: score {} vs oracle {score}",
                    out.score
                );
                assert_eq!(out.words, words, "case {case_id} ({topology:?})");
            }
            (want, got) => panic!("case {case_id}: oracle {want:?} vs decoder {got:?}"),
        }
        checked += 1;
    }
    checked
}

/// Scale-zero reduction identities on random instances: p-hmm at
/// beta = 0 equals p-hmm-s, h-hmm at alpha = 0 equals p-hmm, to 1e-12.
pub fn run_reduction_suite(cases: u64) -> usize {
    let mut checked = 0;
    for case_id in 0..cases {
        let mut rng = rng_for("reductions", case_id);
        let inventory = ["A", "B", "C"];
        let s_len = rng.gen_range(1..=3usize);
        let word_labels: Vec<&str> =
            (0..s_len).map(|_| inventory[rng.gen_range(0..3)]).collect();
        let toy = toy_seq(&inventory, &word_labels);
        let fsa = build_hmm_fsa(&toy.hmm_space, &toy.seq, SilenceMode::WordBoundaries);
        let frames = rng.gen_range(s_len..=7);
        let l = toy.hmm_space.len();
        let mut data: Vec<f64> = (0..frames * l).map(|_| rng.gen_range(-3.0..1.0)).collect();
        log_softmax_rows(&mut data, l);
        let posteriors = FrameScores::new(frames, l, 10.0, data).unwrap();
        let gamma = rng.gen_range(0.2..2.0);

        let p_hmm = ModelVariant::p_hmm(
            Scales::new(0.0, 0.0, gamma, 0.0).unwrap(),
            random_transitions(&mut rng),
        );
        let p_hmm_s = ModelVariant::p_hmm_s(Scales::new(0.0, 0.0, gamma, 0.0).unwrap());
        let a = full_sum_loss(&p_hmm, &fsa, &posteriors, "u").unwrap();
        let b = full_sum_loss(&p_hmm_s, &fsa, &posteriors, "u").unwrap();
        assert!((a - b).abs() <= 1e-12, "case {case_id}: p-hmm(beta=0) {a} vs p-hmm-s {b}");

        let beta = rng.gen_range(0.0..1.5);
        let transitions = random_transitions(&mut rng);
        let h_hmm = ModelVariant::h_hmm(
            Scales::new(0.0, beta, gamma, 0.0).unwrap(),
            transitions,
            random_prior(&mut rng, l),
        );
        let p_hmm =
            ModelVariant::p_hmm(Scales::new(0.0, beta, gamma, 0.0).unwrap(), transitions);
        let c = full_sum_loss(&h_hmm, &fsa, &posteriors, "u").unwrap();
        let d = full_sum_loss(&p_hmm, &fsa, &posteriors, "u").unwrap();
        assert!((c - d).abs() <= 1e-12, "case {case_id}: h-hmm(alpha=0) {c} vs p-hmm {d}");
        checked += 1;
    }
    checked
}

fn decode_frame_weight(inst: &MicroInstance, t: usize, frame: &PlanFrame) -> f64 {
    let s = inst.scales;
    let mut w = s.gamma * inst.posteriors.get(t, frame.label as usize);
    if s.alpha > 0.0 {
        w -= s.alpha * inst.prior.as_ref().unwrap().log_prob(frame.label as usize);
    }
    if s.beta > 0.0 && inst.topology == Topology::Hmm01 {
        w += s.beta * inst.transitions.as_ref().unwrap().log_prob(frame.class);
    }
    w
}

/// Exhaustive (word sequence, alignment) argmax. Returns the best words
/// and score, with lexicographically smallest words on ties.
pub fn decode_oracle(inst: &MicroInstance) -> Option<(Vec<String>, f64)> {
    let mut vocab: Vec<String> = inst.lexicon.words().cloned().collect();
    vocab.sort();
    let frames = inst.posteriors.num_frames();
    let sent_begin = inst.lm.sent_begin().unwrap();
    let sent_end = inst.lm.sent_end().unwrap();

    let mut best: Option<(f64, Vec<String>)> = None;
    let mut stack: Vec<Vec<usize>> = (0..vocab.len()).map(|w| vec![w]).collect();
    while let Some(seq) = stack.pop() {
        // Expanded units and word gaps of this word sequence.
        let mut units: Vec<u32> = Vec::new();
        let mut gaps: Vec<bool> = Vec::new();
        for &w in &seq {
            let pron = inst.lexicon.pronunciation(&vocab[w]).unwrap();
            let expanded = expand_pronunciation(pron, inst.space.config(), true);
            for (i, u) in expanded.iter().enumerate() {
                units.push(inst.space.index_of(u) as u32);
                gaps.push(i == 0);
            }
        }
        if units.len() <= frames {
            let plans = match inst.topology {
                Topology::Ctc => {
                    ctc_plans(&units, inst.space.blank_index() as u32, 1, frames)
                }
                Topology::Hmm01 => hmm_plans(
                    &units,
                    &gaps,
                    inst.space.silence_index() as u32,
                    true,
                    1,
                    frames,
                ),
            };
            if !plans.is_empty() {
                let mut lm_score = 0.0;
                let mut hist = sent_begin;
                for &w in &seq {
                    let id = inst.lm.word_id(&vocab[w]).unwrap();
                    lm_score += inst.lm.log_prob(Some(hist), id);
                    hist = id;
                }
                lm_score += inst.lm.log_prob(Some(hist), sent_end);
                let lm_term =
                    if inst.scales.lambda == 0.0 { 0.0 } else { inst.scales.lambda * lm_score };
                let mut am_best = f64::NEG_INFINITY;
                for p in &plans {
                    let w: f64 =
                        p.iter().enumerate().map(|(t, f)| decode_frame_weight(inst, t, f)).sum();
                    am_best = am_best.max(w);
                }
                let total = am_best + lm_term;
                let words: Vec<String> = seq.iter().map(|&w| vocab[w].clone()).collect();
                let replace = match &best {
                    None => true,
                    Some((bs, bw)) => {
                        total > *bs + 1e-12
                            || ((total - bs).abs() <= 1e-12 && words < *bw)
                    }
                };
                if replace {
                    best = Some((total, words));
                }
            }
            // Longer sequences may still fit.
            if units.len() < frames {
                for w in 0..vocab.len() {
                    let mut s2 = seq.clone();
                    s2.push(w);
                    stack.push(s2);
                }
            }
        }
    }
    best.map(|(s, w)| (w, s))
}
