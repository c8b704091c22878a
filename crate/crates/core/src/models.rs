//! Model variants over alignment lattices: arc weights, full-sum losses,
//! and loss gradients.
//!
//! Four variants share one weight shape per arc at frame t:
//!
//! * ctc       gamma * log P(y_t | h_t)
//! * p-hmm-s   gamma * log P
//! * p-hmm     gamma * log P + beta * log T(class)
//! * h-hmm     gamma * log P - alpha * log P_prior(y_t) + beta * log T(class)
//!
//! Scales multiply log-terms directly with no renormalization. A scale of
//! exactly zero drops its term entirely, so zero-probability tables stay
//! harmless under a zero scale.

use std::path::Path;

use crate::error::{Error, Result};
use crate::lattice::{
    forward_score, occupation_probabilities, ArcWeight, FrameScores, SoftAlignment,
};
use crate::logmath::log_softmax_rows;
use crate::topology::{AlignmentFsa, FsaArc, LabelSpace, Topology, TransitionClass};

/// Pooled transition probabilities: loop/forward for speech and silence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitionModel {
    pub speech_loop: f64,
    pub speech_forward: f64,
    pub silence_loop: f64,
    pub silence_forward: f64,
}

impl TransitionModel {
    pub fn new(
        speech_loop: f64,
        speech_forward: f64,
        silence_loop: f64,
        silence_forward: f64,
    ) -> Result<Self> {
        for (name, v) in [
            ("speech-loop", speech_loop),
            ("speech-forward", speech_forward),
            ("silence-loop", silence_loop),
            ("silence-forward", silence_forward),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidProbability(format!("{name} = {v} not in [0, 1]")));
            }
        }
        if (speech_loop + speech_forward - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidProbability(format!(
                "speech-loop + speech-forward = {}",
                speech_loop + speech_forward
            )));
        }
        if (silence_loop + silence_forward - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidProbability(format!(
                "silence-loop + silence-forward = {}",
                silence_loop + silence_forward
            )));
        }
        Ok(TransitionModel { speech_loop, speech_forward, silence_loop, silence_forward })
    }

    /// All four transitions 0.5; dropping the term is then a constant
    /// offset per frame.
    pub fn uniform() -> Self {
        TransitionModel {
            speech_loop: 0.5,
            speech_forward: 0.5,
            silence_loop: 0.5,
            silence_forward: 0.5,
        }
    }

    pub fn log_prob(&self, class: TransitionClass) -> f64 {
        match class {
            TransitionClass::SpeechLoop => self.speech_loop.ln(),
            TransitionClass::SpeechForward => self.speech_forward.ln(),
            TransitionClass::SilenceLoop => self.silence_loop.ln(),
            TransitionClass::SilenceForward => self.silence_forward.ln(),
            // Blank arcs carry no transition probability.
            TransitionClass::Blank => 0.0,
        }
    }

    /// Text format: four `key value` lines.
    pub fn save(&self, path: &Path) -> Result<()> {
        let text = format!(
            "speech-loop {}\nspeech-forward {}\nsilence-loop {}\nsilence-forward {}\n",
            self.speech_loop, self.speech_forward, self.silence_loop, self.silence_forward
        );
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut vals = [None::<f64>; 4];
        let keys = ["speech-loop", "speech-forward", "silence-loop", "silence-forward"];
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once(char::is_whitespace).ok_or_else(|| Error::Parse {
                path: path.display().to_string(),
                line: lineno + 1,
                msg: "expected `key value`".into(),
            })?;
            let idx = keys.iter().position(|&k| k == key).ok_or_else(|| Error::Parse {
                path: path.display().to_string(),
                line: lineno + 1,
                msg: format!("unknown key `{key}`"),
            })?;
            vals[idx] = Some(value.trim().parse().map_err(|_| Error::Parse {
                path: path.display().to_string(),
                line: lineno + 1,
                msg: format!("bad probability `{value}`"),
            })?);
        }
        match vals {
            [Some(sl), Some(sf), Some(il), Some(if_)] => TransitionModel::new(sl, sf, il, if_),
            _ => Err(Error::Format {
                path: path.display().to_string(),
                msg: "missing transition keys".into(),
            }),
        }
    }
}

/// Label prior over the emission space.
#[derive(Debug, Clone, PartialEq)]
pub struct PriorModel {
    probs: Vec<f64>,
}

impl PriorModel {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidProbability("empty prior".into()));
        }
        let mut sum = 0.0;
        for (i, &p) in probs.iter().enumerate() {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidProbability(format!("prior[{i}] = {p} not in [0, 1]")));
            }
            sum += p;
        }
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidProbability(format!("prior sums to {sum}, expected 1")));
        }
        Ok(PriorModel { probs })
    }

    pub fn uniform(len: usize) -> Self {
        PriorModel { probs: vec![1.0 / len as f64; len] }
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn prob(&self, label: usize) -> f64 {
        self.probs[label]
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn log_prob(&self, label: usize) -> f64 {
        self.probs[label].ln()
    }

    /// Text format: one `label-name probability` per line, in label order.
    pub fn save(&self, path: &Path, space: &LabelSpace) -> Result<()> {
        assert_eq!(self.probs.len(), space.len());
        let mut text = String::new();
        for (i, p) in self.probs.iter().enumerate() {
            text.push_str(&format!("{} {}\n", space.label_name(i), p));
        }
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn load(path: &Path, space: &LabelSpace) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut probs = vec![f64::NAN; space.len()];
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (name, value) = line.rsplit_once(char::is_whitespace).ok_or_else(|| {
                Error::Parse {
                    path: path.display().to_string(),
                    line: lineno + 1,
                    msg: "expected `label-name probability`".into(),
                }
            })?;
            let idx = space.index_by_name(name.trim()).ok_or_else(|| Error::Parse {
                path: path.display().to_string(),
                line: lineno + 1,
                msg: format!("unknown label `{name}`"),
            })?;
            probs[idx] = value.parse().map_err(|_| Error::Parse {
                path: path.display().to_string(),
                line: lineno + 1,
                msg: format!("bad probability `{value}`"),
            })?;
        }
        if let Some(missing) = probs.iter().position(|p| p.is_nan()) {
            return Err(Error::Format {
                path: path.display().to_string(),
                msg: format!("missing prior for label `{}`", space.label_name(missing)),
            });
        }
        PriorModel::new(probs)
    }
}

/// Exponential scales: prior (alpha), transition (beta), label posterior
/// (gamma), and language model (lambda).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scales {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub lambda: f64,
}

impl Scales {
    pub fn new(alpha: f64, beta: f64, gamma: f64, lambda: f64) -> Result<Self> {
        for (name, v) in [("alpha", alpha), ("beta", beta), ("gamma", gamma), ("lambda", lambda)] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::Config(format!("scale {name} = {v} must be finite and >= 0")));
            }
        }
        Ok(Scales { alpha, beta, gamma, lambda })
    }

    /// Training defaults per variant kind.
    pub fn for_kind(kind: VariantKind) -> Self {
        match kind {
            VariantKind::Ctc | VariantKind::PHmmS => {
                Scales { alpha: 0.0, beta: 0.0, gamma: 1.0, lambda: 0.0 }
            }
            VariantKind::PHmm => Scales { alpha: 0.0, beta: 0.1, gamma: 1.0, lambda: 0.0 },
            VariantKind::HHmm => Scales { alpha: 0.3, beta: 0.1, gamma: 1.0, lambda: 0.0 },
        }
    }
}

impl Default for Scales {
    fn default() -> Self {
        Scales { alpha: 0.0, beta: 0.0, gamma: 1.0, lambda: 0.0 }
    }
}

/// Scale a log-term, dropping it entirely at scale zero so that
/// `0 * -inf` never produces NaN.
#[inline]
fn scaled(scale: f64, log_value: f64) -> f64 {
    if scale == 0.0 {
        0.0
    } else {
        scale * log_value
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VariantKind {
    Ctc,
    PHmm,
    PHmmS,
    HHmm,
}

impl VariantKind {
    pub fn name(self) -> &'static str {
        match self {
            VariantKind::Ctc => "ctc",
            VariantKind::PHmm => "p-hmm",
            VariantKind::PHmmS => "p-hmm-s",
            VariantKind::HHmm => "h-hmm",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "ctc" => Ok(VariantKind::Ctc),
            "p-hmm" => Ok(VariantKind::PHmm),
            "p-hmm-s" => Ok(VariantKind::PHmmS),
            "h-hmm" => Ok(VariantKind::HHmm),
            _ => Err(Error::Config(format!(
                "unknown variant `{s}` (expected ctc, p-hmm, p-hmm-s, or h-hmm)"
            ))),
        }
    }

    pub fn topology(self) -> Topology {
        match self {
            VariantKind::Ctc => Topology::Ctc,
            _ => Topology::Hmm01,
        }
    }
}

/// A model variant with its scales and any attached probability tables.
#[derive(Debug, Clone)]
pub struct ModelVariant {
    pub kind: VariantKind,
    pub scales: Scales,
    pub transitions: Option<TransitionModel>,
    pub prior: Option<PriorModel>,
}

impl ModelVariant {
    pub fn ctc(scales: Scales) -> Self {
        ModelVariant { kind: VariantKind::Ctc, scales, transitions: None, prior: None }
    }

    pub fn p_hmm_s(scales: Scales) -> Self {
        ModelVariant { kind: VariantKind::PHmmS, scales, transitions: None, prior: None }
    }

    pub fn p_hmm(scales: Scales, transitions: TransitionModel) -> Self {
        ModelVariant {
            kind: VariantKind::PHmm,
            scales,
            transitions: Some(transitions),
            prior: None,
        }
    }

    pub fn h_hmm(scales: Scales, transitions: TransitionModel, prior: PriorModel) -> Self {
        ModelVariant {
            kind: VariantKind::HHmm,
            scales,
            transitions: Some(transitions),
            prior: Some(prior),
        }
    }

    fn check_topology(&self, fsa: &AlignmentFsa) -> Result<()> {
        if fsa.topology() != self.kind.topology() {
            return Err(Error::Config(format!(
                "variant {} needs a {:?} lattice, got {:?}",
                self.kind.name(),
                self.kind.topology(),
                fsa.topology()
            )));
        }
        Ok(())
    }
}

/// Per-arc log-weights of a variant over given frame posteriors.
#[derive(Debug, Clone, Copy)]
pub struct VariantWeights<'a> {
    kind: VariantKind,
    scales: Scales,
    transitions: Option<&'a TransitionModel>,
    prior: Option<&'a PriorModel>,
}

impl ArcWeight for VariantWeights<'_> {
    fn log_weight(&self, scores: &FrameScores, t: usize, arc: &FsaArc) -> f64 {
        let mut w = scaled(self.scales.gamma, scores.get(t, arc.label as usize));
        match self.kind {
            VariantKind::Ctc | VariantKind::PHmmS => {}
            VariantKind::PHmm => {
                w += scaled(self.scales.beta, self.transitions.unwrap().log_prob(arc.class));
            }
            VariantKind::HHmm => {
                w += scaled(self.scales.beta, self.transitions.unwrap().log_prob(arc.class));
                w -= scaled(self.scales.alpha, self.prior.unwrap().log_prob(arc.label as usize));
            }
        }
        w
    }
}

/// Builds the variant's arc-weight function.
///
/// Fails when a required transition or prior table is missing.
pub fn arc_weight_fn(variant: &ModelVariant) -> Result<VariantWeights<'_>> {
    match variant.kind {
        VariantKind::Ctc | VariantKind::PHmmS => {}
        VariantKind::PHmm => {
            if variant.transitions.is_none() {
                return Err(Error::MissingModelComponent {
                    variant: variant.kind.name(),
                    missing: "transition model",
                });
            }
        }
        VariantKind::HHmm => {
            if variant.transitions.is_none() {
                return Err(Error::MissingModelComponent {
                    variant: variant.kind.name(),
                    missing: "transition model",
                });
            }
            if variant.prior.is_none() {
                return Err(Error::MissingModelComponent {
                    variant: variant.kind.name(),
                    missing: "prior model",
                });
            }
        }
    }
    Ok(VariantWeights {
        kind: variant.kind,
        scales: variant.scales,
        transitions: variant.transitions.as_ref(),
        prior: variant.prior.as_ref(),
    })
}

/// Negated full-sum score: `-log` of the path sum under the variant's
/// weights. `posteriors` rows are log-probability distributions.
pub fn full_sum_loss(
    variant: &ModelVariant,
    fsa: &AlignmentFsa,
    posteriors: &FrameScores,
    utt: &str,
) -> Result<f64> {
    variant.check_topology(fsa)?;
    let weights = arc_weight_fn(variant)?;
    let score = forward_score(fsa, posteriors, &weights)?;
    if score == f64::NEG_INFINITY {
        return Err(Error::EmptyLattice {
            utt: utt.to_string(),
            frames: posteriors.num_frames(),
            min_frames: fsa.min_frames().unwrap_or(usize::MAX),
        });
    }
    Ok(-score)
}

/// Full-sum loss and its gradient w.r.t. pre-softmax logits.
///
/// The logits are log-softmax-normalized internally, so already
/// normalized log-posteriors pass through unchanged. The gradient is
/// `gamma * (softmax_t - q_t)` where q is the occupation probability
/// under the variant's weights; fixed priors and transitions are
/// constants in the gradient.
pub fn loss_gradient(
    variant: &ModelVariant,
    fsa: &AlignmentFsa,
    logits: &FrameScores,
    utt: &str,
) -> Result<(f64, Vec<f64>)> {
    variant.check_topology(fsa)?;
    let weights = arc_weight_fn(variant)?;
    let t_max = logits.num_frames();
    let l = logits.num_labels();

    let mut log_post = logits.data().to_vec();
    log_softmax_rows(&mut log_post, l);
    let posteriors =
        FrameScores::new(t_max, l, logits.frame_shift_ms(), log_post)?;

    let q = match occupation_probabilities(fsa, &posteriors, &weights) {
        Ok(q) => q,
        Err(Error::EmptyLattice { frames, min_frames, .. }) => {
            return Err(Error::EmptyLattice { utt: utt.to_string(), frames, min_frames });
        }
        Err(e) => return Err(e),
    };
    let loss = -forward_score(fsa, &posteriors, &weights)?;

    let gamma = variant.scales.gamma;
    let mut grad = vec![0.0f64; t_max * l];
    if gamma != 0.0 {
        for t in 0..t_max {
            for i in 0..l {
                let softmax = posteriors.get(t, i).exp();
                grad[t * l + i] = gamma * (softmax - q.get(t, i));
            }
        }
    }
    Ok((loss, grad))
}

/// Occupation probabilities under a variant's weights.
pub fn variant_occupation(
    variant: &ModelVariant,
    fsa: &AlignmentFsa,
    posteriors: &FrameScores,
) -> Result<SoftAlignment> {
    variant.check_topology(fsa)?;
    let weights = arc_weight_fn(variant)?;
    occupation_probabilities(fsa, posteriors, &weights)
}
