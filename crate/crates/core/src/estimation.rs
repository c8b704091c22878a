//! Prior-knowledge probability approximation and data-driven priors.
//!
//! Transition and prior tables are estimated once from mean phoneme
//! duration and corpus statistics, then kept fixed during training to
//! guide the model towards plausible alignment paths.

use crate::corpus::Utterance;
use crate::error::{Error, Result};
use crate::lattice::FrameScores;
use crate::models::{PriorModel, TransitionModel};
use crate::topology::{expand_pronunciation, LabelSpace, Lexicon};

/// Default mean phoneme duration in milliseconds.
pub const DEFAULT_MEAN_PHONEME_MS: f64 = 80.0;

/// Default probability floor applied when normalizing estimated priors.
pub const DEFAULT_PRIOR_FLOOR: f64 = 1e-4;

fn expected_speech_frames(
    utt: &Utterance,
    lexicon: &Lexicon,
    mean_phoneme_ms: f64,
    frame_shift_ms: f64,
) -> Result<f64> {
    let mut phones = 0usize;
    for word in &utt.transcript {
        let pron = lexicon.pronunciation(word).ok_or_else(|| Error::UnknownWord {
            word: word.clone(),
            utt: utt.id.clone(),
        })?;
        phones += pron.len();
    }
    Ok(phones as f64 * mean_phoneme_ms / frame_shift_ms)
}

/// Transition probabilities from mean phoneme duration and per-utterance
/// silence residuals.
///
/// Speech loop is `1 - frame-shift / per-state-duration` where the
/// per-state duration is the mean phoneme duration divided by the number
/// of states per phoneme. Each utterance's silence residual is split
/// equally into a begin and an end segment; the silence loop follows the
/// geometric-duration fit `1 - 1 / mean-segment-frames`. A corpus with
/// zero estimated silence falls back to the speech transitions with a
/// warning.
pub fn p_approx_transitions(
    mean_phoneme_ms: f64,
    frame_shift_ms: f64,
    corpus: &[Utterance],
    lexicon: &Lexicon,
    states_per_phoneme: u8,
) -> Result<TransitionModel> {
    if !(mean_phoneme_ms.is_finite() && mean_phoneme_ms > 0.0)
        || !(frame_shift_ms.is_finite() && frame_shift_ms > 0.0)
    {
        return Err(Error::Config("durations must be positive".into()));
    }
    let per_state_ms = mean_phoneme_ms / states_per_phoneme as f64;
    if per_state_ms < frame_shift_ms {
        return Err(Error::Config(format!(
            "per-state duration {per_state_ms} ms is shorter than the frame shift {frame_shift_ms} ms"
        )));
    }
    let speech_loop = 1.0 - frame_shift_ms / per_state_ms;

    let mut total_silence = 0.0f64;
    for utt in corpus {
        let audio = utt.frames(frame_shift_ms);
        let speech = expected_speech_frames(utt, lexicon, mean_phoneme_ms, frame_shift_ms)?;
        total_silence += (audio - speech).max(0.0);
    }
    let silence_loop = if corpus.is_empty() || total_silence <= 0.0 {
        log::warn!("no silence estimated from the corpus; silence transitions fall back to speech");
        speech_loop
    } else {
        let mean_segment = total_silence / (2.0 * corpus.len() as f64);
        (1.0 - 1.0 / mean_segment).max(0.0)
    };

    TransitionModel::new(speech_loop, 1.0 - speech_loop, silence_loop, 1.0 - silence_loop)
}

/// Floors every entry of a mass vector and renormalizes so that floored
/// entries hold exactly `floor` and the total is one.
fn normalize_with_floor(mass: &mut [f64], floor: f64) -> Result<()> {
    let total: f64 = mass.iter().sum();
    if !(total.is_finite() && total > 0.0) {
        return Err(Error::InvalidProbability("no probability mass to normalize".into()));
    }
    for m in mass.iter_mut() {
        *m /= total;
    }
    if floor <= 0.0 {
        return Ok(());
    }
    if floor * mass.len() as f64 >= 1.0 {
        return Err(Error::Config(format!(
            "prior floor {floor} too large for {} labels",
            mass.len()
        )));
    }
    // Scaling the free entries may push more of them under the floor.
    loop {
        let floored: Vec<bool> = mass.iter().map(|&p| p <= floor).collect();
        let n_floored = floored.iter().filter(|&&f| f).count();
        if n_floored == mass.len() {
            let p = 1.0 / mass.len() as f64;
            mass.iter_mut().for_each(|m| *m = p);
            return Ok(());
        }
        let free_mass: f64 = mass
            .iter()
            .zip(&floored)
            .filter(|(_, &f)| !f)
            .map(|(&p, _)| p)
            .sum();
        let scale = (1.0 - floor * n_floored as f64) / free_mass;
        let mut changed = false;
        for (p, &f) in mass.iter_mut().zip(&floored) {
            if f {
                *p = floor;
            } else {
                *p *= scale;
                if *p < floor {
                    changed = true;
                }
            }
        }
        if !changed {
            return Ok(());
        }
    }
}

/// Label prior from transcript statistics and mean phoneme duration.
///
/// Each expanded speech label gets mass proportional to its occurrence
/// count times the expected per-state frames; the silence label collects
/// every utterance's residual audio frames. Entries are floored before
/// the final normalization.
pub fn p_approx_prior(
    corpus: &[Utterance],
    lexicon: &Lexicon,
    space: &LabelSpace,
    mean_phoneme_ms: f64,
    frame_shift_ms: f64,
    floor: f64,
) -> Result<PriorModel> {
    if corpus.is_empty() {
        return Err(Error::Config("empty corpus".into()));
    }
    let cfg = space.config();
    let per_state_frames =
        mean_phoneme_ms / cfg.states_per_phoneme as f64 / frame_shift_ms;
    let mut mass = vec![0.0f64; space.len()];
    for utt in corpus {
        let mut speech = 0.0;
        for word in &utt.transcript {
            let pron = lexicon.pronunciation(word).ok_or_else(|| Error::UnknownWord {
                word: word.clone(),
                utt: utt.id.clone(),
            })?;
            for unit in expand_pronunciation(pron, cfg, true) {
                mass[space.index_of(&unit)] += per_state_frames;
                speech += per_state_frames;
            }
        }
        let audio = utt.frames(frame_shift_ms);
        let residual = audio - speech;
        if residual < 0.0 {
            log::warn!(
                "utterance `{}`: expected speech {speech:.1} frames exceeds audio {audio:.1}; clamping silence to 0",
                utt.id
            );
        }
        mass[space.silence_index()] += residual.max(0.0);
    }
    normalize_with_floor(&mut mass, floor)?;
    PriorModel::new(mass)
}

/// Prior by marginalizing framewise posteriors over training data:
/// the mean of `exp(log-posterior)` over all frames, floored.
pub fn marginal_prior<'a, I>(batches: I, num_labels: usize, floor: f64) -> Result<PriorModel>
where
    I: IntoIterator<Item = &'a FrameScores>,
{
    let mut mass = vec![0.0f64; num_labels];
    let mut frames = 0usize;
    for scores in batches {
        assert_eq!(scores.num_labels(), num_labels, "label count mismatch");
        for t in 0..scores.num_frames() {
            for (i, &lp) in scores.row(t).iter().enumerate() {
                mass[i] += lp.exp();
            }
            frames += 1;
        }
    }
    if frames == 0 {
        return Err(Error::Config("no frames to marginalize".into()));
    }
    normalize_with_floor(&mut mass, floor)?;
    PriorModel::new(mass)
}
