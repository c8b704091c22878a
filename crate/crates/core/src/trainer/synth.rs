//! Seeded synthetic corpus with planted HMM-0-1 alignments.
//!
//! Each utterance plants a frame-level alignment with geometric unit
//! durations (loop probability 7/8 at the default 8-frame mean) and
//! optional silence at word boundaries, then emits features that are
//! one-hot label identities plus Gaussian noise. The planted word
//! boundaries ship as the reference alignment.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::error::{Error, Result};
use crate::evaluation::{AlignmentSet, UttAlignment};
use crate::lattice::FrameScores;
use crate::topology::{expand_pronunciation, LabelConfig, LabelSpace, Lexicon};
use crate::trainer::TrainUtterance;

/// Candidate phoneme names; `inventory_size` takes a prefix.
const PHONEME_POOL: [&str; 10] = ["AH", "B", "D", "EH", "K", "S", "M", "IY", "T", "N"];

#[derive(Debug, Clone)]
pub struct SynthConfig {
    pub seed: u64,
    pub num_utts: usize,
    /// Phoneme inventory size, at most 10.
    pub inventory_size: usize,
    /// Vocabulary size.
    pub num_words: usize,
    pub min_words_per_utt: usize,
    pub max_words_per_utt: usize,
    /// Mean speech-unit duration in frames; loop probability is
    /// `1 - 1/mean`.
    pub mean_unit_frames: f64,
    pub mean_silence_frames: f64,
    /// Probability of a silence segment between two words.
    pub between_silence_prob: f64,
    /// Probability of silence at sentence begin and end.
    pub edge_silence_prob: f64,
    pub noise_sigma: f64,
    pub label_cfg: LabelConfig,
    pub frame_shift_ms: f32,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            seed: 1,
            num_utts: 50,
            inventory_size: 6,
            num_words: 8,
            min_words_per_utt: 2,
            max_words_per_utt: 5,
            mean_unit_frames: 8.0,
            mean_silence_frames: 6.0,
            between_silence_prob: 0.3,
            edge_silence_prob: 0.8,
            noise_sigma: 0.1,
            label_cfg: LabelConfig { eow: true, states_per_phoneme: 1 },
            frame_shift_ms: 10.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SynthUtterance {
    pub id: String,
    pub transcript: Vec<String>,
    pub features: FrameScores,
    /// Planted alignment at the base frame rate.
    pub reference: UttAlignment,
}

#[derive(Debug, Clone)]
pub struct SynthCorpus {
    pub lexicon: Lexicon,
    /// HMM label space; features are one-hot over its length.
    pub space: LabelSpace,
    pub utterances: Vec<SynthUtterance>,
    pub frame_shift_ms: f32,
}

impl SynthCorpus {
    pub fn train_utterances(&self) -> Vec<TrainUtterance> {
        self.utterances
            .iter()
            .map(|u| TrainUtterance {
                id: u.id.clone(),
                transcript: u.transcript.clone(),
                features: u.features.clone(),
            })
            .collect()
    }

    pub fn reference_alignments(&self) -> AlignmentSet {
        let mut set = AlignmentSet::new(self.frame_shift_ms as f64);
        for u in &self.utterances {
            set.utts.insert(u.id.clone(), u.reference.clone());
        }
        set
    }
}

fn geometric(rng: &mut ChaCha20Rng, mean: f64, cap: usize) -> usize {
    let loop_p = (1.0 - 1.0 / mean.max(1.0)).max(0.0);
    let mut d = 1usize;
    while d < cap && rng.gen::<f64>() < loop_p {
        d += 1;
    }
    d
}

/// Deterministic corpus generation from the seed.
pub fn generate_corpus(cfg: &SynthConfig) -> Result<SynthCorpus> {
    if cfg.inventory_size == 0 || cfg.inventory_size > PHONEME_POOL.len() {
        return Err(Error::Config(format!(
            "inventory size must be 1..={}, got {}",
            PHONEME_POOL.len(),
            cfg.inventory_size
        )));
    }
    if cfg.min_words_per_utt < 1 || cfg.max_words_per_utt < cfg.min_words_per_utt {
        return Err(Error::Config("bad words-per-utterance range".into()));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed);
    let phonemes: Vec<String> =
        PHONEME_POOL[..cfg.inventory_size].iter().map(|s| s.to_string()).collect();

    // Sampled vocabulary with unique pronunciations and names.
    let mut lexicon = Lexicon::new(phonemes.clone())?;
    let mut prons: Vec<Vec<usize>> = Vec::new();
    let mut words: Vec<String> = Vec::new();
    let mut guard = 0;
    while words.len() < cfg.num_words {
        guard += 1;
        if guard > 10_000 {
            return Err(Error::Config("vocabulary sampling did not converge".into()));
        }
        let len = rng.gen_range(1..=3usize);
        let pron: Vec<usize> = (0..len).map(|_| rng.gen_range(0..phonemes.len())).collect();
        if prons.contains(&pron) {
            continue;
        }
        let name: String =
            pron.iter().map(|&p| phonemes[p].to_lowercase()).collect::<Vec<_>>().join("");
        if words.contains(&name) {
            continue;
        }
        let pron_names: Vec<&str> = pron.iter().map(|&p| phonemes[p].as_str()).collect();
        lexicon.add_entry(&name, &pron_names)?;
        prons.push(pron);
        words.push(name);
    }

    let space = LabelSpace::hmm(phonemes, cfg.label_cfg)?;
    let sil_label = space.silence_index();

    let mut utterances = Vec::with_capacity(cfg.num_utts);
    for utt_idx in 0..cfg.num_utts {
        let n_words = rng.gen_range(cfg.min_words_per_utt..=cfg.max_words_per_utt);
        let transcript: Vec<String> =
            (0..n_words).map(|_| words[rng.gen_range(0..words.len())].clone()).collect();

        // Planted segments: (emission label, frames, owning word or silence).
        let mut reference = UttAlignment::default();
        let mut labels: Vec<usize> = Vec::new();
        let push_silence = |rng: &mut ChaCha20Rng, labels: &mut Vec<usize>, reference: &mut UttAlignment| {
            let d = geometric(rng, cfg.mean_silence_frames, 40);
            let start = labels.len();
            labels.extend(std::iter::repeat_n(sil_label, d));
            reference.segments.push((
                crate::topology::SILENCE_NAME.to_string(),
                start,
                labels.len(),
                "silence".into(),
            ));
        };

        if rng.gen::<f64>() < cfg.edge_silence_prob {
            push_silence(&mut rng, &mut labels, &mut reference);
        }
        for (w, word) in transcript.iter().enumerate() {
            if w > 0 && rng.gen::<f64>() < cfg.between_silence_prob {
                push_silence(&mut rng, &mut labels, &mut reference);
            }
            let pron = lexicon.pronunciation(word).expect("sampled word");
            let word_start = labels.len();
            for unit in expand_pronunciation(pron, cfg.label_cfg, true) {
                let d = geometric(&mut rng, cfg.mean_unit_frames, 40);
                let start = labels.len();
                let label = space.index_of(&unit);
                labels.extend(std::iter::repeat_n(label, d));
                reference.segments.push((
                    space.label_name(label),
                    start,
                    labels.len(),
                    "phoneme".into(),
                ));
            }
            reference.words.push((word.clone(), word_start, labels.len()));
        }
        if rng.gen::<f64>() < cfg.edge_silence_prob {
            push_silence(&mut rng, &mut labels, &mut reference);
        }

        let t_max = labels.len();
        let dim = space.len();
        let mut data = Vec::with_capacity(t_max * dim);
        for &label in &labels {
            for i in 0..dim {
                let noise: f64 = {
                    // Box-Muller from two uniform draws.
                    let u1: f64 = rng.gen::<f64>().max(1e-12);
                    let u2: f64 = rng.gen::<f64>();
                    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
                };
                let base = if i == label { 1.0 } else { 0.0 };
                data.push(base + cfg.noise_sigma * noise);
            }
        }
        let features = FrameScores::new(t_max, dim, cfg.frame_shift_ms, data)?;
        utterances.push(SynthUtterance {
            id: format!("synth-{utt_idx:04}"),
            transcript,
            features,
            reference,
        });
    }

    Ok(SynthCorpus { lexicon, space, utterances, frame_shift_ms: cfg.frame_shift_ms })
}

/// Writes a generated corpus as a directory: `corpus.tsv`,
/// `lexicon.txt`, `phones.txt`, `reference.ali`, and
/// `features/<id>.fsc`.
pub fn write_corpus_dir(corpus: &SynthCorpus, dir: &std::path::Path) -> Result<()> {
    std::fs::create_dir_all(dir.join("features"))?;
    corpus.lexicon.save(&dir.join("phones.txt"), &dir.join("lexicon.txt"))?;
    let meta: Vec<crate::corpus::Utterance> = corpus
        .utterances
        .iter()
        .map(|u| crate::corpus::Utterance {
            id: u.id.clone(),
            duration_ms: u.features.num_frames() as f64 * corpus.frame_shift_ms as f64,
            transcript: u.transcript.clone(),
        })
        .collect();
    crate::corpus::write_corpus(&dir.join("corpus.tsv"), &meta)?;
    for u in &corpus.utterances {
        crate::lattice::write_frame_scores(
            &dir.join("features").join(format!("{}.fsc", u.id)),
            &u.features,
        )?;
    }
    crate::evaluation::write_alignments(&dir.join("reference.ali"), &corpus.reference_alignments())?;
    Ok(())
}
