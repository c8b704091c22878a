//! From-scratch full-sum training of a toy framewise acoustic model.
//!
//! The model is a single-hidden-layer tanh network with log-softmax
//! output, standing in for the paper-scale recurrent encoder at desk
//! scale. Subsampling max-pools the input features, so the lattice sees
//! ceil(T / factor) frames at a scaled frame shift. Optimization is
//! plain SGD under a one-cycle learning-rate policy.

mod synth;

pub use synth::{generate_corpus, write_corpus_dir, SynthConfig, SynthCorpus, SynthUtterance};

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use sha2::{Digest, Sha256};

use crate::batch::map_items;
use crate::corpus::Utterance;
use crate::error::{Error, Result};
use crate::estimation::{p_approx_prior, p_approx_transitions};
use crate::lattice::{max_pool_rows, FrameScores};
use crate::logmath::log_softmax_rows;
use crate::models::{
    loss_gradient, ModelVariant, PriorModel, Scales, TransitionModel, VariantKind,
};
use crate::topology::{
    apply_min_duration, build_ctc_fsa, build_hmm_fsa, build_label_sequence, AlignmentFsa,
    LabelConfig, LabelSpace, SilenceMode, Topology,
};

/// One training utterance: features at the base frame rate plus its
/// transcript.
#[derive(Debug, Clone)]
pub struct TrainUtterance {
    pub id: String,
    pub transcript: Vec<String>,
    pub features: FrameScores,
}

/// Affine-tanh-affine framewise acoustic model with log-softmax output.
#[derive(Debug, Clone, PartialEq)]
pub struct AcousticModel {
    pub input_dim: usize,
    pub hidden_dim: usize,
    pub output_dim: usize,
    w1: Vec<f64>,
    b1: Vec<f64>,
    w2: Vec<f64>,
    b2: Vec<f64>,
}

/// Parameter-shaped accumulator for gradients.
#[derive(Debug, Clone)]
pub struct Gradients {
    w1: Vec<f64>,
    b1: Vec<f64>,
    w2: Vec<f64>,
    b2: Vec<f64>,
}

impl Gradients {
    fn zeros(model: &AcousticModel) -> Self {
        Gradients {
            w1: vec![0.0; model.w1.len()],
            b1: vec![0.0; model.b1.len()],
            w2: vec![0.0; model.w2.len()],
            b2: vec![0.0; model.b2.len()],
        }
    }

    fn add_scaled(&mut self, other: &Gradients, scale: f64) {
        for (a, b) in self.w1.iter_mut().zip(&other.w1) {
            *a += b * scale;
        }
        for (a, b) in self.b1.iter_mut().zip(&other.b1) {
            *a += b * scale;
        }
        for (a, b) in self.w2.iter_mut().zip(&other.w2) {
            *a += b * scale;
        }
        for (a, b) in self.b2.iter_mut().zip(&other.b2) {
            *a += b * scale;
        }
    }
}

impl AcousticModel {
    // Seed-domain separator so init and shuffling draw independent streams.
    const INIT_SEED_SALT: u64 = 0x9e37_79b9_7f4a_7c15;

    /// Seeded uniform init scaled by fan-in.
    pub fn new(input_dim: usize, hidden_dim: usize, output_dim: usize, seed: u64) -> Self {
        let mut rng = ChaCha20Rng::seed_from_u64(seed ^ Self::INIT_SEED_SALT);
        let mut init = |n: usize, fan_in: usize| -> Vec<f64> {
            let bound = (1.0 / fan_in as f64).sqrt();
            (0..n).map(|_| rng.gen_range(-bound..bound)).collect()
        };
        AcousticModel {
            input_dim,
            hidden_dim,
            output_dim,
            w1: init(hidden_dim * input_dim, input_dim),
            b1: vec![0.0; hidden_dim],
            w2: init(output_dim * hidden_dim, hidden_dim),
            b2: vec![0.0; output_dim],
        }
    }

    /// Raw per-frame logits plus the hidden activations needed for
    /// backprop.
    pub fn forward_logits(&self, features: &FrameScores) -> (FrameScores, Vec<f64>) {
        assert_eq!(features.num_labels(), self.input_dim, "feature dim mismatch");
        let t_max = features.num_frames();
        let mut hidden = vec![0.0f64; t_max * self.hidden_dim];
        let mut logits = vec![0.0f64; t_max * self.output_dim];
        for t in 0..t_max {
            let x = features.row(t);
            let h = &mut hidden[t * self.hidden_dim..(t + 1) * self.hidden_dim];
            for (j, hj) in h.iter_mut().enumerate() {
                let mut acc = self.b1[j];
                let row = &self.w1[j * self.input_dim..(j + 1) * self.input_dim];
                for (w, xi) in row.iter().zip(x) {
                    acc += w * xi;
                }
                *hj = acc.tanh();
            }
            let z = &mut logits[t * self.output_dim..(t + 1) * self.output_dim];
            for (k, zk) in z.iter_mut().enumerate() {
                let mut acc = self.b2[k];
                let row = &self.w2[k * self.hidden_dim..(k + 1) * self.hidden_dim];
                for (w, hj) in row.iter().zip(&*h) {
                    acc += w * hj;
                }
                *zk = acc;
            }
        }
        let scores = FrameScores::new(t_max, self.output_dim, features.frame_shift_ms(), logits)
            .expect("finite logits");
        (scores, hidden)
    }

    /// Normalized log-posteriors; rows log-sum-exp to zero.
    pub fn posteriors(&self, features: &FrameScores) -> FrameScores {
        let (logits, _) = self.forward_logits(features);
        let mut data = logits.data().to_vec();
        log_softmax_rows(&mut data, self.output_dim);
        FrameScores::new(logits.num_frames(), self.output_dim, logits.frame_shift_ms(), data)
            .expect("finite posteriors")
    }

    /// Backprop from dLoss/dlogits to parameter gradients.
    pub fn backward(
        &self,
        features: &FrameScores,
        hidden: &[f64],
        dlogits: &[f64],
    ) -> Gradients {
        let t_max = features.num_frames();
        let mut g = Gradients::zeros(self);
        let mut dh = vec![0.0f64; self.hidden_dim];
        for t in 0..t_max {
            let x = features.row(t);
            let h = &hidden[t * self.hidden_dim..(t + 1) * self.hidden_dim];
            let dz = &dlogits[t * self.output_dim..(t + 1) * self.output_dim];
            dh.iter_mut().for_each(|v| *v = 0.0);
            for (k, &dzk) in dz.iter().enumerate() {
                g.b2[k] += dzk;
                let wrow = &self.w2[k * self.hidden_dim..(k + 1) * self.hidden_dim];
                let grow = &mut g.w2[k * self.hidden_dim..(k + 1) * self.hidden_dim];
                for j in 0..self.hidden_dim {
                    grow[j] += dzk * h[j];
                    dh[j] += dzk * wrow[j];
                }
            }
            for j in 0..self.hidden_dim {
                let dpre = dh[j] * (1.0 - h[j] * h[j]);
                g.b1[j] += dpre;
                let grow = &mut g.w1[j * self.input_dim..(j + 1) * self.input_dim];
                for (gi, xi) in grow.iter_mut().zip(x) {
                    *gi += dpre * xi;
                }
            }
        }
        g
    }

    /// One SGD step.
    pub fn apply(&mut self, grads: &Gradients, lr: f64) {
        for (w, g) in self.w1.iter_mut().zip(&grads.w1) {
            *w -= lr * g;
        }
        for (w, g) in self.b1.iter_mut().zip(&grads.b1) {
            *w -= lr * g;
        }
        for (w, g) in self.w2.iter_mut().zip(&grads.w2) {
            *w -= lr * g;
        }
        for (w, g) in self.b2.iter_mut().zip(&grads.b2) {
            *w -= lr * g;
        }
    }
}

/// Training configuration. `transitions`/`prior` left unset are
/// estimated from the corpus when the variant needs them.
#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub variant: VariantKind,
    pub scales: Scales,
    pub label_cfg: LabelConfig,
    pub silence: SilenceMode,
    pub subsample_factor: u32,
    pub min_duration: u32,
    pub epochs: usize,
    pub batch_size: usize,
    pub peak_lr: f64,
    pub min_lr: f64,
    pub oclr_fraction: f64,
    pub hidden_dim: usize,
    pub seed: u64,
    pub mean_phoneme_ms: f64,
    pub prior_floor: f64,
    pub transitions: Option<TransitionModel>,
    pub prior: Option<PriorModel>,
    /// Re-evaluate the batch loss after every 10th update and count
    /// increases.
    pub descent_check: bool,
}

impl TrainConfig {
    pub fn new(variant: VariantKind) -> Self {
        TrainConfig {
            variant,
            scales: Scales::for_kind(variant),
            label_cfg: LabelConfig::default(),
            silence: SilenceMode::WordBoundaries,
            subsample_factor: 1,
            min_duration: 1,
            epochs: 50,
            batch_size: 8,
            peak_lr: 0.1,
            min_lr: 1e-5,
            oclr_fraction: 0.9,
            hidden_dim: 64,
            seed: 1,
            mean_phoneme_ms: 80.0,
            prior_floor: 1e-4,
            transitions: None,
            prior: None,
            descent_check: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.oclr_fraction > 0.0 && self.oclr_fraction <= 1.0) {
            return Err(Error::Config(format!(
                "oclr-fraction {} not in (0, 1]",
                self.oclr_fraction
            )));
        }
        for (name, v) in [
            ("epochs", self.epochs),
            ("batch-size", self.batch_size),
            ("hidden-dim", self.hidden_dim),
        ] {
            if v < 1 {
                return Err(Error::Config(format!("{name} must be >= 1")));
            }
        }
        if self.subsample_factor < 1 {
            return Err(Error::InvalidSubsampleFactor(self.subsample_factor));
        }
        if self.min_duration < 1 {
            return Err(Error::InvalidMinDuration(self.min_duration));
        }
        Ok(())
    }

    /// Canonical key=value listing; the fingerprint hashes exactly this.
    pub fn canonical(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: String| s.push_str(&format!("{k} = {v}\n"));
        kv("variant", self.variant.name().into());
        kv("alpha", format!("{}", self.scales.alpha));
        kv("beta", format!("{}", self.scales.beta));
        kv("gamma", format!("{}", self.scales.gamma));
        kv("lambda", format!("{}", self.scales.lambda));
        kv("eow", format!("{}", self.label_cfg.eow));
        kv("states-per-phoneme", format!("{}", self.label_cfg.states_per_phoneme));
        kv("silence", match self.silence {
            SilenceMode::None => "none".into(),
            SilenceMode::WordBoundaries => "word-boundaries".into(),
        });
        kv("subsample-factor", format!("{}", self.subsample_factor));
        kv("min-duration", format!("{}", self.min_duration));
        kv("epochs", format!("{}", self.epochs));
        kv("batch-size", format!("{}", self.batch_size));
        kv("peak-lr", format!("{}", self.peak_lr));
        kv("min-lr", format!("{}", self.min_lr));
        kv("oclr-fraction", format!("{}", self.oclr_fraction));
        kv("hidden-dim", format!("{}", self.hidden_dim));
        kv("seed", format!("{}", self.seed));
        kv("mean-phoneme-ms", format!("{}", self.mean_phoneme_ms));
        kv("prior-floor", format!("{}", self.prior_floor));
        kv(
            "transitions",
            self.transitions.map_or("p-approx".into(), |t| {
                format!("{},{},{},{}", t.speech_loop, t.speech_forward, t.silence_loop, t.silence_forward)
            }),
        );
        kv(
            "prior",
            self.prior.as_ref().map_or("p-approx".into(), |p| {
                p.probs().iter().map(|v| format!("{v}")).collect::<Vec<_>>().join(",")
            }),
        );
        s
    }

    /// Short hash of the canonical configuration; changes iff any field
    /// changes.
    pub fn fingerprint(&self) -> String {
        let digest = Sha256::digest(self.canonical().as_bytes());
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Piecewise-linear one-cycle schedule: rise from peak/10 to the peak at
/// the midpoint of the OCLR span, fall back to peak/10, then hold the
/// constant minimum learning rate for the remaining steps.
pub fn lr_schedule(step: usize, total_steps: usize, cfg: &TrainConfig) -> f64 {
    debug_assert!(step < total_steps.max(1));
    let span = (cfg.oclr_fraction * total_steps as f64).floor() as usize;
    if step >= span {
        return cfg.min_lr;
    }
    let start = cfg.peak_lr / 10.0;
    let mid = span / 2;
    if mid == 0 {
        return cfg.peak_lr;
    }
    if step <= mid {
        start + (cfg.peak_lr - start) * step as f64 / mid as f64
    } else {
        cfg.peak_lr - (cfg.peak_lr - start) * (step - mid) as f64 / (span - mid) as f64
    }
}

/// Per-epoch trace entry. `lr` is the rate used at the epoch's last step.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    pub loss: f64,
    pub lr: f64,
}

#[derive(Debug)]
pub struct TrainOutcome {
    pub model: AcousticModel,
    pub trace: Vec<EpochStats>,
    pub space: LabelSpace,
    /// Utterances skipped because their lattice has no path at the
    /// subsampled frame count.
    pub skipped: usize,
    pub descent_violations: usize,
    /// Tables actually used (estimated or supplied), for serialization.
    pub transitions: Option<TransitionModel>,
    pub prior: Option<PriorModel>,
}

/// Max-pools input features by the subsample factor.
pub fn subsample_features(features: &FrameScores, factor: u32) -> Result<FrameScores> {
    if factor < 1 {
        return Err(Error::InvalidSubsampleFactor(factor));
    }
    if factor == 1 {
        return Ok(features.clone());
    }
    let pooled = max_pool_rows(
        features.data(),
        features.num_frames(),
        features.num_labels(),
        factor as usize,
    );
    FrameScores::new(
        features.num_frames().div_ceil(factor as usize),
        features.num_labels(),
        features.frame_shift_ms() * factor as f32,
        pooled,
    )
}

/// Builds the alignment FSA for one utterance under the config.
pub fn build_utterance_fsa(
    cfg: &TrainConfig,
    space: &LabelSpace,
    lexicon: &crate::topology::Lexicon,
    transcript: &[&str],
    utt: &str,
) -> Result<AlignmentFsa> {
    let seq = build_label_sequence(transcript, lexicon, cfg.label_cfg, utt)?;
    let fsa = match cfg.variant.topology() {
        Topology::Ctc => build_ctc_fsa(space, &seq),
        Topology::Hmm01 => build_hmm_fsa(space, &seq, cfg.silence),
    };
    apply_min_duration(&fsa, cfg.min_duration)
}

/// Label space matching the config's variant topology.
pub fn label_space_for(cfg: &TrainConfig, lexicon: &crate::topology::Lexicon) -> Result<LabelSpace> {
    match cfg.variant.topology() {
        Topology::Ctc => LabelSpace::ctc(lexicon.phonemes().to_vec(), cfg.label_cfg),
        Topology::Hmm01 => LabelSpace::hmm(lexicon.phonemes().to_vec(), cfg.label_cfg),
    }
}

/// Resolves the variant's probability tables, estimating by P-approx
/// from the corpus where the config leaves them unset.
pub fn resolve_variant(
    cfg: &TrainConfig,
    space: &LabelSpace,
    lexicon: &crate::topology::Lexicon,
    data: &[TrainUtterance],
) -> Result<ModelVariant> {
    let needs_transitions = matches!(cfg.variant, VariantKind::PHmm | VariantKind::HHmm);
    let needs_prior = matches!(cfg.variant, VariantKind::HHmm);
    let meta: Vec<Utterance> = data
        .iter()
        .map(|u| Utterance {
            id: u.id.clone(),
            duration_ms: u.features.num_frames() as f64 * u.features.frame_shift_ms() as f64,
            transcript: u.transcript.clone(),
        })
        .collect();
    let shift = data
        .first()
        .map(|u| u.features.frame_shift_ms() as f64)
        .unwrap_or(crate::lattice::DEFAULT_FRAME_SHIFT_MS as f64);

    let transitions = if needs_transitions {
        Some(match cfg.transitions {
            Some(t) => t,
            None => p_approx_transitions(
                cfg.mean_phoneme_ms,
                shift,
                &meta,
                lexicon,
                cfg.label_cfg.states_per_phoneme,
            )?,
        })
    } else {
        None
    };
    let prior = if needs_prior {
        Some(match &cfg.prior {
            Some(p) => p.clone(),
            None => p_approx_prior(
                &meta,
                lexicon,
                space,
                cfg.mean_phoneme_ms,
                shift,
                cfg.prior_floor,
            )?,
        })
    } else {
        None
    };

    Ok(match cfg.variant {
        VariantKind::Ctc => ModelVariant::ctc(cfg.scales),
        VariantKind::PHmmS => ModelVariant::p_hmm_s(cfg.scales),
        VariantKind::PHmm => ModelVariant::p_hmm(cfg.scales, transitions.unwrap()),
        VariantKind::HHmm => {
            ModelVariant::h_hmm(cfg.scales, transitions.unwrap(), prior.unwrap())
        }
    })
}

struct Prepared {
    id: String,
    features: FrameScores,
    fsa: AlignmentFsa,
}

/// Full-sum training loop. Deterministic given the config seed; the
/// loss trace records the mean per-utterance loss each epoch.
pub fn train(
    cfg: &TrainConfig,
    data: &[TrainUtterance],
    lexicon: &crate::topology::Lexicon,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(Error::Config("no training utterances".into()));
    }
    let space = label_space_for(cfg, lexicon)?;
    let variant = resolve_variant(cfg, &space, lexicon, data)?;

    let mut prepared = Vec::with_capacity(data.len());
    let mut skipped = 0usize;
    for utt in data {
        let transcript: Vec<&str> = utt.words();
        let fsa = build_utterance_fsa(cfg, &space, lexicon, &transcript, &utt.id)?;
        let features = subsample_features(&utt.features, cfg.subsample_factor)?;
        let frames = features.num_frames();
        let min_frames = fsa.min_frames().unwrap_or(usize::MAX);
        if frames < min_frames {
            log::warn!(
                "skipping `{}`: {frames} frames < minimum {min_frames} for its lattice",
                utt.id
            );
            skipped += 1;
            continue;
        }
        prepared.push(Prepared { id: utt.id.clone(), features, fsa });
    }
    if prepared.is_empty() {
        return Err(Error::Config(format!(
            "all {} utterances skipped (empty lattices); lower min-duration or subsampling",
            data.len()
        )));
    }

    let input_dim = prepared[0].features.num_labels();
    let mut model = AcousticModel::new(input_dim, cfg.hidden_dim, space.len(), cfg.seed);
    let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed);

    let n = prepared.len();
    let steps_per_epoch = n.div_ceil(cfg.batch_size);
    let total_steps = steps_per_epoch * cfg.epochs;
    let mut step = 0usize;
    let mut trace = Vec::with_capacity(cfg.epochs + 1);
    let mut descent_violations = 0usize;

    let batch_loss = |model: &AcousticModel, batch: &[&Prepared]| -> Result<f64> {
        let losses = map_items(batch, |p| {
            let (logits, _) = model.forward_logits(&p.features);
            loss_gradient(&variant, &p.fsa, &logits, &p.id).map(|(l, _)| l)
        });
        let mut sum = 0.0;
        for l in losses {
            sum += l?;
        }
        Ok(sum / batch.len() as f64)
    };

    // Untrained baseline as the first trace row; training epochs follow
    // as rows 1..=epochs.
    {
        let all: Vec<&Prepared> = prepared.iter().collect();
        let initial = batch_loss(&model, &all)?;
        trace.push(EpochStats { epoch: 0, loss: initial, lr: 0.0 });
    }

    let mut order: Vec<usize> = (0..n).collect();
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0f64;
        let mut last_lr = cfg.min_lr;
        for chunk in order.chunks(cfg.batch_size) {
            let batch: Vec<&Prepared> = chunk.iter().map(|&i| &prepared[i]).collect();
            let results = map_items(&batch, |p| -> Result<(f64, Gradients)> {
                let (logits, hidden) = model.forward_logits(&p.features);
                let (loss, dlogits) = loss_gradient(&variant, &p.fsa, &logits, &p.id)?;
                let grads = model.backward(&p.features, &hidden, &dlogits);
                Ok((loss, grads))
            });
            let mut acc = Gradients::zeros(&model);
            let scale = 1.0 / batch.len() as f64;
            let mut pre_loss = 0.0;
            for r in results {
                let (loss, grads) = r?;
                epoch_loss += loss;
                pre_loss += loss * scale;
                acc.add_scaled(&grads, scale);
            }
            let lr = lr_schedule(step, total_steps, cfg);
            last_lr = lr;
            model.apply(&acc, lr);
            if cfg.descent_check && step.is_multiple_of(10) {
                let post = batch_loss(&model, &batch)?;
                if post > pre_loss {
                    descent_violations += 1;
                    log::warn!(
                        "descent check failed at step {step}: {pre_loss:.6} -> {post:.6}"
                    );
                }
            }
            step += 1;
        }
        trace.push(EpochStats { epoch: epoch + 1, loss: epoch_loss / n as f64, lr: last_lr });
    }

    Ok(TrainOutcome {
        model,
        trace,
        space,
        skipped,
        descent_violations,
        transitions: variant.transitions,
        prior: variant.prior,
    })
}

/// Writes the loss trace as `epoch,loss,lr` CSV.
pub fn write_loss_trace(path: &Path, trace: &[EpochStats]) -> Result<()> {
    let mut text = String::from("epoch,loss,lr\n");
    for e in trace {
        text.push_str(&format!("{},{},{}\n", e.epoch, e.loss, e.lr));
    }
    std::fs::write(path, text)?;
    Ok(())
}

const CHECKPOINT_MAGIC: &[u8; 4] = b"AMD1";

/// Binary checkpoint: magic, fingerprint, dims, then f64 tensors.
pub fn save_checkpoint(path: &Path, model: &AcousticModel, fingerprint: &str) -> Result<()> {
    let tmp = path.with_extension("tmp");
    {
        let mut w = BufWriter::new(File::create(&tmp)?);
        w.write_all(CHECKPOINT_MAGIC)?;
        let fp = fingerprint.as_bytes();
        w.write_all(&(fp.len() as u32).to_le_bytes())?;
        w.write_all(fp)?;
        for dim in [model.input_dim, model.hidden_dim, model.output_dim] {
            w.write_all(&(dim as u32).to_le_bytes())?;
        }
        for tensor in [&model.w1, &model.b1, &model.w2, &model.b2] {
            for &v in tensor.iter() {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        w.flush()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<(AcousticModel, String)> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != CHECKPOINT_MAGIC {
        return Err(Error::Format {
            path: path.display().to_string(),
            msg: "bad checkpoint magic".into(),
        });
    }
    let mut len4 = [0u8; 4];
    r.read_exact(&mut len4)?;
    let fp_len = u32::from_le_bytes(len4) as usize;
    let mut fp = vec![0u8; fp_len];
    r.read_exact(&mut fp)?;
    let fingerprint = String::from_utf8(fp).map_err(|_| Error::Format {
        path: path.display().to_string(),
        msg: "bad fingerprint encoding".into(),
    })?;
    let mut dims = [0usize; 3];
    for d in dims.iter_mut() {
        r.read_exact(&mut len4)?;
        *d = u32::from_le_bytes(len4) as usize;
    }
    let [input_dim, hidden_dim, output_dim] = dims;
    let mut read_tensor = |n: usize| -> Result<Vec<f64>> {
        let mut bytes = vec![0u8; n * 8];
        r.read_exact(&mut bytes)?;
        Ok(bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    };
    let w1 = read_tensor(hidden_dim * input_dim)?;
    let b1 = read_tensor(hidden_dim)?;
    let w2 = read_tensor(output_dim * hidden_dim)?;
    let b2 = read_tensor(output_dim)?;
    Ok((AcousticModel { input_dim, hidden_dim, output_dim, w1, b1, w2, b2 }, fingerprint))
}

impl TrainUtterance {
    pub fn words(&self) -> Vec<&str> {
        self.transcript.iter().map(|s| s.as_str()).collect()
    }
}

/// Loads corpus metadata plus per-utterance feature containers
/// (`<features-dir>/<utt-id>.fsc`).
pub fn load_training_data(
    corpus_path: &Path,
    features_dir: &Path,
) -> Result<Vec<TrainUtterance>> {
    let meta = crate::corpus::read_corpus(corpus_path)?;
    let mut out = Vec::with_capacity(meta.len());
    for u in meta {
        let path = features_dir.join(format!("{}.fsc", u.id));
        let features = crate::lattice::read_frame_scores(&path)?;
        out.push(TrainUtterance { id: u.id, transcript: u.transcript, features });
    }
    Ok(out)
}
