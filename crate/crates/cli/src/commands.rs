//! Subcommand implementations.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};

use fullsum::batch::{configure_jobs, map_items};
use fullsum::decoder::{build_decoding_graph, decode as decode_utt, NGramLm};
use fullsum::estimation::{marginal_prior, p_approx_prior, p_approx_transitions};
use fullsum::evaluation::{
    compute_tse, compute_wer, emit_alignment_plot, read_alignments, write_alignments,
    AlignmentSet,
};
use fullsum::lattice::{
    read_hard_alignment, read_soft_alignment, write_hard_alignment, write_soft_alignment,
};
use fullsum::models::{
    arc_weight_fn, PriorModel, Scales, TransitionModel, VariantKind,
};
use fullsum::topology::{LabelConfig, LabelSpace, Lexicon, SilenceMode};
use fullsum::trainer::{
    build_utterance_fsa, generate_corpus, label_space_for, load_checkpoint, load_training_data,
    resolve_variant, save_checkpoint, subsample_features, train as run_train, write_corpus_dir,
    write_loss_trace, SynthConfig, TrainConfig, TrainUtterance,
};

use crate::cfg::{parse_float_list, Settings};
use crate::{AlignCmd, DataArgs, DecodeCmd, EstimateCmd, ModelArgs, PlotCmd, SweepCmd, SynthCmd, TrainCmd, TseCmd, WerCmd};

fn parse_silence(s: &str) -> Result<SilenceMode> {
    match s {
        "none" => Ok(SilenceMode::None),
        "word-boundaries" => Ok(SilenceMode::WordBoundaries),
        other => bail!("unknown silence mode `{other}` (expected none or word-boundaries)"),
    }
}

struct ResolvedModel {
    cfg: TrainConfig,
    prior_path: Option<PathBuf>,
    settings: Settings,
}

/// Applies flag > config > default precedence for the lattice/weight
/// settings shared across commands.
fn resolve_model(margs: ModelArgs) -> Result<ResolvedModel> {
    let mut st = Settings::load(margs.config.as_deref())?;
    let variant =
        VariantKind::parse(&st.get("variant", margs.variant, "p-hmm-s".to_string())?)?;
    let mut cfg = TrainConfig::new(variant);
    cfg.scales = Scales::new(
        st.get("alpha", margs.alpha, cfg.scales.alpha)?,
        st.get("beta", margs.beta, cfg.scales.beta)?,
        st.get("gamma", margs.gamma, cfg.scales.gamma)?,
        cfg.scales.lambda,
    )?;
    cfg.label_cfg = LabelConfig::new(
        st.get("eow", margs.eow, true)?,
        st.get("states-per-phoneme", margs.states_per_phoneme, 1)?,
    )?;
    cfg.silence = parse_silence(&st.get("silence", margs.silence, "word-boundaries".into())?)?;
    cfg.subsample_factor = st.get("subsample-factor", margs.subsample_factor, 1u32)?;
    cfg.min_duration = st.get("min-duration", margs.min_duration, 1u32)?;
    cfg.mean_phoneme_ms = st.get("mean-phoneme-ms", margs.mean_phoneme_ms, 80.0)?;
    cfg.prior_floor = st.get("prior-floor", margs.prior_floor, 1e-4)?;
    if let Some(path) = st.get_path("transition-file", margs.transition_file)? {
        cfg.transitions = Some(TransitionModel::load(&path)?);
    }
    let prior_path = st.get_path("prior-file", margs.prior_file)?;
    let jobs = st.get("jobs", margs.jobs, 0usize)?;
    configure_jobs(jobs);
    Ok(ResolvedModel { cfg, prior_path, settings: st })
}

struct LoadedData {
    lexicon: Lexicon,
    utts: Vec<TrainUtterance>,
}

fn resolve_data(st: &mut Settings, d: DataArgs) -> Result<LoadedData> {
    let corpus = st.require_path("corpus", d.corpus)?;
    let features = st.require_path("features-dir", d.features_dir)?;
    let lexicon = st.require_path("lexicon", d.lexicon)?;
    let phones = st.require_path("phones", d.phones)?;
    let lexicon = Lexicon::load(&phones, &lexicon)?;
    let utts = load_training_data(&corpus, &features)
        .with_context(|| format!("loading corpus `{}`", corpus.display()))?;
    Ok(LoadedData { lexicon, utts })
}

fn load_prior_if_given(
    cfg: &mut TrainConfig,
    prior_path: &Option<PathBuf>,
    space: &LabelSpace,
) -> Result<()> {
    if let Some(path) = prior_path {
        cfg.prior = Some(PriorModel::load(path, space)?);
    }
    Ok(())
}

fn emit(out: Option<&Path>, content: &str) -> Result<()> {
    match out {
        Some(path) => {
            let tmp = path.with_extension("tmp");
            std::fs::write(&tmp, content)?;
            std::fs::rename(&tmp, path)?;
        }
        None => print!("{content}"),
    }
    Ok(())
}

pub fn train(args: TrainCmd) -> Result<()> {
    let ResolvedModel { mut cfg, prior_path, mut settings } = resolve_model(args.model)?;
    cfg.epochs = settings.get("epochs", args.epochs, cfg.epochs)?;
    cfg.batch_size = settings.get("batch-size", args.batch_size, cfg.batch_size)?;
    cfg.peak_lr = settings.get("peak-lr", args.peak_lr, cfg.peak_lr)?;
    cfg.min_lr = settings.get("min-lr", args.min_lr, cfg.min_lr)?;
    cfg.oclr_fraction = settings.get("oclr-fraction", args.oclr_fraction, cfg.oclr_fraction)?;
    cfg.hidden_dim = settings.get("hidden-dim", args.hidden_dim, cfg.hidden_dim)?;
    cfg.seed = settings.get("seed", args.seed, cfg.seed)?;
    let out = settings
        .get_path("out", args.out)?
        .unwrap_or_else(|| PathBuf::from("model.amd"));
    let trace_path = settings.get_path("trace", args.trace)?;

    let data = resolve_data(&mut settings, args.data)?;
    let space = label_space_for(&cfg, &data.lexicon)?;
    load_prior_if_given(&mut cfg, &prior_path, &space)?;

    let fingerprint = cfg.fingerprint();
    eprintln!("config fingerprint: {fingerprint}");

    let outcome = run_train(&cfg, &data.utts, &data.lexicon)?;
    save_checkpoint(&out, &outcome.model, &fingerprint)?;
    if let Some(path) = &trace_path {
        write_loss_trace(path, &outcome.trace)?;
    }
    let first = outcome.trace.first().map(|e| e.loss).unwrap_or(f64::NAN);
    let last = outcome.trace.last().map(|e| e.loss).unwrap_or(f64::NAN);
    println!("fingerprint\t{fingerprint}");
    println!("epochs\t{}", outcome.trace.len());
    println!("initial_loss\t{first:.6}");
    println!("final_loss\t{last:.6}");
    println!("skipped\t{}", outcome.skipped);
    println!("checkpoint\t{}", out.display());
    Ok(())
}

pub fn align(args: AlignCmd) -> Result<()> {
    if !args.viterbi && !args.baum_welch {
        bail!("nothing to do: pass --viterbi and/or --baum-welch");
    }
    let ResolvedModel { mut cfg, prior_path, mut settings } = resolve_model(args.model)?;
    let model_path = settings.require_path("model-file", args.model_file)?;
    let out_dir = settings
        .get_path("out-dir", args.out_dir)?
        .unwrap_or_else(|| PathBuf::from("alignments"));
    let data = resolve_data(&mut settings, args.data)?;

    let (model, ckpt_fp) = load_checkpoint(&model_path)?;
    let space = label_space_for(&cfg, &data.lexicon)?;
    if model.output_dim != space.len() {
        bail!(
            "checkpoint has {} outputs but the label space has {} labels; check eow/states/variant settings",
            model.output_dim,
            space.len()
        );
    }
    load_prior_if_given(&mut cfg, &prior_path, &space)?;
    let variant = resolve_variant(&cfg, &space, &data.lexicon, &data.utts)?;
    let weights = arc_weight_fn(&variant)?;
    eprintln!("config fingerprint: {} (checkpoint {ckpt_fp})", settings.fingerprint());

    std::fs::create_dir_all(&out_dir)?;
    struct UttOut {
        id: String,
        hard: Option<fullsum::lattice::HardAlignment>,
        soft: Option<fullsum::lattice::SoftAlignment>,
    }
    let results = map_items(&data.utts, |utt| -> Result<Option<UttOut>> {
        let transcript: Vec<&str> = utt.words();
        let fsa = build_utterance_fsa(&cfg, &space, &data.lexicon, &transcript, &utt.id)?;
        let features = subsample_features(&utt.features, cfg.subsample_factor)?;
        let frames = features.num_frames();
        let min_frames = fsa.min_frames().unwrap_or(usize::MAX);
        if frames < min_frames {
            log::warn!(
                "skipping `{}`: {frames} frames < minimum {min_frames} for its lattice",
                utt.id
            );
            return Ok(None);
        }
        let posteriors = model.posteriors(&features);
        let hard = if args.viterbi {
            Some(fullsum::lattice::viterbi(&fsa, &posteriors, &weights)?.1)
        } else {
            None
        };
        let soft = if args.baum_welch {
            Some(fullsum::lattice::occupation_probabilities(&fsa, &posteriors, &weights)?)
        } else {
            None
        };
        Ok(Some(UttOut { id: utt.id.clone(), hard, soft }))
    });

    let mut skipped = 0usize;
    let mut hard_set: Option<AlignmentSet> = None;
    for r in results {
        let Some(r) = r? else {
            skipped += 1;
            continue;
        };
        if let Some(hard) = &r.hard {
            write_hard_alignment(&out_dir.join(format!("{}.hal", r.id)), hard, space.len())?;
            let set = hard_set.get_or_insert_with(|| {
                AlignmentSet::new(hard.frame_shift_ms as f64)
            });
            set.insert_hard(&r.id, hard, &space);
        }
        if let Some(soft) = &r.soft {
            write_soft_alignment(&out_dir.join(format!("{}.sal", r.id)), soft)?;
        }
    }
    if let Some(set) = &hard_set {
        write_alignments(&out_dir.join("alignment.ali"), set)?;
        println!("alignment\t{}", out_dir.join("alignment.ali").display());
    }
    println!("utterances\t{}", data.utts.len() - skipped);
    println!("skipped\t{skipped}");
    println!("out_dir\t{}", out_dir.display());
    Ok(())
}

pub fn decode(args: DecodeCmd) -> Result<()> {
    let ResolvedModel { mut cfg, prior_path, mut settings } = resolve_model(args.model)?;
    let model_path = settings.require_path("model-file", args.model_file)?;
    let lm_path = settings.require_path("lm", args.lm)?;
    let lambda = settings.get("lambda", args.lambda, 1.0)?;
    let beam = settings.get("beam", args.beam, f64::INFINITY)?;
    let max_order = settings.get("max-lm-order", args.max_lm_order, 2usize)?;
    let out = settings.get_path("out", args.out)?;
    // Decoding scales: gamma/alpha/beta from the shared flags, no tuned
    // defaults beyond gamma = 1.
    let scales = Scales::new(cfg.scales.alpha, cfg.scales.beta, cfg.scales.gamma, lambda)?;

    let data = resolve_data(&mut settings, args.data)?;
    let (model, ckpt_fp) = load_checkpoint(&model_path)?;
    let space = label_space_for(&cfg, &data.lexicon)?;
    if model.output_dim != space.len() {
        bail!(
            "checkpoint has {} outputs but the label space has {} labels",
            model.output_dim,
            space.len()
        );
    }
    load_prior_if_given(&mut cfg, &prior_path, &space)?;
    let graph = build_decoding_graph(&data.lexicon, &space, cfg.variant)?;
    let lm = NGramLm::from_file(&lm_path, max_order)?;
    eprintln!("config fingerprint: {} (checkpoint {ckpt_fp})", settings.fingerprint());

    let results = map_items(&data.utts, |utt| -> Result<(String, String, f64)> {
        let features = subsample_features(&utt.features, cfg.subsample_factor)?;
        let posteriors = model.posteriors(&features);
        let hyp = decode_utt(
            &posteriors,
            &graph,
            &lm,
            &scales,
            cfg.prior.as_ref(),
            cfg.transitions.as_ref(),
            beam,
        )?;
        Ok((utt.id.clone(), hyp.words.join(" "), hyp.score))
    });
    let mut text = String::new();
    for r in results {
        let (id, words, score) = r?;
        text.push_str(&format!("{id}\t{words}\t{score:.6}\n"));
    }
    emit(out.as_deref(), &text)?;
    Ok(())
}

pub fn estimate(args: EstimateCmd) -> Result<()> {
    match args {
        EstimateCmd::PApprox { model, data, frame_shift_ms, out_transitions, out_prior } => {
            let ResolvedModel { cfg, mut settings, .. } = resolve_model(model)?;
            let shift = settings.get("frame-shift-ms", frame_shift_ms, 10.0)?;
            let out_transitions = settings.get_path("out-transitions", out_transitions)?;
            let out_prior = settings.get_path("out-prior", out_prior)?;
            let corpus_path = settings.require_path("corpus", data.corpus)?;
            let lexicon_path = settings.require_path("lexicon", data.lexicon)?;
            let phones_path = settings.require_path("phones", data.phones)?;
            let lexicon = Lexicon::load(&phones_path, &lexicon_path)?;
            let corpus = fullsum::corpus::read_corpus(&corpus_path)?;
            eprintln!("config fingerprint: {}", settings.fingerprint());

            let transitions = p_approx_transitions(
                cfg.mean_phoneme_ms,
                shift,
                &corpus,
                &lexicon,
                cfg.label_cfg.states_per_phoneme,
            )?;
            println!("speech-loop\t{}", transitions.speech_loop);
            println!("speech-forward\t{}", transitions.speech_forward);
            println!("silence-loop\t{}", transitions.silence_loop);
            println!("silence-forward\t{}", transitions.silence_forward);
            if let Some(path) = &out_transitions {
                transitions.save(path)?;
            }
            if let Some(path) = &out_prior {
                let space = LabelSpace::hmm(lexicon.phonemes().to_vec(), cfg.label_cfg)?;
                let prior = p_approx_prior(
                    &corpus,
                    &lexicon,
                    &space,
                    cfg.mean_phoneme_ms,
                    shift,
                    cfg.prior_floor,
                )?;
                prior.save(path, &space)?;
                println!("prior\t{}", path.display());
            }
            Ok(())
        }
        EstimateCmd::MarginalPrior { model, data, model_file, out_prior } => {
            let ResolvedModel { cfg, mut settings, .. } = resolve_model(model)?;
            let model_path = settings.require_path("model-file", model_file)?;
            let out_prior = settings.require_path("out-prior", out_prior)?;
            let data = resolve_data(&mut settings, data)?;
            let (model, _) = load_checkpoint(&model_path)?;
            let space = label_space_for(&cfg, &data.lexicon)?;
            if model.output_dim != space.len() {
                bail!("checkpoint outputs do not match the label space");
            }
            eprintln!("config fingerprint: {}", settings.fingerprint());
            let posteriors: Vec<fullsum::lattice::FrameScores> = data
                .utts
                .iter()
                .map(|u| {
                    subsample_features(&u.features, cfg.subsample_factor)
                        .map(|f| model.posteriors(&f))
                })
                .collect::<std::result::Result<_, _>>()?;
            let prior = marginal_prior(posteriors.iter(), space.len(), cfg.prior_floor)?;
            prior.save(&out_prior, &space)?;
            println!("prior\t{}", out_prior.display());
            Ok(())
        }
    }
}

pub fn tse(args: TseCmd) -> Result<()> {
    let cand = read_alignments(&args.cand)?;
    let reference = read_alignments(&args.reference)?;
    let report = compute_tse(&cand, &reference)?;
    for utt in &report.skipped {
        log::warn!("skipped `{utt}`: word sequences disagree");
    }
    let mut text = String::new();
    text.push_str(&format!("tse_ms\t{:.6}\n", report.mean_ms));
    text.push_str(&format!("words\t{}\n", report.words));
    text.push_str(&format!("skipped\t{}\n", report.skipped.len()));
    for (bucket, count) in &report.histogram {
        text.push_str(&format!("hist_{bucket}\t{count}\n"));
    }
    emit(args.out.as_deref(), &text)?;
    Ok(())
}

pub fn wer(args: WerCmd) -> Result<()> {
    let hyp_text = std::fs::read_to_string(&args.hyp)?;
    let mut hyps: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for line in hyp_text.lines() {
        if line.trim().is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split('\t').collect();
        if parts.len() < 2 {
            bail!("bad hypothesis line `{line}` (expected `utt-id<TAB>words[<TAB>score]`)");
        }
        hyps.insert(
            parts[0].to_string(),
            parts[1].split_whitespace().map(|w| w.to_string()).collect(),
        );
    }
    let refs: BTreeMap<String, Vec<String>> = fullsum::corpus::read_corpus(&args.reference)?
        .into_iter()
        .map(|u| (u.id, u.transcript))
        .collect();
    let report = compute_wer(&hyps, &refs)?;
    let mut text = String::new();
    text.push_str(&format!("wer_percent\t{:.4}\n", report.percent()));
    text.push_str(&format!("substitutions\t{}\n", report.substitutions));
    text.push_str(&format!("insertions\t{}\n", report.insertions));
    text.push_str(&format!("deletions\t{}\n", report.deletions));
    text.push_str(&format!("reference_words\t{}\n", report.reference_words));
    text.push_str(&format!("utterances\t{}\n", report.utts));
    emit(args.out.as_deref(), &text)?;
    Ok(())
}

pub fn plot(args: PlotCmd) -> Result<()> {
    let soft = args.soft.as_deref().map(read_soft_alignment).transpose()?;
    let hard = args.hard.as_deref().map(read_hard_alignment).transpose()?;
    let reference = args.reference.as_deref().map(read_hard_alignment).transpose()?;
    let names: Option<Vec<String>> = match &args.phones {
        Some(phones_path) => {
            let text = std::fs::read_to_string(phones_path)?;
            let phonemes: Vec<String> = text
                .lines()
                .map(|l| l.trim().to_string())
                .filter(|l| !l.is_empty() && !l.starts_with('#'))
                .collect();
            let cfg = LabelConfig::new(
                args.eow.unwrap_or(true),
                args.states_per_phoneme.unwrap_or(1),
            )?;
            let space = match args.topology.as_deref().unwrap_or("hmm") {
                "ctc" => LabelSpace::ctc(phonemes, cfg)?,
                "hmm" => LabelSpace::hmm(phonemes, cfg)?,
                other => bail!("unknown topology `{other}` (expected hmm or ctc)"),
            };
            Some((0..space.len()).map(|i| space.label_name(i)).collect())
        }
        None => None,
    };
    emit_alignment_plot(
        soft.as_ref(),
        hard.as_ref(),
        reference.as_ref(),
        names.as_deref(),
        &args.out,
    )?;
    println!("plot\t{}", args.out.display());
    Ok(())
}

pub fn synth(args: SynthCmd) -> Result<()> {
    let mut st = Settings::load(args.config.as_deref())?;
    let out_dir = st.require_path("out-dir", args.out_dir)?;
    let label_cfg = LabelConfig::new(
        st.get("eow", args.eow, true)?,
        st.get("states-per-phoneme", args.states_per_phoneme, 1)?,
    )?;
    let cfg = SynthConfig {
        seed: st.get("seed", args.seed, 1)?,
        num_utts: st.get("utts", args.utts, 50)?,
        inventory_size: st.get("inventory", args.inventory, 6)?,
        num_words: st.get("words", args.words, 8)?,
        noise_sigma: st.get("noise-sigma", args.noise_sigma, 0.1)?,
        mean_unit_frames: st.get("mean-unit-frames", args.mean_unit_frames, 8.0)?,
        mean_silence_frames: st.get("mean-silence-frames", args.mean_silence_frames, 6.0)?,
        frame_shift_ms: st.get("frame-shift-ms", args.frame_shift_ms, 10.0)?,
        label_cfg,
        ..SynthConfig::default()
    };
    eprintln!("config fingerprint: {}", st.fingerprint());
    let corpus = generate_corpus(&cfg)?;
    write_corpus_dir(&corpus, &out_dir)?;
    println!("out_dir\t{}", out_dir.display());
    println!("utterances\t{}", corpus.utterances.len());
    println!("vocabulary\t{}", corpus.lexicon.num_words());
    println!("labels\t{}", corpus.space.len());
    Ok(())
}

pub fn sweep(args: SweepCmd) -> Result<()> {
    let ResolvedModel { cfg: base, prior_path, mut settings } = resolve_model(args.model)?;
    let alphas = parse_float_list(
        &settings.get("alphas", args.alphas, "1.0,0.5,0.3,0.1".to_string())?,
    )?;
    let betas = parse_float_list(
        &settings.get("betas", args.betas, "1.0,0.1,0.3,0.01".to_string())?,
    )?;
    let epochs = settings.get("epochs", args.epochs, 30usize)?;
    let batch_size = settings.get("batch-size", args.batch_size, base.batch_size)?;
    let peak_lr = settings.get("peak-lr", args.peak_lr, base.peak_lr)?;
    let hidden_dim = settings.get("hidden-dim", args.hidden_dim, 32usize)?;
    let seed = settings.get("seed", args.seed, base.seed)?;
    let out = settings.get_path("out", args.out)?;
    let data = resolve_data(&mut settings, args.data)?;
    eprintln!("config fingerprint: {}", settings.fingerprint());

    if base.variant != VariantKind::HHmm && base.variant != VariantKind::PHmm {
        bail!("sweep needs an HMM variant with scales (p-hmm or h-hmm)");
    }

    // Convergence is judged on a scale-free surrogate: the posterior-only
    // path mass (p-hmm-s loss) of the trained model, which stays
    // comparable across scale cells where the raw scaled loss does not.
    let eval_cfg = {
        let mut c = base.clone();
        c.variant = VariantKind::PHmmS;
        c.scales = Scales::new(0.0, 0.0, 1.0, 0.0)?;
        c.epochs = 0;
        c
    };
    let surrogate_loss = |model: &fullsum::trainer::AcousticModel| -> Result<f64> {
        let space = label_space_for(&eval_cfg, &data.lexicon)?;
        let variant = resolve_variant(&eval_cfg, &space, &data.lexicon, &data.utts)?;
        let mut total = 0.0;
        let mut count = 0usize;
        for utt in &data.utts {
            let transcript: Vec<&str> = utt.words();
            let fsa =
                build_utterance_fsa(&eval_cfg, &space, &data.lexicon, &transcript, &utt.id)?;
            let features = subsample_features(&utt.features, eval_cfg.subsample_factor)?;
            if features.num_frames() < fsa.min_frames().unwrap_or(usize::MAX) {
                continue;
            }
            let posteriors = model.posteriors(&features);
            total += fullsum::models::full_sum_loss(&variant, &fsa, &posteriors, &utt.id)?;
            count += 1;
        }
        Ok(total / count.max(1) as f64)
    };

    let mut text =
        String::from("alpha\tbeta\ttrain_initial\ttrain_final\teval_initial\teval_final\tconverged\n");
    let mut eval_initial: Option<f64> = None;
    for &alpha in &alphas {
        for &beta in &betas {
            let mut cfg = base.clone();
            cfg.scales = Scales::new(alpha, beta, base.scales.gamma, 0.0)?;
            cfg.epochs = epochs;
            cfg.batch_size = batch_size;
            cfg.peak_lr = peak_lr;
            cfg.hidden_dim = hidden_dim;
            cfg.seed = seed;
            if let Some(path) = &prior_path {
                let space = label_space_for(&cfg, &data.lexicon)?;
                cfg.prior = Some(PriorModel::load(path, &space)?);
            }
            if eval_initial.is_none() {
                let untrained = fullsum::trainer::AcousticModel::new(
                    data.utts[0].features.num_labels(),
                    cfg.hidden_dim,
                    label_space_for(&cfg, &data.lexicon)?.len(),
                    cfg.seed,
                );
                eval_initial = Some(surrogate_loss(&untrained)?);
            }
            let e0 = eval_initial.unwrap();
            let row = match run_train(&cfg, &data.utts, &data.lexicon) {
                Ok(outcome) => {
                    let t0 = outcome.trace.first().map(|e| e.loss).unwrap_or(f64::NAN);
                    let t1 = outcome.trace.last().map(|e| e.loss).unwrap_or(f64::NAN);
                    let e1 = surrogate_loss(&outcome.model)?;
                    let converged = t1.is_finite() && e1.is_finite() && e1 <= 0.1 * e0;
                    format!(
                        "{alpha}\t{beta}\t{t0:.6}\t{t1:.6}\t{e0:.6}\t{e1:.6}\t{}\n",
                        if converged { "yes" } else { "x" }
                    )
                }
                Err(e) => {
                    log::warn!("sweep cell alpha={alpha} beta={beta} failed: {e}");
                    format!("{alpha}\t{beta}\tnan\tnan\t{e0:.6}\tnan\tx\n")
                }
            };
            text.push_str(&row);
        }
    }
    emit(out.as_deref(), &text)?;
    Ok(())
}
