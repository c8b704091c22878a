//! Command-line interface: corpora, training, alignment, decoding,
//! estimation, and evaluation wired into reproducible runs.

mod cfg;
mod commands;

use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "fullsum", version, about = "Full-sum lattice training for CTC and HMM topologies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Settings shared by commands that build lattices or weights. Every
/// flag shadows the same-named config key; precedence is flag > config
/// file > default.
#[derive(Args, Debug, Default)]
struct ModelArgs {
    /// Flat `key = value` config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Model variant: ctc, p-hmm, p-hmm-s, or h-hmm.
    #[arg(long)]
    variant: Option<String>,
    /// End-of-word augmentation of the phoneme set.
    #[arg(long)]
    eow: Option<bool>,
    /// 1 or 3 HMM states per phoneme.
    #[arg(long)]
    states_per_phoneme: Option<u8>,
    /// HMM silence placement: none or word-boundaries.
    #[arg(long)]
    silence: Option<String>,
    #[arg(long)]
    subsample_factor: Option<u32>,
    #[arg(long)]
    min_duration: Option<u32>,
    /// Prior scale.
    #[arg(long)]
    alpha: Option<f64>,
    /// Transition scale.
    #[arg(long)]
    beta: Option<f64>,
    /// Label-posterior scale.
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    mean_phoneme_ms: Option<f64>,
    #[arg(long)]
    prior_floor: Option<f64>,
    /// Fixed transition table file; estimated by P-approx when unset.
    #[arg(long)]
    transition_file: Option<PathBuf>,
    /// Fixed prior file; estimated by P-approx when unset.
    #[arg(long)]
    prior_file: Option<PathBuf>,
    /// Utterance-level parallelism (0 = default pool size).
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Args, Debug, Default)]
struct DataArgs {
    /// Corpus metadata: `utt-id<TAB>duration-ms<TAB>transcript`.
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Directory with `<utt-id>.fsc` feature containers.
    #[arg(long)]
    features_dir: Option<PathBuf>,
    /// Lexicon file: `WORD<TAB>PH1 PH2 ...`.
    #[arg(long)]
    lexicon: Option<PathBuf>,
    /// Phoneme inventory file, one name per line.
    #[arg(long)]
    phones: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct TrainCmd {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    peak_lr: Option<f64>,
    #[arg(long)]
    min_lr: Option<f64>,
    #[arg(long)]
    oclr_fraction: Option<f64>,
    #[arg(long)]
    hidden_dim: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Checkpoint output path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Loss trace CSV output path.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct AlignCmd {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    data: DataArgs,
    /// Trained checkpoint.
    #[arg(long)]
    model_file: Option<PathBuf>,
    /// Emit Viterbi hard alignments (`<id>.hal` + `alignment.ali`).
    #[arg(long)]
    viterbi: bool,
    /// Emit Baum-Welch soft alignments (`<id>.sal`).
    #[arg(long)]
    baum_welch: bool,
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct DecodeCmd {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    data: DataArgs,
    /// Trained checkpoint.
    #[arg(long)]
    model_file: Option<PathBuf>,
    /// ARPA language model file.
    #[arg(long)]
    lm: Option<PathBuf>,
    /// Language-model scale.
    #[arg(long)]
    lambda: Option<f64>,
    /// Pruning beam; `inf` searches exactly.
    #[arg(long)]
    beam: Option<f64>,
    #[arg(long)]
    max_lm_order: Option<usize>,
    /// Hypothesis output file (stdout when unset).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum EstimateCmd {
    /// Transition and prior tables from prior knowledge.
    PApprox {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        frame_shift_ms: Option<f64>,
        #[arg(long)]
        out_transitions: Option<PathBuf>,
        #[arg(long)]
        out_prior: Option<PathBuf>,
    },
    /// Prior by marginalizing a model's posteriors over a corpus.
    MarginalPrior {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        model_file: Option<PathBuf>,
        #[arg(long)]
        out_prior: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct TseCmd {
    /// Candidate alignment file.
    #[arg(long)]
    cand: PathBuf,
    /// Reference alignment file.
    #[arg(long = "ref")]
    reference: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct WerCmd {
    /// Hypotheses: `utt-id<TAB>words<TAB>score` (decode output).
    #[arg(long)]
    hyp: PathBuf,
    /// Reference corpus metadata file.
    #[arg(long = "ref")]
    reference: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct PlotCmd {
    /// Soft alignment container (`.sal`).
    #[arg(long)]
    soft: Option<PathBuf>,
    /// Hard alignment container (`.hal`).
    #[arg(long)]
    hard: Option<PathBuf>,
    /// Reference hard alignment for boundary rules.
    #[arg(long = "ref")]
    reference: Option<PathBuf>,
    /// Phoneme inventory for label names on the y axis.
    #[arg(long)]
    phones: Option<PathBuf>,
    #[arg(long)]
    eow: Option<bool>,
    #[arg(long)]
    states_per_phoneme: Option<u8>,
    /// hmm or ctc; selects the reserved non-speech label name.
    #[arg(long)]
    topology: Option<String>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct SynthCmd {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    utts: Option<usize>,
    #[arg(long)]
    inventory: Option<usize>,
    #[arg(long)]
    words: Option<usize>,
    #[arg(long)]
    noise_sigma: Option<f64>,
    #[arg(long)]
    eow: Option<bool>,
    #[arg(long)]
    states_per_phoneme: Option<u8>,
    #[arg(long)]
    frame_shift_ms: Option<f32>,
    #[arg(long)]
    mean_unit_frames: Option<f64>,
    #[arg(long)]
    mean_silence_frames: Option<f64>,
}

#[derive(Args, Debug)]
struct SweepCmd {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    data: DataArgs,
    /// Comma-separated prior scales.
    #[arg(long)]
    alphas: Option<String>,
    /// Comma-separated transition scales.
    #[arg(long)]
    betas: Option<String>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    peak_lr: Option<f64>,
    #[arg(long)]
    hidden_dim: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Train an acoustic model with a full-sum loss.
    Train(TrainCmd),
    /// Viterbi and/or Baum-Welch alignments from a checkpoint.
    Align(AlignCmd),
    /// Decode word sequences with a prefix tree and n-gram LM.
    Decode(DecodeCmd),
    /// Estimate transition/prior tables.
    #[command(subcommand)]
    Estimate(EstimateCmd),
    /// Time-stamp error between two alignment files.
    Tse(TseCmd),
    /// Word error rate between hypotheses and references.
    Wer(WerCmd),
    /// Render an alignment plot as SVG.
    Plot(PlotCmd),
    /// Generate the seeded synthetic corpus.
    Synth(SynthCmd),
    /// Scale grid over alpha x beta with a convergence marker per cell.
    Sweep(SweepCmd),
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    let result = match cli.command {
        Command::Train(args) => commands::train(args),
        Command::Align(args) => commands::align(args),
        Command::Decode(args) => commands::decode(args),
        Command::Estimate(args) => commands::estimate(args),
        Command::Tse(args) => commands::tse(args),
        Command::Wer(args) => commands::wer(args),
        Command::Plot(args) => commands::plot(args),
        Command::Synth(args) => commands::synth(args),
        Command::Sweep(args) => commands::sweep(args),
    };
    if let Err(e) = result {
        eprintln!("error: {e:#}");
        std::process::exit(2);
    }
}
