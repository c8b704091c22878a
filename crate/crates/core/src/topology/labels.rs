//! Label inventory, lexicon, and label-sequence construction.
//!
//! Emission labels index rows of frame-score matrices. Speech labels are
//! the (phoneme, eow, state) triples of the expanded inventory; one
//! trailing index is reserved for the topology's non-speech label —
//! silence for HMM lattices, blank for CTC.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;

use crate::error::{Error, Result};

/// Reserved token names, forbidden in phoneme inventories.
pub const SILENCE_NAME: &str = "[SILENCE]";
pub const BLANK_NAME: &str = "[BLANK]";

/// One unit of an alignment target: a phoneme state, silence, or blank.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LabelUnit {
    Phoneme {
        /// Index into the phoneme inventory.
        phoneme: u32,
        /// End-of-word variant flag.
        eow: bool,
        /// 0 for single-state phonemes, 0..3 for three-state.
        state: u8,
    },
    Silence,
    Blank,
}

impl LabelUnit {
    pub fn is_speech(&self) -> bool {
        matches!(self, LabelUnit::Phoneme { .. })
    }
}

/// Expansion settings for transcripts: EOW augmentation and the number of
/// HMM states per phoneme.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LabelConfig {
    pub eow: bool,
    pub states_per_phoneme: u8,
}

impl LabelConfig {
    pub fn new(eow: bool, states_per_phoneme: u8) -> Result<Self> {
        if states_per_phoneme != 1 && states_per_phoneme != 3 {
            return Err(Error::Config(format!(
                "states-per-phoneme must be 1 or 3, got {states_per_phoneme}"
            )));
        }
        Ok(LabelConfig { eow, states_per_phoneme })
    }
}

impl Default for LabelConfig {
    fn default() -> Self {
        LabelConfig { eow: true, states_per_phoneme: 1 }
    }
}

/// The non-speech label a topology reserves: silence for HMM lattices,
/// blank for CTC.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReservedLabel {
    Silence,
    Blank,
}

/// Bijective map between expanded label units and emission indices
/// `0..len()`. Speech triples occupy `0..num_speech()`; the topology's
/// reserved non-speech label sits at the trailing index.
#[derive(Debug, Clone)]
pub struct LabelSpace {
    phonemes: Vec<String>,
    config: LabelConfig,
    reserved: ReservedLabel,
}

impl LabelSpace {
    pub fn new(phonemes: Vec<String>, config: LabelConfig, reserved: ReservedLabel) -> Result<Self> {
        if phonemes.is_empty() {
            return Err(Error::Config("empty phoneme inventory".into()));
        }
        let mut seen = HashMap::new();
        for (i, p) in phonemes.iter().enumerate() {
            if p == SILENCE_NAME || p == BLANK_NAME {
                return Err(Error::Config(format!(
                    "reserved name `{p}` is not allowed in the phoneme inventory"
                )));
            }
            if let Some(prev) = seen.insert(p.clone(), i) {
                return Err(Error::Config(format!(
                    "duplicate phoneme `{p}` at inventory lines {} and {}",
                    prev + 1,
                    i + 1
                )));
            }
        }
        Ok(LabelSpace { phonemes, config, reserved })
    }

    /// Label space for HMM lattices: speech labels plus silence.
    pub fn hmm(phonemes: Vec<String>, config: LabelConfig) -> Result<Self> {
        Self::new(phonemes, config, ReservedLabel::Silence)
    }

    /// Label space for CTC lattices: speech labels plus blank.
    pub fn ctc(phonemes: Vec<String>, config: LabelConfig) -> Result<Self> {
        Self::new(phonemes, config, ReservedLabel::Blank)
    }

    pub fn config(&self) -> LabelConfig {
        self.config
    }

    pub fn reserved(&self) -> ReservedLabel {
        self.reserved
    }

    pub fn phonemes(&self) -> &[String] {
        &self.phonemes
    }

    fn variants_per_phoneme(&self) -> usize {
        let eow_variants = if self.config.eow { 2 } else { 1 };
        eow_variants * self.config.states_per_phoneme as usize
    }

    /// Number of speech emission labels.
    pub fn num_speech(&self) -> usize {
        self.phonemes.len() * self.variants_per_phoneme()
    }

    /// Total emission label count including the reserved non-speech label.
    pub fn len(&self) -> usize {
        self.num_speech() + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn silence_index(&self) -> usize {
        assert_eq!(self.reserved, ReservedLabel::Silence, "label space has no silence");
        self.num_speech()
    }

    pub fn blank_index(&self) -> usize {
        assert_eq!(self.reserved, ReservedLabel::Blank, "label space has no blank");
        self.num_speech()
    }

    /// Emission index of a unit.
    pub fn index_of(&self, unit: &LabelUnit) -> usize {
        match *unit {
            LabelUnit::Silence => self.silence_index(),
            LabelUnit::Blank => self.blank_index(),
            LabelUnit::Phoneme { phoneme, eow, state } => {
                debug_assert!((state as usize) < self.config.states_per_phoneme as usize);
                debug_assert!(self.config.eow || !eow);
                let states = self.config.states_per_phoneme as usize;
                let eow_off = if eow { states } else { 0 };
                phoneme as usize * self.variants_per_phoneme() + eow_off + state as usize
            }
        }
    }

    /// Inverse of [`index_of`](Self::index_of).
    pub fn unit_of(&self, index: usize) -> LabelUnit {
        if index == self.num_speech() {
            return match self.reserved {
                ReservedLabel::Silence => LabelUnit::Silence,
                ReservedLabel::Blank => LabelUnit::Blank,
            };
        }
        assert!(index < self.num_speech(), "label index {index} out of range");
        let vpp = self.variants_per_phoneme();
        let phoneme = (index / vpp) as u32;
        let rem = index % vpp;
        let states = self.config.states_per_phoneme as usize;
        let eow = self.config.eow && rem >= states;
        let state = (rem % states) as u8;
        LabelUnit::Phoneme { phoneme, eow, state }
    }

    /// Human-readable name of an emission label, e.g. `AH`, `AH#`, `AH#.2`.
    pub fn label_name(&self, index: usize) -> String {
        match self.unit_of(index) {
            LabelUnit::Silence => SILENCE_NAME.to_string(),
            LabelUnit::Blank => BLANK_NAME.to_string(),
            LabelUnit::Phoneme { phoneme, eow, state } => {
                let mut name = self.phonemes[phoneme as usize].clone();
                if eow {
                    name.push('#');
                }
                if self.config.states_per_phoneme > 1 {
                    name.push('.');
                    name.push_str(&state.to_string());
                }
                name
            }
        }
    }

    /// Parses a name produced by [`label_name`](Self::label_name).
    pub fn index_by_name(&self, name: &str) -> Option<usize> {
        if name == SILENCE_NAME {
            return (self.reserved == ReservedLabel::Silence).then(|| self.num_speech());
        }
        if name == BLANK_NAME {
            return (self.reserved == ReservedLabel::Blank).then(|| self.num_speech());
        }
        let (base, state) = if self.config.states_per_phoneme > 1 {
            let (base, st) = name.rsplit_once('.')?;
            (base, st.parse::<u8>().ok()?)
        } else {
            (name, 0u8)
        };
        let (base, eow) = match base.strip_suffix('#') {
            Some(b) => (b, true),
            None => (base, false),
        };
        if eow && !self.config.eow {
            return None;
        }
        if state >= self.config.states_per_phoneme {
            return None;
        }
        let phoneme = self.phonemes.iter().position(|p| p == base)? as u32;
        Some(self.index_of(&LabelUnit::Phoneme { phoneme, eow, state }))
    }
}

/// Pronunciation dictionary over a phoneme inventory.
///
/// Pronunciation variants beyond the first are accepted in the file
/// format but only the first is used.
#[derive(Debug, Clone)]
pub struct Lexicon {
    phonemes: Vec<String>,
    phoneme_ids: HashMap<String, u32>,
    entries: HashMap<String, Vec<Vec<u32>>>,
}

impl Lexicon {
    pub fn new(phonemes: Vec<String>) -> Result<Self> {
        for p in &phonemes {
            if p == SILENCE_NAME || p == BLANK_NAME {
                return Err(Error::Config(format!(
                    "reserved name `{p}` is not allowed in the phoneme inventory"
                )));
            }
        }
        let phoneme_ids = phonemes
            .iter()
            .enumerate()
            .map(|(i, p)| (p.clone(), i as u32))
            .collect();
        Ok(Lexicon { phonemes, phoneme_ids, entries: HashMap::new() })
    }

    pub fn phonemes(&self) -> &[String] {
        &self.phonemes
    }

    pub fn words(&self) -> impl Iterator<Item = &String> {
        self.entries.keys()
    }

    pub fn num_words(&self) -> usize {
        self.entries.len()
    }

    pub fn add_entry(&mut self, word: &str, pronunciation: &[&str]) -> Result<()> {
        if pronunciation.is_empty() {
            return Err(Error::Config(format!("empty pronunciation for word `{word}`")));
        }
        let mut ids = Vec::with_capacity(pronunciation.len());
        for ph in pronunciation {
            let id = self.phoneme_ids.get(*ph).ok_or_else(|| {
                Error::Config(format!("word `{word}` uses unknown phoneme `{ph}`"))
            })?;
            ids.push(*id);
        }
        self.entries.entry(word.to_string()).or_default().push(ids);
        Ok(())
    }

    /// First pronunciation of `word`, if present.
    pub fn pronunciation(&self, word: &str) -> Option<&[u32]> {
        self.entries.get(word).map(|v| v[0].as_slice())
    }

    /// Loads the inventory (one phoneme per line) and the lexicon
    /// (`WORD<TAB>PH1 PH2 ...`, `#` comments) from text files.
    pub fn load(inventory_path: &Path, lexicon_path: &Path) -> Result<Self> {
        let inv_text = std::fs::read_to_string(inventory_path)?;
        let mut phonemes = Vec::new();
        for (lineno, line) in inv_text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if line == SILENCE_NAME || line == BLANK_NAME {
                return Err(Error::Parse {
                    path: inventory_path.display().to_string(),
                    line: lineno + 1,
                    msg: format!("reserved name `{line}` is forbidden in the inventory"),
                });
            }
            phonemes.push(line.to_string());
        }
        let mut lex = Lexicon::new(phonemes)?;

        let lex_text = std::fs::read_to_string(lexicon_path)?;
        for (lineno, line) in lex_text.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (word, prons) = line.split_once('\t').ok_or_else(|| Error::Parse {
                path: lexicon_path.display().to_string(),
                line: lineno + 1,
                msg: "expected `WORD<TAB>PH1 PH2 ...`".into(),
            })?;
            let phones: Vec<&str> = prons.split_whitespace().collect();
            lex.add_entry(word.trim(), &phones).map_err(|e| Error::Parse {
                path: lexicon_path.display().to_string(),
                line: lineno + 1,
                msg: e.to_string(),
            })?;
        }
        Ok(lex)
    }

    /// Writes inventory and lexicon files in the formats accepted by
    /// [`load`](Self::load).
    pub fn save(&self, inventory_path: &Path, lexicon_path: &Path) -> Result<()> {
        let mut inv = String::new();
        for p in &self.phonemes {
            inv.push_str(p);
            inv.push('\n');
        }
        std::fs::write(inventory_path, inv)?;

        let mut words: Vec<&String> = self.entries.keys().collect();
        words.sort();
        let mut out = String::new();
        for w in words {
            for pron in &self.entries[w] {
                let phones: Vec<&str> =
                    pron.iter().map(|&id| self.phonemes[id as usize].as_str()).collect();
                out.push_str(w);
                out.push('\t');
                out.push_str(&phones.join(" "));
                out.push('\n');
            }
        }
        std::fs::write(lexicon_path, out)?;
        Ok(())
    }
}

/// The expanded phonetic target of one utterance: speech units only,
/// with word-end positions for silence placement and word segments.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelSequence {
    units: Vec<LabelUnit>,
    /// Exclusive end index of each word in `units`.
    word_ends: Vec<usize>,
    words: Vec<String>,
}

impl LabelSequence {
    pub fn units(&self) -> &[LabelUnit] {
        &self.units
    }

    pub fn len(&self) -> usize {
        self.units.len()
    }

    pub fn is_empty(&self) -> bool {
        self.units.is_empty()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn num_words(&self) -> usize {
        self.words.len()
    }

    /// Exclusive end index of each word.
    pub fn word_ends(&self) -> &[usize] {
        &self.word_ends
    }

    /// Word index owning unit `s`.
    pub fn word_of_unit(&self, s: usize) -> usize {
        self.word_ends.partition_point(|&e| e <= s)
    }

    /// Unit index ranges `[start, end)` per word.
    pub fn word_ranges(&self) -> Vec<(usize, usize)> {
        let mut start = 0;
        self.word_ends
            .iter()
            .map(|&e| {
                let r = (start, e);
                start = e;
                r
            })
            .collect()
    }
}

impl fmt::Display for LabelSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.words.join(" "))
    }
}

/// Expands a single pronunciation into label units under `cfg`.
/// `word_final` controls the EOW mark on the last phoneme.
pub fn expand_pronunciation(pron: &[u32], cfg: LabelConfig, word_final: bool) -> Vec<LabelUnit> {
    let mut units = Vec::with_capacity(pron.len() * cfg.states_per_phoneme as usize);
    for (i, &ph) in pron.iter().enumerate() {
        let eow = cfg.eow && word_final && i + 1 == pron.len();
        for state in 0..cfg.states_per_phoneme {
            units.push(LabelUnit::Phoneme { phoneme: ph, eow, state });
        }
    }
    units
}

/// Builds the expanded label sequence of a transcript.
///
/// Every transcript word must exist in the lexicon; only the first
/// pronunciation of each word is used.
pub fn build_label_sequence(
    transcript: &[&str],
    lexicon: &Lexicon,
    cfg: LabelConfig,
    utt: &str,
) -> Result<LabelSequence> {
    if transcript.is_empty() {
        return Err(Error::EmptyTranscript { utt: utt.to_string() });
    }
    let mut units = Vec::new();
    let mut word_ends = Vec::with_capacity(transcript.len());
    let mut words = Vec::with_capacity(transcript.len());
    for &word in transcript {
        let pron = lexicon.pronunciation(word).ok_or_else(|| Error::UnknownWord {
            word: word.to_string(),
            utt: utt.to_string(),
        })?;
        units.extend(expand_pronunciation(pron, cfg, true));
        word_ends.push(units.len());
        words.push(word.to_string());
    }
    Ok(LabelSequence { units, word_ends, words })
}
