//! ARPA n-gram language model with backoff, restricted to low orders.

use std::collections::HashMap;
use std::path::Path;

use crate::error::{Error, Result};

pub const SENT_BEGIN: &str = "<s>";
pub const SENT_END: &str = "</s>";

const LN_10: f64 = std::f64::consts::LN_10;

/// Backoff n-gram model over words. Probabilities are stored in natural
/// log; ARPA files carry log10.
#[derive(Debug, Clone)]
pub struct NGramLm {
    order: usize,
    vocab: Vec<String>,
    ids: HashMap<String, u32>,
    /// Per word id: (ln prob, ln backoff weight).
    unigrams: Vec<(f64, f64)>,
    bigrams: HashMap<(u32, u32), f64>,
}

impl NGramLm {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn vocab(&self) -> &[String] {
        &self.vocab
    }

    pub fn word_id(&self, word: &str) -> Option<u32> {
        self.ids.get(word).copied()
    }

    pub fn word(&self, id: u32) -> &str {
        &self.vocab[id as usize]
    }

    pub fn sent_begin(&self) -> Option<u32> {
        self.word_id(SENT_BEGIN)
    }

    pub fn sent_end(&self) -> Option<u32> {
        self.word_id(SENT_END)
    }

    /// `ln P(word | history)` under backoff evaluation. `None` history
    /// (or a unigram model) uses the unigram distribution directly.
    pub fn log_prob(&self, history: Option<u32>, word: u32) -> f64 {
        match history {
            Some(h) if self.order >= 2 => match self.bigrams.get(&(h, word)) {
                Some(&p) => p,
                None => self.unigrams[h as usize].1 + self.unigrams[word as usize].0,
            },
            _ => self.unigrams[word as usize].0,
        }
    }

    pub fn from_file(path: &Path, max_order: usize) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text, max_order).map_err(|e| match e {
            Error::Parse { line, msg, .. } => {
                Error::Parse { path: path.display().to_string(), line, msg }
            }
            Error::Format { msg, .. } => Error::Format { path: path.display().to_string(), msg },
            other => other,
        })
    }

    /// Parses ARPA text. Orders above `max_order` are rejected.
    pub fn parse(text: &str, max_order: usize) -> Result<Self> {
        #[derive(PartialEq)]
        enum Section {
            Preamble,
            Data,
            Grams(usize),
            End,
        }
        let perr = |line: usize, msg: String| Error::Parse { path: "<arpa>".into(), line, msg };

        let mut counts: HashMap<usize, usize> = HashMap::new();
        let mut section = Section::Preamble;
        let mut vocab: Vec<String> = Vec::new();
        let mut ids: HashMap<String, u32> = HashMap::new();
        let mut unigrams: Vec<(f64, f64)> = Vec::new();
        let mut bigram_rows: Vec<(String, String, f64)> = Vec::new();

        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if line == "\\data\\" {
                section = Section::Data;
                continue;
            }
            if line == "\\end\\" {
                section = Section::End;
                continue;
            }
            if let Some(rest) = line.strip_prefix('\\') {
                if let Some(n) = rest.strip_suffix("-grams:") {
                    let n: usize = n
                        .parse()
                        .map_err(|_| perr(lineno + 1, format!("bad section `{line}`")))?;
                    if n > max_order {
                        return Err(perr(
                            lineno + 1,
                            format!("order {n} exceeds the configured maximum {max_order}"),
                        ));
                    }
                    section = Section::Grams(n);
                    continue;
                }
                return Err(perr(lineno + 1, format!("unknown directive `{line}`")));
            }
            match section {
                Section::Data => {
                    let rest = line
                        .strip_prefix("ngram ")
                        .ok_or_else(|| perr(lineno + 1, format!("expected `ngram N=count`, got `{line}`")))?;
                    let (n, c) = rest
                        .split_once('=')
                        .ok_or_else(|| perr(lineno + 1, "expected `ngram N=count`".into()))?;
                    let n: usize =
                        n.trim().parse().map_err(|_| perr(lineno + 1, format!("bad order `{n}`")))?;
                    let c: usize =
                        c.trim().parse().map_err(|_| perr(lineno + 1, format!("bad count `{c}`")))?;
                    if n > max_order && c > 0 {
                        return Err(perr(
                            lineno + 1,
                            format!("order {n} exceeds the configured maximum {max_order}"),
                        ));
                    }
                    counts.insert(n, c);
                }
                Section::Grams(1) => {
                    let mut parts = line.split_whitespace();
                    let p: f64 = parts
                        .next()
                        .and_then(|s| s.parse().ok())
                        .ok_or_else(|| perr(lineno + 1, "bad unigram probability".into()))?;
                    let word = parts
                        .next()
                        .ok_or_else(|| perr(lineno + 1, "missing unigram word".into()))?;
                    let backoff: f64 = parts.next().and_then(|s| s.parse().ok()).unwrap_or(0.0);
                    if ids.contains_key(word) {
                        return Err(perr(lineno + 1, format!("duplicate unigram `{word}`")));
                    }
                    ids.insert(word.to_string(), vocab.len() as u32);
                    vocab.push(word.to_string());
                    unigrams.push((p * LN_10, backoff * LN_10));
                }
                Section::Grams(2) => {
                    let mut parts = line.split_whitespace();
                    let p: f64 = parts
                        .next()
                        .and_then(|s| s.parse().ok())
                        .ok_or_else(|| perr(lineno + 1, "bad bigram probability".into()))?;
                    let w1 = parts
                        .next()
                        .ok_or_else(|| perr(lineno + 1, "missing bigram words".into()))?;
                    let w2 = parts
                        .next()
                        .ok_or_else(|| perr(lineno + 1, "missing bigram words".into()))?;
                    bigram_rows.push((w1.to_string(), w2.to_string(), p * LN_10));
                }
                Section::Grams(n) => {
                    return Err(perr(lineno + 1, format!("unsupported order {n}")));
                }
                Section::Preamble | Section::End => {
                    return Err(perr(lineno + 1, format!("unexpected line `{line}`")));
                }
            }
        }

        if unigrams.is_empty() {
            return Err(Error::Format { path: "<arpa>".into(), msg: "no unigrams".into() });
        }
        let mut bigrams = HashMap::with_capacity(bigram_rows.len());
        for (w1, w2, p) in bigram_rows {
            let a = *ids
                .get(&w1)
                .ok_or_else(|| Error::Format {
                    path: "<arpa>".into(),
                    msg: format!("bigram references unknown word `{w1}`"),
                })?;
            let b = *ids
                .get(&w2)
                .ok_or_else(|| Error::Format {
                    path: "<arpa>".into(),
                    msg: format!("bigram references unknown word `{w2}`"),
                })?;
            bigrams.insert((a, b), p);
        }
        let order = if bigrams.is_empty() { 1 } else { 2 };
        Ok(NGramLm { order, vocab, ids, unigrams, bigrams })
    }
}
