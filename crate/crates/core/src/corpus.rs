//! Corpus metadata: utterance ids, audio durations, and transcripts.

use std::path::Path;

use crate::error::{Error, Result};

/// One utterance's metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct Utterance {
    pub id: String,
    pub duration_ms: f64,
    pub transcript: Vec<String>,
}

impl Utterance {
    pub fn words(&self) -> Vec<&str> {
        self.transcript.iter().map(|s| s.as_str()).collect()
    }

    /// Audio length in frames at the given frame shift, rounded to the
    /// nearest frame.
    pub fn frames(&self, frame_shift_ms: f64) -> f64 {
        self.duration_ms / frame_shift_ms
    }
}

/// Parses `utt-id<TAB>duration-ms<TAB>transcript words...` lines.
pub fn read_corpus(path: &Path) -> Result<Vec<Utterance>> {
    let text = std::fs::read_to_string(path)?;
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.splitn(3, '\t');
        let (Some(id), Some(dur), Some(words)) = (parts.next(), parts.next(), parts.next())
        else {
            return Err(Error::Parse {
                path: path.display().to_string(),
                line: lineno + 1,
                msg: "expected `utt-id<TAB>duration-ms<TAB>transcript`".into(),
            });
        };
        let duration_ms: f64 = dur.trim().parse().map_err(|_| Error::Parse {
            path: path.display().to_string(),
            line: lineno + 1,
            msg: format!("bad duration `{dur}`"),
        })?;
        out.push(Utterance {
            id: id.trim().to_string(),
            duration_ms,
            transcript: words.split_whitespace().map(|w| w.to_string()).collect(),
        });
    }
    Ok(out)
}

pub fn write_corpus(path: &Path, utts: &[Utterance]) -> Result<()> {
    let mut text = String::new();
    for u in utts {
        text.push_str(&format!("{}\t{}\t{}\n", u.id, u.duration_ms, u.transcript.join(" ")));
    }
    std::fs::write(path, text)?;
    Ok(())
}
