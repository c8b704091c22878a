//! Text interchange format for alignments.
//!
//! Header line `#frame_shift_ms <value>`, then one line per segment:
//! `utt-id<TAB>start-frame<TAB>end-frame<TAB>token<TAB>kind` with kind in
//! `{word, phoneme, silence, blank}`. Start frames are inclusive, end
//! frames exclusive.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::lattice::{HardAlignment, SegmentKind};
use crate::topology::LabelSpace;

/// Segments of one utterance at a common frame shift.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct UttAlignment {
    /// (word, start, end) with exclusive end, in time order.
    pub words: Vec<(String, usize, usize)>,
    /// (token, start, end, kind) for phoneme/silence/blank segments.
    pub segments: Vec<(String, usize, usize, String)>,
}

/// Alignments for a set of utterances, keyed by utterance id.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignmentSet {
    pub frame_shift_ms: f64,
    pub utts: BTreeMap<String, UttAlignment>,
}

impl AlignmentSet {
    pub fn new(frame_shift_ms: f64) -> Self {
        AlignmentSet { frame_shift_ms, utts: BTreeMap::new() }
    }

    /// Adds one utterance's hard alignment, resolving label names
    /// through the label space.
    pub fn insert_hard(&mut self, utt: &str, hard: &HardAlignment, space: &LabelSpace) {
        let mut ali = UttAlignment::default();
        for seg in &hard.word_segments {
            ali.words.push((seg.word.clone(), seg.start, seg.end));
        }
        for seg in &hard.label_segments {
            let kind = match seg.kind {
                SegmentKind::Phoneme => "phoneme",
                SegmentKind::Silence => "silence",
                SegmentKind::Blank => "blank",
            };
            ali.segments.push((
                space.label_name(seg.label as usize),
                seg.start,
                seg.end,
                kind.to_string(),
            ));
        }
        self.utts.insert(utt.to_string(), ali);
    }
}

pub fn write_alignments(path: &Path, set: &AlignmentSet) -> Result<()> {
    let mut text = format!("#frame_shift_ms {}\n", set.frame_shift_ms);
    for (utt, ali) in &set.utts {
        let mut rows: Vec<(usize, usize, &str, &str)> = Vec::new();
        for (w, s, e) in &ali.words {
            rows.push((*s, *e, w.as_str(), "word"));
        }
        for (tok, s, e, kind) in &ali.segments {
            rows.push((*s, *e, tok.as_str(), kind.as_str()));
        }
        rows.sort_by_key(|&(s, e, _, kind)| (s, e, kind != "word"));
        for (s, e, tok, kind) in rows {
            text.push_str(&format!("{utt}\t{s}\t{e}\t{tok}\t{kind}\n"));
        }
    }
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, text)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

pub fn read_alignments(path: &Path) -> Result<AlignmentSet> {
    let text = std::fs::read_to_string(path)?;
    let mut frame_shift_ms = None;
    let mut set: Option<AlignmentSet> = None;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim_end();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix("#frame_shift_ms") {
            let v: f64 = rest.trim().parse().map_err(|_| Error::Parse {
                path: path.display().to_string(),
                line: lineno + 1,
                msg: format!("bad frame shift `{rest}`"),
            })?;
            frame_shift_ms = Some(v);
            set = Some(AlignmentSet::new(v));
            continue;
        }
        if line.starts_with('#') {
            continue;
        }
        let parts: Vec<&str> = line.split('\t').collect();
        if parts.len() != 5 {
            return Err(Error::Parse {
                path: path.display().to_string(),
                line: lineno + 1,
                msg: "expected `utt-id\\tstart\\tend\\ttoken\\tkind`".into(),
            });
        }
        if frame_shift_ms.is_none() {
            return Err(Error::Parse {
                path: path.display().to_string(),
                line: lineno + 1,
                msg: "missing `#frame_shift_ms` header".into(),
            });
        }
        let parse_frame = |s: &str| -> Result<usize> {
            s.parse().map_err(|_| Error::Parse {
                path: path.display().to_string(),
                line: lineno + 1,
                msg: format!("bad frame index `{s}`"),
            })
        };
        let (start, end) = (parse_frame(parts[1])?, parse_frame(parts[2])?);
        let entry = set.as_mut().unwrap().utts.entry(parts[0].to_string()).or_default();
        match parts[4] {
            "word" => entry.words.push((parts[3].to_string(), start, end)),
            kind @ ("phoneme" | "silence" | "blank") => {
                entry.segments.push((parts[3].to_string(), start, end, kind.to_string()))
            }
            other => {
                return Err(Error::Parse {
                    path: path.display().to_string(),
                    line: lineno + 1,
                    msg: format!("unknown segment kind `{other}`"),
                })
            }
        }
    }
    set.ok_or_else(|| Error::Format {
        path: path.display().to_string(),
        msg: "empty alignment file".into(),
    })
}
