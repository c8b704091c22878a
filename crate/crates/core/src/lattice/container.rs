//! Little-endian binary containers for frame scores and alignments.
//!
//! Shared layout: 4-byte magic, u32 T, u32 L, f32 frame-shift-ms, then
//! the payload. `FSC1` and `SAL1` carry T x L f32 matrices row-major;
//! `HAL1` carries T u32 label indices.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::lattice::{FrameScores, HardAlignment, LabelSegment, SegmentKind, SoftAlignment};

pub const FRAME_SCORES_MAGIC: &[u8; 4] = b"FSC1";
pub const SOFT_ALIGNMENT_MAGIC: &[u8; 4] = b"SAL1";
pub const HARD_ALIGNMENT_MAGIC: &[u8; 4] = b"HAL1";

struct Header {
    frames: usize,
    labels: usize,
    frame_shift_ms: f32,
}

fn write_header<W: Write>(w: &mut W, magic: &[u8; 4], h: &Header) -> Result<()> {
    w.write_all(magic)?;
    w.write_all(&(h.frames as u32).to_le_bytes())?;
    w.write_all(&(h.labels as u32).to_le_bytes())?;
    w.write_all(&h.frame_shift_ms.to_le_bytes())?;
    Ok(())
}

fn read_header<R: Read>(r: &mut R, magic: &[u8; 4], path: &Path) -> Result<Header> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf)?;
    if &buf != magic {
        return Err(Error::Format {
            path: path.display().to_string(),
            msg: format!(
                "bad magic {:?}, expected {:?}",
                String::from_utf8_lossy(&buf),
                String::from_utf8_lossy(magic)
            ),
        });
    }
    r.read_exact(&mut buf)?;
    let frames = u32::from_le_bytes(buf) as usize;
    r.read_exact(&mut buf)?;
    let labels = u32::from_le_bytes(buf) as usize;
    r.read_exact(&mut buf)?;
    let frame_shift_ms = f32::from_le_bytes(buf);
    Ok(Header { frames, labels, frame_shift_ms })
}

fn write_f32_matrix<W: Write>(w: &mut W, data: &[f64]) -> Result<()> {
    for &v in data {
        w.write_all(&(v as f32).to_le_bytes())?;
    }
    Ok(())
}

fn read_f32_matrix<R: Read>(r: &mut R, len: usize) -> Result<Vec<f64>> {
    let mut bytes = vec![0u8; len * 4];
    r.read_exact(&mut bytes)?;
    Ok(bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
        .collect())
}

/// Writes atomically: temp file in the target directory, then rename.
fn atomic<F: FnOnce(&mut BufWriter<File>) -> Result<()>>(path: &Path, f: F) -> Result<()> {
    let tmp = path.with_extension("tmp");
    {
        let mut w = BufWriter::new(File::create(&tmp)?);
        f(&mut w)?;
        w.flush()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

pub fn write_frame_scores(path: &Path, scores: &FrameScores) -> Result<()> {
    atomic(path, |w| {
        write_header(
            w,
            FRAME_SCORES_MAGIC,
            &Header {
                frames: scores.num_frames(),
                labels: scores.num_labels(),
                frame_shift_ms: scores.frame_shift_ms(),
            },
        )?;
        write_f32_matrix(w, scores.data())
    })
}

pub fn read_frame_scores(path: &Path) -> Result<FrameScores> {
    let mut r = BufReader::new(File::open(path)?);
    let h = read_header(&mut r, FRAME_SCORES_MAGIC, path)?;
    let data = read_f32_matrix(&mut r, h.frames * h.labels)?;
    FrameScores::new(h.frames, h.labels, h.frame_shift_ms, data)
}

/// Writes a soft alignment, validating the row-sum invariant first.
pub fn write_soft_alignment(path: &Path, soft: &SoftAlignment) -> Result<()> {
    soft.validate_rows(1e-9)?;
    atomic(path, |w| {
        write_header(
            w,
            SOFT_ALIGNMENT_MAGIC,
            &Header {
                frames: soft.num_frames(),
                labels: soft.num_labels(),
                frame_shift_ms: soft.frame_shift_ms(),
            },
        )?;
        write_f32_matrix(w, soft.data())
    })
}

pub fn read_soft_alignment(path: &Path) -> Result<SoftAlignment> {
    let mut r = BufReader::new(File::open(path)?);
    let h = read_header(&mut r, SOFT_ALIGNMENT_MAGIC, path)?;
    let data = read_f32_matrix(&mut r, h.frames * h.labels)?;
    Ok(SoftAlignment::from_parts(h.frames, h.labels, h.frame_shift_ms, data))
}

pub fn write_hard_alignment(path: &Path, hard: &HardAlignment, num_labels: usize) -> Result<()> {
    atomic(path, |w| {
        write_header(
            w,
            HARD_ALIGNMENT_MAGIC,
            &Header {
                frames: hard.labels.len(),
                labels: num_labels,
                frame_shift_ms: hard.frame_shift_ms,
            },
        )?;
        for &l in &hard.labels {
            w.write_all(&l.to_le_bytes())?;
        }
        Ok(())
    })
}

/// Reads the per-frame labels of a hard alignment.
///
/// The binary payload carries no segment metadata; label segments are
/// regrouped from equal-label runs (kind unknown, reported as phoneme)
/// and word segments are left empty.
pub fn read_hard_alignment(path: &Path) -> Result<HardAlignment> {
    let mut r = BufReader::new(File::open(path)?);
    let h = read_header(&mut r, HARD_ALIGNMENT_MAGIC, path)?;
    let mut bytes = vec![0u8; h.frames * 4];
    r.read_exact(&mut bytes)?;
    let labels: Vec<u32> = bytes
        .chunks_exact(4)
        .map(|c| u32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();

    let mut label_segments = Vec::new();
    let mut t = 0;
    while t < labels.len() {
        let start = t;
        while t < labels.len() && labels[t] == labels[start] {
            t += 1;
        }
        label_segments.push(LabelSegment {
            label: labels[start],
            kind: SegmentKind::Phoneme,
            start,
            end: t,
        });
    }
    Ok(HardAlignment {
        labels,
        label_segments,
        word_segments: Vec::new(),
        frame_shift_ms: h.frame_shift_ms,
    })
}
