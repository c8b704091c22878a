//! SVG alignment plots: occupation-probability heatmap, hard-path step
//! line, and reference boundary rules.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::lattice::{HardAlignment, SoftAlignment};

const CELL: f64 = 24.0;
const LEFT: f64 = 72.0;
const TOP: f64 = 12.0;
const BOTTOM: f64 = 28.0;
const RIGHT: f64 = 12.0;

/// Renders an alignment plot: time on x, emission labels on y,
/// occupation mass as cell intensity, the hard path as a step line, and
/// reference segment boundaries as dashed vertical rules.
///
/// At least one of `soft`/`hard` must be given; all provided inputs must
/// agree on the frame count. Output bytes are deterministic for fixed
/// inputs.
pub fn emit_alignment_plot(
    soft: Option<&SoftAlignment>,
    hard: Option<&HardAlignment>,
    reference: Option<&HardAlignment>,
    label_names: Option<&[String]>,
    out_path: &Path,
) -> Result<()> {
    let svg = render_alignment_svg(soft, hard, reference, label_names)?;
    let tmp = out_path.with_extension("tmp");
    std::fs::write(&tmp, svg)?;
    std::fs::rename(&tmp, out_path)?;
    Ok(())
}

/// Pure renderer behind [`emit_alignment_plot`].
pub fn render_alignment_svg(
    soft: Option<&SoftAlignment>,
    hard: Option<&HardAlignment>,
    reference: Option<&HardAlignment>,
    label_names: Option<&[String]>,
) -> Result<String> {
    let mut frames: Option<usize> = None;
    let mut check = |t: usize| -> Result<()> {
        match frames {
            None => {
                frames = Some(t);
                Ok(())
            }
            Some(prev) if prev == t => Ok(()),
            Some(prev) => Err(Error::FrameMismatch(format!("{prev} vs {t} frames"))),
        }
    };
    if let Some(s) = soft {
        check(s.num_frames())?;
    }
    if let Some(h) = hard {
        check(h.labels.len())?;
    }
    if let Some(r) = reference {
        check(r.labels.len())?;
    }
    let Some(t_max) = frames else {
        return Err(Error::Config("plot needs a soft or hard alignment".into()));
    };

    let num_labels = soft
        .map(|s| s.num_labels())
        .or_else(|| {
            hard.map(|h| h.labels.iter().max().map(|&m| m as usize + 1).unwrap_or(1))
        })
        .unwrap_or(1)
        .max(hard.map(|h| h.labels.iter().max().map(|&m| m as usize + 1).unwrap_or(1)).unwrap_or(1));

    let width = LEFT + CELL * t_max as f64 + RIGHT;
    let height = TOP + CELL * num_labels as f64 + BOTTOM;
    let x = |t: usize| LEFT + CELL * t as f64;
    let y = |l: usize| TOP + CELL * (num_labels - 1 - l) as f64;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width:.0}\" height=\"{height:.0}\" viewBox=\"0 0 {width:.0} {height:.0}\">"
    );
    let _ = writeln!(
        svg,
        "<rect x=\"0\" y=\"0\" width=\"{width:.0}\" height=\"{height:.0}\" fill=\"#ffffff\"/>"
    );

    if let Some(s) = soft {
        for t in 0..t_max {
            for l in 0..s.num_labels() {
                let q = s.get(t, l).clamp(0.0, 1.0);
                if q < 1e-4 {
                    continue;
                }
                let _ = writeln!(
                    svg,
                    "<rect x=\"{:.1}\" y=\"{:.1}\" width=\"{CELL:.1}\" height=\"{CELL:.1}\" fill=\"#20639b\" fill-opacity=\"{q:.4}\"/>",
                    x(t),
                    y(l),
                );
            }
        }
    }

    // Grid frame.
    let _ = writeln!(
        svg,
        "<rect x=\"{LEFT:.1}\" y=\"{TOP:.1}\" width=\"{:.1}\" height=\"{:.1}\" fill=\"none\" stroke=\"#444444\" stroke-width=\"1\"/>",
        CELL * t_max as f64,
        CELL * num_labels as f64,
    );

    if let Some(r) = reference {
        for seg in &r.label_segments {
            for frame in [seg.start, seg.end] {
                let _ = writeln!(
                    svg,
                    "<line x1=\"{0:.1}\" y1=\"{TOP:.1}\" x2=\"{0:.1}\" y2=\"{1:.1}\" stroke=\"#d62728\" stroke-width=\"1\" stroke-dasharray=\"3,2\"/>",
                    x(frame),
                    TOP + CELL * num_labels as f64,
                );
            }
        }
    }

    if let Some(h) = hard {
        let mut points = String::new();
        for (t, &l) in h.labels.iter().enumerate() {
            let yc = y(l as usize) + CELL / 2.0;
            let _ = write!(points, "{:.1},{yc:.1} {:.1},{yc:.1} ", x(t), x(t + 1));
        }
        let _ = writeln!(
            svg,
            "<polyline points=\"{}\" fill=\"none\" stroke=\"#e07a1f\" stroke-width=\"2\"/>",
            points.trim_end()
        );
    }

    // Axis ticks: frame indices and label names.
    for t in 0..=t_max {
        if t.is_multiple_of(5) || t == t_max {
            let _ = writeln!(
                svg,
                "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"9\" font-family=\"monospace\" fill=\"#222222\" text-anchor=\"middle\">{t}</text>",
                x(t),
                TOP + CELL * num_labels as f64 + 14.0,
            );
        }
    }
    for l in 0..num_labels {
        let name = label_names
            .and_then(|n| n.get(l))
            .cloned()
            .unwrap_or_else(|| l.to_string());
        let _ = writeln!(
            svg,
            "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"9\" font-family=\"monospace\" fill=\"#222222\" text-anchor=\"end\">{}</text>",
            LEFT - 4.0,
            y(l) + CELL / 2.0 + 3.0,
            escape_xml(&name),
        );
    }

    svg.push_str("</svg>\n");
    Ok(svg)
}

fn escape_xml(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
