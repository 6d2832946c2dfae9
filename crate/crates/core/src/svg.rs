//! Static SVG scatterplots of projected samples.
//!
//! Two-dimensional projections are drawn as a single panel. Three-dimensional
//! projections are drawn as the three coordinate-pair panels side by side.
//! Data points are filled circles, benchmark points hollow squares.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::frame::{ProjectedSample, Source};

const PANEL: f64 = 360.0;
const MARGIN: f64 = 48.0;
const GLYPH: f64 = 2.6;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SvgStyle {
    pub title: Option<String>,
    /// One label per projected coordinate; defaults to `A1`, `A2`, ...
    pub axis_labels: Option<Vec<String>>,
}

/// Renders `samples` (all of the same dimension) as a standalone SVG document.
pub fn emit_svg(samples: &[&ProjectedSample], style: &SvgStyle) -> Result<String> {
    let dim = match samples.first() {
        Some(s) => s.points.dim(),
        None => style.axis_labels.as_ref().map_or(2, Vec::len),
    };
    if !(dim == 2 || dim == 3) {
        return Err(Error::UnsupportedDimension(dim));
    }
    if let Some(bad) = samples.iter().find(|s| s.points.dim() != dim) {
        return Err(Error::DimensionMismatch {
            context: "plotted samples",
            expected: dim,
            found: bad.points.dim(),
        });
    }
    let labels: Vec<String> = match &style.axis_labels {
        Some(l) if l.len() == dim => l.clone(),
        Some(l) => {
            return Err(Error::DimensionMismatch {
                context: "axis labels",
                expected: dim,
                found: l.len(),
            })
        }
        None => (1..=dim).map(|i| format!("A{i}")).collect(),
    };
    let ranges: Vec<(f64, f64)> = (0..dim).map(|k| axis_range(samples, k)).collect();
    let pairs: &[(usize, usize)] = if dim == 2 { &[(0, 1)] } else { &[(0, 1), (0, 2), (1, 2)] };

    let title_h = if style.title.is_some() { 24.0 } else { 0.0 };
    let cell = PANEL + 2.0 * MARGIN;
    let width = cell * pairs.len() as f64;
    let height = cell + title_h;

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#,
        w = num(width),
        h = num(height)
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    if let Some(t) = &style.title {
        let _ = writeln!(
            out,
            r#"<text x="{}" y="17" font-family="sans-serif" font-size="14" text-anchor="middle">{}</text>"#,
            num(width / 2.0),
            escape(t)
        );
    }
    for (pi, &(a, b)) in pairs.iter().enumerate() {
        let ox = pi as f64 * cell + MARGIN;
        let oy = title_h + MARGIN;
        panel(&mut out, ox, oy, (&labels[a], ranges[a]), (&labels[b], ranges[b]));
        for s in samples {
            let glyph = match s.source {
                Source::Data => "data",
                Source::Benchmark => "benchmark",
            };
            let _ = writeln!(out, r#"<g class="{glyph}">"#);
            for p in s.points.iter() {
                let x = ox + scale(p[a], ranges[a]) * PANEL;
                let y = oy + (1.0 - scale(p[b], ranges[b])) * PANEL;
                match s.source {
                    Source::Data => {
                        let _ = writeln!(
                            out,
                            r##"<circle cx="{}" cy="{}" r="{}" fill="#1f4e9c"/>"##,
                            num(x),
                            num(y),
                            num(GLYPH)
                        );
                    }
                    Source::Benchmark => {
                        let _ = writeln!(
                            out,
                            r##"<rect x="{}" y="{}" width="{w}" height="{w}" fill="none" stroke="#c0392b" stroke-width="1"/>"##,
                            num(x - GLYPH),
                            num(y - GLYPH),
                            w = num(2.0 * GLYPH)
                        );
                    }
                }
            }
            let _ = writeln!(out, "</g>");
        }
    }
    out.push_str("</svg>\n");
    Ok(out)
}

fn panel(out: &mut String, ox: f64, oy: f64, x: (&str, (f64, f64)), y: (&str, (f64, f64))) {
    let _ = writeln!(
        out,
        r##"<rect x="{}" y="{}" width="{p}" height="{p}" fill="none" stroke="#444" stroke-width="1"/>"##,
        num(ox),
        num(oy),
        p = num(PANEL)
    );
    let text = |out: &mut String, tx: f64, ty: f64, anchor: &str, body: &str| {
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="11" text-anchor="{anchor}">{}</text>"#,
            num(tx),
            num(ty),
            escape(body)
        );
    };
    let bottom = oy + PANEL;
    text(out, ox, bottom + 14.0, "start", &tick(x.1 .0));
    text(out, ox + PANEL, bottom + 14.0, "end", &tick(x.1 .1));
    text(out, ox + PANEL / 2.0, bottom + 30.0, "middle", x.0);
    text(out, ox - 4.0, bottom, "end", &tick(y.1 .0));
    text(out, ox - 4.0, oy + 10.0, "end", &tick(y.1 .1));
    let _ = writeln!(
        out,
        r#"<text x="{cx}" y="{cy}" font-family="sans-serif" font-size="11" text-anchor="middle" transform="rotate(-90 {cx} {cy})">{}</text>"#,
        escape(y.0),
        cx = num(ox - 30.0),
        cy = num(oy + PANEL / 2.0)
    );
}

fn axis_range(samples: &[&ProjectedSample], k: usize) -> (f64, f64) {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for s in samples {
        for p in s.points.iter() {
            lo = lo.min(p[k]);
            hi = hi.max(p[k]);
        }
    }
    if !lo.is_finite() {
        return (-1.0, 1.0);
    }
    if hi - lo <= 0.0 {
        return (lo - 1.0, hi + 1.0);
    }
    let pad = 0.05 * (hi - lo);
    (lo - pad, hi + pad)
}

fn scale(v: f64, (lo, hi): (f64, f64)) -> f64 {
    (v - lo) / (hi - lo)
}

fn num(x: f64) -> String {
    let s = format!("{x:.2}");
    if s == "-0.00" {
        "0.00".to_string()
    } else {
        s
    }
}

fn tick(x: f64) -> String {
    let s = format!("{x:.3}");
    if s == "-0.000" {
        "0.000".to_string()
    } else {
        s
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frame::PointSet;

    fn sample(points: &[Vec<f64>], dim: usize, source: Source) -> ProjectedSample {
        let points = if points.is_empty() { PointSet::empty(dim) } else { PointSet::from_points(points) };
        ProjectedSample { points, source }
    }

    #[test]
    fn empty_sample_draws_axes_only() {
        let s = sample(&[], 2, Source::Data);
        let svg = emit_svg(&[&s], &SvgStyle::default()).unwrap();
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
        assert!(!svg.contains("<circle"));
        assert!(svg.contains(">A1<") && svg.contains(">A2<"));
    }

    #[test]
    fn single_point_at_origin_is_centred() {
        let s = sample(&[vec![0.0, 0.0]], 2, Source::Data);
        let svg = emit_svg(&[&s], &SvgStyle::default()).unwrap();
        let c = num(MARGIN + PANEL / 2.0);
        assert!(svg.contains(&format!(r#"<circle cx="{c}" cy="{c}""#)), "{svg}");
    }

    #[test]
    fn glyphs_distinguish_sources() {
        let d = sample(&[vec![0.0, 1.0], vec![1.0, 0.0]], 2, Source::Data);
        let b = sample(&[vec![0.5, 0.5]], 2, Source::Benchmark);
        let svg = emit_svg(&[&d, &b], &SvgStyle::default()).unwrap();
        assert_eq!(svg.matches("<circle").count(), 2);
        assert_eq!(svg.matches(r##"fill="none" stroke="#c0392b""##).count(), 1);
    }

    #[test]
    fn three_dims_give_three_panels() {
        let d = sample(&[vec![0.0, 1.0, 2.0]], 3, Source::Data);
        let style = SvgStyle { title: Some("a < b".into()), axis_labels: None };
        let svg = emit_svg(&[&d], &style).unwrap();
        assert_eq!(svg.matches("<circle").count(), 3);
        assert_eq!(svg.matches(r##"stroke="#444""##).count(), 3);
        assert!(svg.contains("a &lt; b"));
    }

    #[test]
    fn other_dimensions_are_rejected() {
        let d = sample(&[vec![1.0]], 1, Source::Data);
        assert!(matches!(emit_svg(&[&d], &SvgStyle::default()), Err(Error::UnsupportedDimension(1))));
    }

    #[test]
    fn output_is_deterministic() {
        let d = sample(&[vec![0.1, -0.3], vec![2.0, 0.7]], 2, Source::Data);
        let a = emit_svg(&[&d], &SvgStyle::default()).unwrap();
        let b = emit_svg(&[&d], &SvgStyle::default()).unwrap();
        assert_eq!(a, b);
    }
}
