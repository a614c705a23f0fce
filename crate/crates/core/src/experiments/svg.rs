//! Minimal static SVG output: diverging heatmaps and line charts with bands.

use std::fmt::Write as _;

use crate::matrix::Matrix;

const CELL: f64 = 24.0;
const MARGIN: f64 = 40.0;

/// Blue (negative), white (zero), red (positive), saturating at `|v| = vmax`.
fn diverging(v: f64, vmax: f64) -> String {
    let t = if vmax > 0.0 { (v / vmax).clamp(-1.0, 1.0) } else { 0.0 };
    let fade = |c: f64| (255.0 - (255.0 - c) * t.abs()).round() as u8;
    let (r, g, b) = if t >= 0.0 { (fade(178.0), fade(24.0), fade(43.0)) } else { (fade(33.0), fade(102.0), fade(172.0)) };
    format!("#{r:02x}{g:02x}{b:02x}")
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

pub(crate) fn heatmap(m: &Matrix, vmax: f64, title: &str) -> String {
    let (rows, cols) = (m.rows(), m.cols());
    let w = 2.0 * MARGIN + cols as f64 * CELL;
    let h = 2.0 * MARGIN + rows as f64 * CELL;
    let mut out = String::new();
    let _ = writeln!(out, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#);
    let _ = writeln!(out, r#"<text x="{MARGIN}" y="{}" font-family="sans-serif" font-size="14">{}</text>"#, MARGIN - 12.0, escape(title));
    for i in 0..rows {
        for j in 0..cols {
            let _ = writeln!(
                out,
                r##"<rect x="{}" y="{}" width="{CELL}" height="{CELL}" fill="{}" stroke="#dddddd" stroke-width="0.5"/>"##,
                MARGIN + j as f64 * CELL,
                MARGIN + i as f64 * CELL,
                diverging(m[(i, j)], vmax)
            );
        }
    }
    let _ = writeln!(
        out,
        r#"<text x="{MARGIN}" y="{}" font-family="sans-serif" font-size="11">colour scale ±{vmax:.4}</text>"#,
        h - 12.0
    );
    out.push_str("</svg>\n");
    out
}

pub(crate) struct Series {
    pub name: String,
    pub color: &'static str,
    /// `(x, mean, std)`; non-finite means are skipped.
    pub points: Vec<(f64, f64, f64)>,
}

pub(crate) fn line_chart(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let (w, h) = (640.0, 420.0);
    let (left, right, top, bottom) = (70.0, 150.0, 40.0, 50.0);
    let pts = || series.iter().flat_map(|s| s.points.iter()).filter(|p| p.1.is_finite());
    let x_min = pts().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let x_max = pts().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    let y_max = pts().map(|p| p.1 + p.2).fold(0.0, f64::max);
    let x_span = if x_max > x_min { x_max - x_min } else { 1.0 };
    let y_top = if y_max > 0.0 { y_max * 1.05 } else { 1.0 };
    let px = |x: f64| left + (x - if x_min.is_finite() { x_min } else { 0.0 }) / x_span * (w - left - right);
    let py = |y: f64| h - bottom - (y.max(0.0) / y_top) * (h - top - bottom);

    let mut out = String::new();
    let _ = writeln!(out, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#);
    let _ = writeln!(out, r#"<text x="{left}" y="24" font-family="sans-serif" font-size="14">{}</text>"#, escape(title));
    let _ = writeln!(
        out,
        r#"<path d="M{left},{top} L{left},{} L{},{}" fill="none" stroke="black"/>"#,
        h - bottom,
        w - right,
        h - bottom
    );
    for k in 0..=4 {
        let y = y_top * k as f64 / 4.0;
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="10" text-anchor="end">{y:.3}</text>"#,
            left - 6.0,
            py(y) + 3.0
        );
    }
    let mut xs: Vec<f64> = pts().map(|p| p.0).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    for x in xs {
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="10" text-anchor="middle">{x}</text>"#,
            px(x),
            h - bottom + 16.0
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12" text-anchor="middle">{}</text>"#,
        (left + w - right) / 2.0,
        h - 10.0,
        escape(x_label)
    );
    let _ = writeln!(
        out,
        r#"<text x="16" y="{}" font-family="sans-serif" font-size="12" transform="rotate(-90 16 {})" text-anchor="middle">{}</text>"#,
        h / 2.0,
        h / 2.0,
        escape(y_label)
    );
    for (k, s) in series.iter().enumerate() {
        let p: Vec<_> = s.points.iter().filter(|p| p.1.is_finite()).collect();
        if !p.is_empty() {
            let upper = p.iter().map(|q| format!("{:.2},{:.2}", px(q.0), py(q.1 + q.2)));
            let lower = p.iter().rev().map(|q| format!("{:.2},{:.2}", px(q.0), py(q.1 - q.2)));
            let band: Vec<String> = upper.chain(lower).collect();
            let _ = writeln!(out, r#"<polygon points="{}" fill="{}" fill-opacity="0.2" stroke="none"/>"#, band.join(" "), s.color);
            let line: Vec<String> = p.iter().map(|q| format!("{:.2},{:.2}", px(q.0), py(q.1))).collect();
            let _ = writeln!(out, r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="2"/>"#, line.join(" "), s.color);
        }
        let ly = top + 20.0 * k as f64;
        let _ = writeln!(
            out,
            r#"<rect x="{}" y="{}" width="12" height="12" fill="{}"/><text x="{}" y="{}" font-family="sans-serif" font-size="12">{}</text>"#,
            w - right + 16.0,
            ly,
            s.color,
            w - right + 34.0,
            ly + 10.0,
            escape(&s.name)
        );
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn colours_saturate() {
        assert_eq!(diverging(0.0, 1.0), "#ffffff");
        assert_eq!(diverging(5.0, 1.0), "#b2182b");
        assert_eq!(diverging(-1.0, 1.0), "#2166ac");
    }

    #[test]
    fn heatmap_has_one_rect_per_cell() {
        let s = heatmap(&Matrix::identity(3), 1.0, "a<b");
        assert_eq!(s.matches("<rect").count(), 9);
        assert!(s.contains("a&lt;b"));
        assert!(s.trim_end().ends_with("</svg>"));
    }

    #[test]
    fn line_chart_skips_gaps() {
        let s = line_chart(
            "t",
            "d",
            "err",
            &[Series { name: "x".into(), color: "#000000", points: vec![(1.0, 0.5, 0.1), (2.0, f64::NAN, 0.0)] }],
        );
        assert_eq!(s.matches("<polyline").count(), 1);
    }
}
