//! Minimal SVG line charts.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

const WIDTH: f64 = 900.0;
const HEIGHT: f64 = 260.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 140.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 40.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

/// One named polyline.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

/// `[min, max]` of `values` widened by 10% of the span on each side.
pub fn padded_range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    let span = hi - lo;
    let pad = if span > 0.0 {
        0.1 * span
    } else {
        0.1 * lo.abs().max(1e-12)
    };
    (lo - pad, hi + pad)
}

/// Renders the chart. Data coordinates live in an inner `<svg>` whose
/// `viewBox` is `t_min -y_max t_span y_span` (y flipped by the inner group).
pub fn render_svg(series: &[Series], title: &str, x_label: &str, y_label: &str) -> Result<String> {
    if series.is_empty() || series.iter().all(|s| s.points.is_empty()) {
        return Err(Error::InvalidParameter("no data to plot".into()));
    }
    let all = || series.iter().flat_map(|s| s.points.iter());
    if all().any(|(x, y)| !(x.is_finite() && y.is_finite())) {
        return Err(Error::InvalidParameter("non-finite plot data".into()));
    }
    let (x_lo, mut x_hi) = all().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
        (lo.min(p.0), hi.max(p.0))
    });
    if x_hi <= x_lo {
        x_hi = x_lo + 1.0;
    }
    let (y_lo, y_hi) = padded_range(all().map(|p| p.1));
    let (pw, ph) = (WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(
        s,
        r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="20" font-family="sans-serif" font-size="14" text-anchor="middle">{}</text>"#,
        LEFT + pw / 2.0,
        escape(title)
    );
    let _ = writeln!(
        s,
        r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );
    let _ = writeln!(
        s,
        r#"<svg x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" viewBox="{:?} {:?} {:?} {:?}" preserveAspectRatio="none">"#,
        x_lo,
        -y_hi,
        x_hi - x_lo,
        y_hi - y_lo
    );
    let _ = writeln!(s, r#"<g transform="scale(1,-1)">"#);
    for (i, ser) in series.iter().enumerate() {
        let pts: Vec<String> = ser.points.iter().map(|(x, y)| format!("{x:?},{y:?}")).collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{}" stroke-width="1.2" vector-effect="non-scaling-stroke" points="{}"/>"#,
            COLORS[i % COLORS.len()],
            pts.join(" ")
        );
    }
    s.push_str("</g>\n</svg>\n");

    // tick labels at the ends of each axis
    let label = |s: &mut String, x: f64, y: f64, anchor: &str, text: String| {
        let _ = writeln!(
            s,
            r#"<text x="{x}" y="{y}" font-family="sans-serif" font-size="11" text-anchor="{anchor}">{text}</text>"#
        );
    };
    label(&mut s, LEFT - 4.0, TOP + 10.0, "end", format!("{y_hi:.3e}"));
    label(&mut s, LEFT - 4.0, TOP + ph, "end", format!("{y_lo:.3e}"));
    label(&mut s, LEFT, TOP + ph + 14.0, "start", format!("{x_lo}"));
    label(&mut s, LEFT + pw, TOP + ph + 14.0, "end", format!("{x_hi}"));
    label(&mut s, LEFT + pw / 2.0, HEIGHT - 6.0, "middle", escape(x_label));
    let _ = writeln!(
        s,
        r#"<text x="14" y="{}" font-family="sans-serif" font-size="12" text-anchor="middle" transform="rotate(-90 14 {})">{}</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0,
        escape(y_label)
    );
    for (i, ser) in series.iter().enumerate() {
        let y = TOP + 12.0 + 18.0 * i as f64;
        let x = WIDTH - RIGHT + 10.0;
        let _ = writeln!(
            s,
            r#"<line x1="{x}" y1="{}" x2="{}" y2="{}" stroke="{}" stroke-width="2"/>"#,
            y - 4.0,
            x + 20.0,
            y - 4.0,
            COLORS[i % COLORS.len()]
        );
        label(&mut s, x + 26.0, y, "start", escape(&ser.label));
    }
    s.push_str("</svg>\n");
    Ok(s)
}

pub fn emit_svg(series: &[Series], path: &Path, title: &str, x_label: &str, y_label: &str) -> Result<()> {
    let text = render_svg(series, title, x_label, y_label)?;
    std::fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
