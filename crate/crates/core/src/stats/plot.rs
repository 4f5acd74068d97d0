//! Minimal dependency-free SVG scatter plots with byte-stable output.

use std::fmt::Write as _;
use std::path::Path;

use super::StatsError;

#[derive(Clone, Debug, PartialEq)]
pub struct ScatterPoint {
    pub x: f64,
    pub y: f64,
    /// Class label; each distinct label gets its own marker style.
    pub label: String,
}

const WIDTH: f64 = 480.0;
const HEIGHT: f64 = 360.0;
const MARGIN: f64 = 56.0;
const TICKS: usize = 5;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

/// Renders the points as a standalone SVG document. Non-finite points are
/// dropped.
pub fn scatter_svg(points: &[ScatterPoint], x_label: &str, y_label: &str) -> Result<String, StatsError> {
    let pts: Vec<&ScatterPoint> = points.iter().filter(|p| p.x.is_finite() && p.y.is_finite()).collect();
    if pts.is_empty() {
        return Err(StatsError::TooFew { needed: 1, got: 0 });
    }
    let mut classes: Vec<&str> = Vec::new();
    for p in &pts {
        if !classes.contains(&p.label.as_str()) {
            classes.push(&p.label);
        }
    }
    let (x0, x1) = padded_range(pts.iter().map(|p| p.x));
    let (y0, y1) = padded_range(pts.iter().map(|p| p.y));
    let sx = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (WIDTH - 1.5 * MARGIN);
    let sy = |y: f64| HEIGHT - MARGIN - (y - y0) / (y1 - y0) * (HEIGHT - 1.5 * MARGIN);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let (left, right, top, bottom) = (MARGIN, WIDTH - MARGIN / 2.0, MARGIN / 2.0, HEIGHT - MARGIN);
    let _ = writeln!(
        s,
        r#"<path class="axes" d="M{left} {top} V{bottom} H{right}" stroke="black" fill="none"/>"#
    );
    for i in 0..TICKS {
        let f = i as f64 / (TICKS - 1) as f64;
        let (xv, yv) = (x0 + f * (x1 - x0), y0 + f * (y1 - y0));
        let (px, py) = (sx(xv), sy(yv));
        let _ = writeln!(
            s,
            r#"<line x1="{px:.2}" y1="{bottom}" x2="{px:.2}" y2="{:.2}" stroke="black"/><text x="{px:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            bottom + 4.0,
            bottom + 16.0,
            tick(xv)
        );
        let _ = writeln!(
            s,
            r#"<line x1="{:.2}" y1="{py:.2}" x2="{left}" y2="{py:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            left - 4.0,
            left - 6.0,
            py + 4.0,
            tick(yv)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        (left + right) / 2.0,
        HEIGHT - 12.0,
        escape(x_label)
    );
    let _ = writeln!(
        s,
        r#"<text transform="translate(14 {:.2}) rotate(-90)" text-anchor="middle">{}</text>"#,
        (top + bottom) / 2.0,
        escape(y_label)
    );
    for p in &pts {
        let class = classes.iter().position(|c| *c == p.label).unwrap_or(0);
        s.push_str(&marker(class, sx(p.x), sy(p.y)));
    }
    for (i, c) in classes.iter().enumerate() {
        let y = top + 4.0 + 14.0 * i as f64;
        s.push_str(&marker(i, right - 90.0, y));
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}">{}</text>"#, right - 82.0, y + 4.0, escape(c));
    }
    s.push_str("</svg>\n");
    Ok(s)
}

pub fn render_scatter(
    points: &[ScatterPoint],
    x_label: &str,
    y_label: &str,
    out_path: impl AsRef<Path>,
) -> Result<(), StatsError> {
    let svg = scatter_svg(points, x_label, y_label)?;
    std::fs::write(out_path, svg)?;
    Ok(())
}

fn padded_range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if hi > lo {
        let pad = (hi - lo) * 0.05;
        (lo - pad, hi + pad)
    } else {
        (lo - 1.0, hi + 1.0)
    }
}

/// Marker shapes cycle circle, square, triangle, diamond; colors cycle the
/// palette independently so many classes stay distinguishable.
fn marker(class: usize, x: f64, y: f64) -> String {
    let color = COLORS[class % COLORS.len()];
    match class % 4 {
        0 => format!(r#"<circle class="marker m{class}" cx="{x:.2}" cy="{y:.2}" r="3.5" fill="{color}"/>"#) + "\n",
        1 => format!(
            r#"<rect class="marker m{class}" x="{:.2}" y="{:.2}" width="7" height="7" fill="{color}"/>"#,
            x - 3.5,
            y - 3.5
        ) + "\n",
        2 => format!(
            r#"<polygon class="marker m{class}" points="{x:.2},{:.2} {:.2},{:.2} {:.2},{:.2}" fill="{color}"/>"#,
            y - 4.0,
            x - 4.0,
            y + 3.5,
            x + 4.0,
            y + 3.5
        ) + "\n",
        _ => format!(
            r#"<polygon class="marker m{class}" points="{x:.2},{:.2} {:.2},{y:.2} {x:.2},{:.2} {:.2},{y:.2}" fill="{color}"/>"#,
            y - 4.5,
            x + 4.5,
            y + 4.5,
            x - 4.5
        ) + "\n",
    }
}

fn tick(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && !(1e-2..1e4).contains(&a) {
        format!("{v:.2e}")
    } else {
        let s = format!("{v:.3}");
        let s = s.trim_end_matches('0').trim_end_matches('.');
        if s == "-0" { "0".to_string() } else { s.to_string() }
    }
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}
