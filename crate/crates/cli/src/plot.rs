//! SVG convergence plot: log₁₀(energy − min) against iteration.

use crate::output::TraceRow;
use std::fmt::Write;

const W: f64 = 720.0;
const H: f64 = 440.0;
const MARGIN: (f64, f64, f64, f64) = (70.0, 20.0, 30.0, 50.0); // left, right, top, bottom
const COLORS: [&str; 8] = ["#2ca02c", "#1f77b4", "#d62728", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"];

pub struct Series<'a> {
    pub label: String,
    pub rows: &'a [TraceRow],
}

/// Renders all series on shared axes. The minimum is taken over every
/// series, and gaps at or below that floor are drawn at the lowest decade
/// any series reaches.
pub fn render_svg(series: &[Series]) -> String {
    let e_min = series.iter().flat_map(|s| s.rows.iter().map(|r| r.energy)).fold(f64::INFINITY, f64::min);
    let gaps: Vec<Vec<f64>> = series.iter().map(|s| s.rows.iter().map(|r| r.energy - e_min).collect()).collect();
    let positive = gaps.iter().flatten().copied().filter(|g| *g > 0.0);
    let lo = positive.clone().fold(f64::INFINITY, f64::min);
    let hi = positive.fold(0.0, f64::max);
    let (y_lo, y_hi) = if lo.is_finite() && hi > 0.0 {
        let (a, b) = (lo.log10().floor() - 1.0, hi.log10().ceil());
        (a, if b > a { b } else { a + 1.0 })
    } else {
        (-1.0, 1.0)
    };
    let x_hi = series.iter().map(|s| s.rows.last().map_or(0, |r| r.iter)).max().unwrap_or(0).max(1) as f64;

    let (ml, mr, mt, mb) = MARGIN;
    let px = |x: f64| ml + (W - ml - mr) * x / x_hi;
    let py = |g: f64| {
        let l = if g > 0.0 { g.log10().max(y_lo) } else { y_lo };
        mt + (H - mt - mb) * (y_hi - l) / (y_hi - y_lo)
    };

    let mut svg = String::new();
    let _ = writeln!(svg, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#);
    let _ = writeln!(svg, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(svg, r#"<rect x="{ml}" y="{mt}" width="{}" height="{}" fill="none" stroke="black"/>"#, W - ml - mr, H - mt - mb);
    let mut d = y_lo as i64;
    while d <= y_hi as i64 {
        let y = py(10f64.powi(d as i32));
        let _ = writeln!(svg, r##"<line x1="{ml}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="#ddd"/>"##, W - mr);
        let _ = writeln!(svg, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">1e{d}</text>"#, ml - 6.0, y + 4.0);
        d += 1;
    }
    let step = ((x_hi / 8.0).ceil() as usize).max(1);
    for i in (0..=x_hi as usize).step_by(step) {
        let x = px(i as f64);
        let _ = writeln!(svg, r#"<text x="{x:.1}" y="{:.1}" text-anchor="middle">{i}</text>"#, H - mb + 16.0);
    }
    let _ = writeln!(svg, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">iteration</text>"#, ml + (W - ml - mr) / 2.0, H - 10.0);
    let _ = writeln!(svg, r#"<text x="16" y="{:.1}" text-anchor="middle" transform="rotate(-90 16 {:.1})">energy − min</text>"#, mt + (H - mt - mb) / 2.0, mt + (H - mt - mb) / 2.0);

    for (k, (s, g)) in series.iter().zip(&gaps).enumerate() {
        let color = COLORS[k % COLORS.len()];
        let points: Vec<String> = s.rows.iter().zip(g).map(|(r, &g)| format!("{:.1},{:.1}", px(r.iter as f64), py(g))).collect();
        let _ = writeln!(svg, r#"<polyline class="series" fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#, points.join(" "));
        let ly = mt + 16.0 + 16.0 * k as f64;
        let _ = writeln!(svg, r#"<line x1="{:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{color}" stroke-width="2"/>"#, W - mr - 150.0, W - mr - 130.0);
        let _ = writeln!(svg, r#"<text x="{:.1}" y="{:.1}">{}</text>"#, W - mr - 124.0, ly + 4.0, escape(&s.label));
    }
    svg.push_str("</svg>\n");
    svg
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
