//! Activation-graph plots as hand-written SVG.
//!
//! Output depends only on the inputs: fixed canvas, fixed float formatting,
//! no timestamps or ids.

use std::fmt::Write as _;

use textcnn_core::analysis::{ActivationGraph, KernelId};

const WIDTH: f64 = 900.0;
const HEIGHT: f64 = 360.0;
const LEFT: f64 = 60.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 40.0;
const COLORS: [&str; 2] = ["#1f77b4", "#d62728"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// `r=0.94404`, or `r=undefined` when a series is constant.
pub fn r_label(r: Option<f64>) -> String {
    match r {
        Some(r) => format!("r={r:.5}"),
        None => "r=undefined".into(),
    }
}

fn polyline(values: &[f64], x: impl Fn(usize) -> f64, y: impl Fn(f64) -> f64) -> String {
    let mut s = String::with_capacity(values.len() * 14);
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            s.push(' ');
        }
        let _ = write!(s, "{:.2},{:.2}", x(i), y(*v));
    }
    s
}

/// Renders both series of `graph` on shared axes, slice boundaries as
/// dashed verticals, with `r` in the corner.
pub fn render_activation_graph(graph: &ActivationGraph, a: KernelId, b: KernelId) -> String {
    let n = graph.points.len();
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let ymax = graph
        .points
        .iter()
        .flat_map(|p| [p.0, p.1])
        .fold(0.0f64, f64::max);
    let ymax = if ymax > 0.0 { ymax } else { 1.0 };
    let step = if n > 1 { plot_w / (n - 1) as f64 } else { 0.0 };
    let x = |i: usize| LEFT + i as f64 * step;
    let y = |v: f64| TOP + plot_h * (1.0 - v / ymax);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let title = escape(&format!("activation graph {a} vs {b}"));
    let _ = writeln!(s, "<title>{title}</title>");
    let _ = writeln!(s, r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r##"<g stroke="#444" stroke-width="1"><line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{:.2}"/><line x1="{LEFT}" y1="{:.2}" x2="{:.2}" y2="{:.2}"/></g>"##,
        TOP + plot_h,
        TOP + plot_h,
        LEFT + plot_w,
        TOP + plot_h
    );
    let _ = writeln!(s, r##"<g font-family="sans-serif" font-size="11" fill="#444">"##);
    let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{ymax:.3}</text>"#, LEFT - 6.0, TOP + 4.0);
    let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">0</text>"#, LEFT - 6.0, TOP + plot_h + 4.0);
    let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{n} n-grams</text>"#, LEFT + plot_w / 2.0, HEIGHT - 12.0);
    let _ = writeln!(s, "</g>");

    let inner = &graph.slice_bounds[1..graph.slice_bounds.len().saturating_sub(1)];
    if !inner.is_empty() {
        let _ = writeln!(s, r##"<g class="slices" stroke="#999" stroke-dasharray="4 3">"##);
        for &b in inner {
            let bx = if b == 0 { x(0) } else { (x(b - 1) + x(b)) / 2.0 };
            let _ = writeln!(s, r#"<line x1="{bx:.2}" y1="{TOP}" x2="{bx:.2}" y2="{:.2}"/>"#, TOP + plot_h);
        }
        let _ = writeln!(s, "</g>");
    }

    for (idx, (series, id)) in [(graph.xs(), a), (graph.ys(), b)].into_iter().enumerate() {
        let _ = writeln!(
            s,
            r#"<polyline class="series" data-kernel="{id}" fill="none" stroke="{}" stroke-width="1.2" points="{}"/>"#,
            COLORS[idx],
            polyline(&series, x, y)
        );
    }

    let _ = writeln!(s, r#"<g font-family="sans-serif" font-size="13">"#);
    let _ = writeln!(s, r#"<text x="{LEFT}" y="22">{title}</text>"#);
    let _ = writeln!(
        s,
        r#"<text class="r" x="{:.2}" y="22" text-anchor="end">{}</text>"#,
        WIDTH - RIGHT,
        r_label(graph.r)
    );
    for (idx, id) in [a, b].into_iter().enumerate() {
        let ly = TOP + 14.0 + idx as f64 * 16.0;
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{ly:.2}" text-anchor="end" fill="{}">{id}</text>"#,
            WIDTH - RIGHT - 4.0,
            COLORS[idx]
        );
    }
    let _ = writeln!(s, "</g>");
    s.push_str("</svg>\n");
    s
}
