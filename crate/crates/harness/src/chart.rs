//! Best-so-far line charts as standalone SVG.

use std::fmt::Write as _;

use crate::output::SummaryRow;

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 500.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 180.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 50.0;
const COLORS: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
];

/// Strategies in first-appearance order with their rows sorted by
/// iteration.
fn group(rows: &[SummaryRow]) -> Vec<(String, Vec<&SummaryRow>)> {
    let mut groups: Vec<(String, Vec<&SummaryRow>)> = Vec::new();
    for r in rows {
        match groups.iter_mut().find(|(s, _)| *s == r.strategy) {
            Some((_, g)) => g.push(r),
            None => groups.push((r.strategy.clone(), vec![r])),
        }
    }
    for (_, g) in &mut groups {
        g.sort_by_key(|r| r.iter);
    }
    groups
}

fn nice_step(span: f64) -> f64 {
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let norm = raw / mag;
    let step = if norm < 1.5 {
        1.0
    } else if norm < 3.0 {
        2.0
    } else if norm < 7.0 {
        5.0
    } else {
        10.0
    };
    step * mag
}

/// Mean best-so-far against iteration, one polyline per strategy with a
/// shaded band of one standard error. `rows` must be non-empty.
pub fn render_svg(rows: &[SummaryRow], title: &str) -> String {
    assert!(!rows.is_empty(), "render_svg needs at least one row");
    let groups = group(rows);
    let max_iter = rows.iter().map(|r| r.iter).max().unwrap_or(0).max(1) as f64;
    let mut lo = rows.iter().map(|r| r.mean - r.std_err).fold(f64::INFINITY, f64::min);
    let mut hi = rows.iter().map(|r| r.mean + r.std_err).fold(f64::NEG_INFINITY, f64::max);
    if hi - lo < 1e-12 {
        lo -= 0.5;
        hi += 0.5;
    }
    let pad = 0.05 * (hi - lo);
    lo -= pad;
    hi += pad;

    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let sx = |i: f64| LEFT + i / max_iter * plot_w;
    let sy = |v: f64| TOP + (hi - v) / (hi - lo) * plot_h;

    let mut svg = String::new();
    writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    )
    .unwrap();
    writeln!(svg, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#).unwrap();
    writeln!(svg, r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#, LEFT + plot_w / 2.0, escape(title)).unwrap();
    writeln!(
        svg,
        r#"<rect x="{LEFT}" y="{TOP}" width="{plot_w}" height="{plot_h}" fill="none" stroke="black"/>"#
    )
    .unwrap();

    let ystep = nice_step(hi - lo);
    let mut v = (lo / ystep).ceil() * ystep;
    while v <= hi {
        let y = sy(v);
        writeln!(svg, r##"<line x1="{LEFT}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#dddddd"/>"##, LEFT + plot_w).unwrap();
        writeln!(svg, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#, LEFT - 6.0, y + 4.0, tick_label(v, ystep)).unwrap();
        v += ystep;
    }
    let xstep = nice_step(max_iter).max(1.0);
    let mut i = 0.0;
    while i <= max_iter {
        let x = sx(i);
        writeln!(svg, r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{i}</text>"#, TOP + plot_h + 18.0).unwrap();
        i += xstep;
    }
    writeln!(svg, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">iteration</text>"#, LEFT + plot_w / 2.0, HEIGHT - 10.0).unwrap();
    writeln!(
        svg,
        r#"<text x="20" y="{:.2}" text-anchor="middle" transform="rotate(-90 20 {:.2})">best so far</text>"#,
        TOP + plot_h / 2.0,
        TOP + plot_h / 2.0
    )
    .unwrap();

    for (k, (name, g)) in groups.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let upper = g.iter().map(|r| format!("{:.2},{:.2}", sx(r.iter as f64), sy(r.mean + r.std_err)));
        let lower = g.iter().rev().map(|r| format!("{:.2},{:.2}", sx(r.iter as f64), sy(r.mean - r.std_err)));
        let band: Vec<String> = upper.chain(lower).collect();
        writeln!(svg, r#"<polygon points="{}" fill="{color}" fill-opacity="0.2" stroke="none"/>"#, band.join(" ")).unwrap();
        let line: Vec<String> = g.iter().map(|r| format!("{:.2},{:.2}", sx(r.iter as f64), sy(r.mean))).collect();
        writeln!(svg, r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#, line.join(" ")).unwrap();
        let ly = TOP + 10.0 + 20.0 * k as f64;
        let lx = LEFT + plot_w + 15.0;
        writeln!(svg, r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/>"#, lx + 20.0).unwrap();
        writeln!(svg, r#"<text x="{}" y="{}">{}</text>"#, lx + 26.0, ly + 4.0, escape(name)).unwrap();
    }
    svg.push_str("</svg>\n");
    svg
}

fn tick_label(v: f64, step: f64) -> String {
    let decimals = if step >= 1.0 { 0 } else { (-step.log10().floor()) as usize };
    let s = format!("{v:.decimals$}");
    // avoid "-0"
    if s.trim_start_matches('-').chars().all(|c| c == '0' || c == '.') {
        s.trim_start_matches('-').to_string()
    } else {
        s
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(strategy: &str, iter: usize, mean: f64) -> SummaryRow {
        SummaryRow { strategy: strategy.into(), iter, mean, std_err: 0.1, n: 2 }
    }

    #[test]
    fn one_strategy_two_points() {
        let svg = render_svg(&[row("bomi", 0, 1.0), row("bomi", 1, 2.0)], "t");
        assert_eq!(svg.matches("<polyline").count(), 1);
        assert_eq!(svg.matches("<polygon").count(), 1);
        let line = svg.lines().find(|l| l.starts_with("<polyline")).unwrap();
        let points = line.split('"').nth(1).unwrap();
        assert_eq!(points.split(' ').count(), 2);
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
    }

    #[test]
    fn deterministic_and_grouped() {
        let rows = [row("a", 1, 1.0), row("b", 0, 0.0), row("a", 0, 0.5), row("b", 1, 0.2)];
        assert_eq!(render_svg(&rows, "x"), render_svg(&rows, "x"));
        let g = group(&rows);
        assert_eq!(g.len(), 2);
        assert_eq!(g[0].1.iter().map(|r| r.iter).collect::<Vec<_>>(), [0, 1]);
    }

    #[test]
    fn flat_series_renders() {
        let rows = [SummaryRow { strategy: "a".into(), iter: 0, mean: 3.0, std_err: 0.0, n: 1 }];
        let svg = render_svg(&rows, "flat");
        assert!(!svg.contains("NaN") && !svg.contains("inf"));
    }

    #[test]
    fn ticks() {
        assert_eq!(nice_step(10.0), 2.0);
        assert_eq!(nice_step(80.0), 20.0);
        assert_eq!(tick_label(-0.0, 0.5), "0.0");
        assert_eq!(tick_label(2.5, 0.5), "2.5");
    }
}
