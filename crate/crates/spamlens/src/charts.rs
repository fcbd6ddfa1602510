//! Minimal SVG line and grouped-bar charts. Output depends only on the
//! input values, so charts diff cleanly between runs.

use std::fmt::Write;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 64.0;
const RIGHT: f64 = 160.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 56.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

/// One named polyline.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn header(out: &mut String, title: &str, x_label: &str, y_label: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="22" text-anchor="middle" font-size="15">{}</text>"#,
        (LEFT + WIDTH - RIGHT) / 2.0,
        escape(title)
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
        (LEFT + WIDTH - RIGHT) / 2.0,
        HEIGHT - 14.0,
        escape(x_label)
    );
    let _ = writeln!(
        out,
        r#"<text x="16" y="{:.1}" text-anchor="middle" transform="rotate(-90 16 {:.1})">{}</text>"#,
        (TOP + HEIGHT - BOTTOM) / 2.0,
        (TOP + HEIGHT - BOTTOM) / 2.0,
        escape(y_label)
    );
}

fn legend(out: &mut String, names: &[&str]) {
    for (i, name) in names.iter().enumerate() {
        let y = TOP + 10.0 + 18.0 * i as f64;
        let x = WIDTH - RIGHT + 14.0;
        let _ = writeln!(
            out,
            r#"<rect x="{x:.1}" y="{:.1}" width="12" height="12" fill="{}"/><text x="{:.1}" y="{:.1}">{}</text>"#,
            y - 10.0,
            PALETTE[i % PALETTE.len()],
            x + 18.0,
            y,
            escape(name)
        );
    }
}

fn axes(out: &mut String, x_ticks: &[(f64, String)], y: (f64, f64)) {
    let (x0, x1, y0, y1) = (LEFT, WIDTH - RIGHT, TOP, HEIGHT - BOTTOM);
    let _ = writeln!(out, r#"<path d="M{x0:.1} {y0:.1} V{y1:.1} H{x1:.1}" fill="none" stroke="black"/>"#);
    for i in 0..=5 {
        let v = y.0 + (y.1 - y.0) * f64::from(i) / 5.0;
        let py = y1 - (y1 - y0) * f64::from(i) / 5.0;
        let _ = writeln!(
            out,
            r##"<line x1="{x0:.1}" y1="{py:.1}" x2="{x1:.1}" y2="{py:.1}" stroke="#ddd"/><text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"##,
            x0 - 6.0,
            py + 4.0,
            trim_number(v)
        );
    }
    for (px, label) in x_ticks {
        let _ = writeln!(
            out,
            r#"<text x="{px:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            y1 + 16.0,
            escape(label)
        );
    }
}

fn trim_number(v: f64) -> String {
    let s = format!("{v:.2}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s.is_empty() || s == "-" {
        "0".into()
    } else {
        s.to_string()
    }
}

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        (0.0, 1.0)
    } else if hi - lo < 1e-12 {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

/// Lines over shared axes. `x_range`/`y_range` default to the data range.
pub fn line_chart(
    title: &str,
    x_label: &str,
    y_label: &str,
    series: &[Series],
    x_range: Option<(f64, f64)>,
    y_range: Option<(f64, f64)>,
) -> String {
    let xs = x_range.unwrap_or_else(|| range(series.iter().flat_map(|s| s.points.iter().map(|p| p.0))));
    let ys = y_range.unwrap_or_else(|| range(series.iter().flat_map(|s| s.points.iter().map(|p| p.1))));
    let (x0, x1, y0, y1) = (LEFT, WIDTH - RIGHT, TOP, HEIGHT - BOTTOM);
    let px = |x: f64| x0 + (x - xs.0) / (xs.1 - xs.0) * (x1 - x0);
    let py = |y: f64| y1 - (y - ys.0) / (ys.1 - ys.0) * (y1 - y0);
    let mut out = String::new();
    header(&mut out, title, x_label, y_label);
    let ticks: Vec<(f64, String)> = (0..=5)
        .map(|i| {
            let v = xs.0 + (xs.1 - xs.0) * f64::from(i) / 5.0;
            (px(v), trim_number(v))
        })
        .collect();
    axes(&mut out, &ticks, ys);
    for (i, s) in series.iter().enumerate() {
        let mut d = String::new();
        for (j, (x, y)) in s.points.iter().filter(|p| p.0.is_finite() && p.1.is_finite()).enumerate() {
            let _ = write!(d, "{}{:.2} {:.2} ", if j == 0 { 'M' } else { 'L' }, px(*x), py(*y));
        }
        let _ = writeln!(
            out,
            r#"<path d="{}" fill="none" stroke="{}" stroke-width="2"/>"#,
            d.trim_end(),
            PALETTE[i % PALETTE.len()]
        );
    }
    let names: Vec<&str> = series.iter().map(|s| s.name.as_str()).collect();
    legend(&mut out, &names);
    out.push_str("</svg>\n");
    out
}

/// Grouped bars: one group per category, one bar per named series within
/// each group. `values[s][c]` is series `s` in category `c`.
pub fn bar_chart(
    title: &str,
    y_label: &str,
    categories: &[String],
    series_names: &[String],
    values: &[Vec<f64>],
    y_range: Option<(f64, f64)>,
) -> String {
    let ys = y_range.unwrap_or_else(|| {
        let (lo, hi) = range(values.iter().flatten().copied());
        (lo.min(0.0), hi.max(0.0))
    });
    let (x0, x1, y0, y1) = (LEFT, WIDTH - RIGHT, TOP, HEIGHT - BOTTOM);
    let py = |y: f64| y1 - (y.clamp(ys.0, ys.1) - ys.0) / (ys.1 - ys.0) * (y1 - y0);
    let group_w = (x1 - x0) / categories.len().max(1) as f64;
    let bar_w = group_w * 0.8 / series_names.len().max(1) as f64;
    let mut out = String::new();
    header(&mut out, title, "", y_label);
    let ticks: Vec<(f64, String)> = categories
        .iter()
        .enumerate()
        .map(|(c, name)| (x0 + group_w * (c as f64 + 0.5), name.clone()))
        .collect();
    axes(&mut out, &ticks, ys);
    let base = py(0.0_f64.clamp(ys.0, ys.1));
    for (s, row) in values.iter().enumerate() {
        for (c, v) in row.iter().enumerate() {
            if !v.is_finite() {
                continue;
            }
            let x = x0 + group_w * c as f64 + group_w * 0.1 + bar_w * s as f64;
            let top = py(*v).min(base);
            let h = (py(*v) - base).abs();
            let _ = writeln!(
                out,
                r#"<rect x="{x:.2}" y="{top:.2}" width="{bar_w:.2}" height="{h:.2}" fill="{}"><title>{} {}: {}</title></rect>"#,
                PALETTE[s % PALETTE.len()],
                escape(&categories[c]),
                escape(&series_names[s]),
                v
            );
        }
    }
    let names: Vec<&str> = series_names.iter().map(String::as_str).collect();
    legend(&mut out, &names);
    out.push_str("</svg>\n");
    out
}
