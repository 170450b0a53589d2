//! Minimal standalone SVG bar and box charts. The plotted numbers are
//! embedded as CSV inside a leading comment so a chart can be diffed or
//! re-read without parsing geometry.

use std::fmt::Write;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 360.0;
const LEFT: f64 = 64.0;
const RIGHT: f64 = 16.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 72.0;
const PALETTE: [&str; 6] = ["#4e79a7", "#f28e2b", "#59a14f", "#e15759", "#76b7b2", "#b07aa1"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Comment text must not contain `--`.
fn comment_safe(s: &str) -> String {
    s.replace("--", "- -")
}

fn num(x: f64) -> String {
    format!("{x:.2}")
}

fn header(out: &mut String, title: &str, data: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(out, "<!-- data\n{}-->", comment_safe(data));
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="24" font-family="sans-serif" font-size="15" text-anchor="middle">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
}

/// Axis with ticks at five even steps of `[0, top]`.
fn axis(out: &mut String, top: f64, ylabel: &str) {
    let plot_h = HEIGHT - TOP - BOTTOM;
    let base = HEIGHT - BOTTOM;
    let _ = writeln!(
        out,
        r##"<line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{base}" stroke="#333"/><line x1="{LEFT}" y1="{base}" x2="{}" y2="{base}" stroke="#333"/>"##,
        WIDTH - RIGHT
    );
    for i in 0..=5 {
        let v = top * i as f64 / 5.0;
        let y = base - plot_h * i as f64 / 5.0;
        let _ = writeln!(
            out,
            r##"<line x1="{}" y1="{}" x2="{LEFT}" y2="{}" stroke="#333"/><text x="{}" y="{}" font-family="sans-serif" font-size="10" text-anchor="end">{}</text>"##,
            LEFT - 4.0,
            num(y),
            num(y),
            LEFT - 6.0,
            num(y + 3.0),
            format_tick(v)
        );
    }
    let _ = writeln!(
        out,
        r#"<text transform="translate(14,{}) rotate(-90)" font-family="sans-serif" font-size="11" text-anchor="middle">{}</text>"#,
        num(TOP + plot_h / 2.0),
        escape(ylabel)
    );
}

fn format_tick(v: f64) -> String {
    if v == 0.0 || (0.01..1000.0).contains(&v.abs()) {
        format!("{}", (v * 1000.0).round() / 1000.0)
    } else {
        format!("{v:.1e}")
    }
}

fn nice_top(max: f64) -> f64 {
    if !(max > 0.0) || !max.is_finite() {
        return 1.0;
    }
    let mag = 10f64.powf(max.log10().floor());
    for step in [1.0, 2.0, 2.5, 5.0, 10.0] {
        if step * mag >= max {
            return step * mag;
        }
    }
    10.0 * mag
}

fn x_label(out: &mut String, x: f64, label: &str) {
    let y = HEIGHT - BOTTOM + 14.0;
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" font-family="sans-serif" font-size="10" text-anchor="end" transform="rotate(-30 {} {})">{}</text>"#,
        num(x),
        num(y),
        num(x),
        num(y),
        escape(label)
    );
}

/// Grouped bar chart: one group per category, one bar per series.
pub fn bar_chart(title: &str, ylabel: &str, categories: &[String], series: &[(String, Vec<f64>)]) -> String {
    let mut data = String::from("category");
    for (name, _) in series {
        data.push(',');
        data.push_str(name);
    }
    data.push('\n');
    for (i, c) in categories.iter().enumerate() {
        data.push_str(c);
        for (_, vals) in series {
            let _ = write!(data, ",{}", dynpsn::fmt::float(vals[i]));
        }
        data.push('\n');
    }
    let max = series.iter().flat_map(|(_, v)| v.iter().copied()).fold(0.0, f64::max);
    let top = nice_top(max);
    let mut out = String::new();
    header(&mut out, title, &data);
    axis(&mut out, top, ylabel);

    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let group = plot_w / categories.len().max(1) as f64;
    let bar = group * 0.8 / series.len().max(1) as f64;
    for (i, c) in categories.iter().enumerate() {
        let x0 = LEFT + group * i as f64 + group * 0.1;
        for (s, (_, vals)) in series.iter().enumerate() {
            let h = (vals[i] / top).clamp(0.0, 1.0) * plot_h;
            let _ = writeln!(
                out,
                r#"<rect x="{}" y="{}" width="{}" height="{}" fill="{}"/>"#,
                num(x0 + bar * s as f64),
                num(HEIGHT - BOTTOM - h),
                num(bar * 0.95),
                num(h),
                PALETTE[s % PALETTE.len()]
            );
        }
        x_label(&mut out, x0 + group * 0.4, c);
    }
    if series.len() > 1 {
        for (s, (name, _)) in series.iter().enumerate() {
            let y = TOP + 4.0 + 14.0 * s as f64;
            let _ = writeln!(
                out,
                r#"<rect x="{}" y="{}" width="10" height="10" fill="{}"/><text x="{}" y="{}" font-family="sans-serif" font-size="10">{}</text>"#,
                num(WIDTH - RIGHT - 110.0),
                num(y),
                PALETTE[s % PALETTE.len()],
                num(WIDTH - RIGHT - 96.0),
                num(y + 9.0),
                escape(name)
            );
        }
    }
    out.push_str("</svg>\n");
    out
}

/// Five-number summary with linear interpolation between order statistics.
pub fn quartiles(values: &[f64]) -> [f64; 5] {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let q = |p: f64| {
        let pos = p * (v.len() - 1) as f64;
        let lo = pos.floor() as usize;
        let hi = pos.ceil() as usize;
        v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
    };
    [v[0], q(0.25), q(0.5), q(0.75), v[v.len() - 1]]
}

/// Box-and-whisker chart (whiskers at min and max), one box per group.
/// Groups without values are skipped.
pub fn box_chart(title: &str, ylabel: &str, groups: &[(String, Vec<f64>)]) -> String {
    let groups: Vec<&(String, Vec<f64>)> = groups.iter().filter(|g| !g.1.is_empty()).collect();
    let mut data = String::from("group,value\n");
    for (name, vals) in &groups {
        for v in vals {
            let _ = writeln!(data, "{name},{}", dynpsn::fmt::float(*v));
        }
    }
    let max = groups.iter().flat_map(|g| g.1.iter().copied()).fold(0.0, f64::max);
    let top = nice_top(max);
    let mut out = String::new();
    header(&mut out, title, &data);
    axis(&mut out, top, ylabel);
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let slot = plot_w / groups.len().max(1) as f64;
    let y = |v: f64| HEIGHT - BOTTOM - (v / top).clamp(0.0, 1.0) * plot_h;
    for (i, (name, vals)) in groups.iter().enumerate() {
        let [lo, q1, med, q3, hi] = quartiles(vals);
        let cx = LEFT + slot * (i as f64 + 0.5);
        let w = slot * 0.5;
        let color = PALETTE[i % PALETTE.len()];
        let _ = writeln!(
            out,
            r##"<line x1="{cx:.2}" y1="{}" x2="{cx:.2}" y2="{}" stroke="#333"/>"##,
            num(y(hi)),
            num(y(lo))
        );
        for v in [lo, hi] {
            let _ = writeln!(
                out,
                r##"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="#333"/>"##,
                num(cx - w / 4.0),
                num(y(v)),
                num(cx + w / 4.0),
                num(y(v))
            );
        }
        let _ = writeln!(
            out,
            r##"<rect x="{}" y="{}" width="{}" height="{}" fill="{color}" fill-opacity="0.6" stroke="#333"/>"##,
            num(cx - w / 2.0),
            num(y(q3)),
            num(w),
            num((y(q1) - y(q3)).max(0.5))
        );
        let _ = writeln!(
            out,
            r##"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="#000" stroke-width="2"/>"##,
            num(cx - w / 2.0),
            num(y(med)),
            num(cx + w / 2.0),
            num(y(med))
        );
        x_label(&mut out, cx, name);
    }
    out.push_str("</svg>\n");
    out
}
