//! Line charts of mean cumulative reward per episode, as standalone SVG.

use std::fmt::Write as _;

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 200.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 50.0;
const MAX_POINTS: usize = 400;
const LOG_FLOOR: f64 = 0.01;
const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    Linear,
    Log,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Renders one polyline per `(label, series)`; the x axis is the episode
/// number (1-based) and the y axis the series value.
pub fn render_chart(title: &str, series: &[(&str, &[f64])], scale: Scale) -> String {
    let episodes = series.iter().map(|(_, s)| s.len()).max().unwrap_or(0).max(1);
    let y_max = series
        .iter()
        .flat_map(|(_, s)| s.iter().copied())
        .fold(0.0f64, f64::max)
        .max(1.0);
    let transform = |y: f64| match scale {
        Scale::Linear => y,
        Scale::Log => y.max(LOG_FLOOR).log10(),
    };
    let (lo, hi) = match scale {
        Scale::Linear => (0.0, y_max),
        Scale::Log => (LOG_FLOOR.log10(), y_max.log10().ceil().max(0.0)),
    };
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let px = |episode: f64| LEFT + plot_w * (episode - 1.0) / ((episodes as f64 - 1.0).max(1.0));
    let py = |y: f64| TOP + plot_h * (1.0 - (transform(y) - lo) / (hi - lo));

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(out, r#"<text x="{}" y="18" text-anchor="middle" font-size="14">{}</text>"#, LEFT + plot_w / 2.0, escape(title));
    let _ = writeln!(
        out,
        r#"<path d="M{LEFT} {TOP} V{} H{}" fill="none" stroke="black"/>"#,
        TOP + plot_h,
        LEFT + plot_w
    );

    let ticks: Vec<f64> = match scale {
        Scale::Linear => (0..=5).map(|i| y_max * i as f64 / 5.0).collect(),
        Scale::Log => (lo as i32..=hi as i32).map(|e| 10f64.powi(e)).collect(),
    };
    for tick in ticks {
        let y = py(tick);
        let _ = writeln!(out, r##"<line x1="{}" y1="{y:.2}" x2="{LEFT}" y2="{y:.2}" stroke="black"/>"##, LEFT - 4.0);
        let _ = writeln!(out, r#"<text x="{}" y="{:.2}" text-anchor="end">{}</text>"#, LEFT - 6.0, y + 4.0, tick_label(tick));
    }
    for i in 0..=4 {
        let episode = 1.0 + (episodes as f64 - 1.0) * i as f64 / 4.0;
        let x = px(episode);
        let _ = writeln!(out, r#"<text x="{x:.2}" y="{}" text-anchor="middle">{}</text>"#, TOP + plot_h + 16.0, episode.round());
    }
    let _ = writeln!(out, r#"<text x="{}" y="{}" text-anchor="middle">episode</text>"#, LEFT + plot_w / 2.0, HEIGHT - 10.0);

    for (i, (label, values)) in series.iter().enumerate() {
        let colour = PALETTE[i % PALETTE.len()];
        if !values.is_empty() {
            let stride = values.len().div_ceil(MAX_POINTS);
            let mut points: Vec<usize> = (0..values.len()).step_by(stride).collect();
            if points.last() != Some(&(values.len() - 1)) {
                points.push(values.len() - 1);
            }
            let coords: Vec<String> = points
                .iter()
                .map(|&k| format!("{:.2},{:.2}", px(k as f64 + 1.0), py(values[k])))
                .collect();
            let _ = writeln!(
                out,
                r#"<polyline fill="none" stroke="{colour}" stroke-width="1.5" points="{}"/>"#,
                coords.join(" ")
            );
        }
        let ly = TOP + 14.0 + 18.0 * i as f64;
        let lx = LEFT + plot_w + 12.0;
        let _ = writeln!(out, r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{colour}" stroke-width="3"/>"#, lx + 20.0);
        let _ = writeln!(out, r#"<text x="{}" y="{}">{}</text>"#, lx + 26.0, ly + 4.0, escape(label));
    }
    out.push_str("</svg>\n");
    out
}

fn tick_label(v: f64) -> String {
    if v >= 1.0 || v == 0.0 {
        format!("{}", v.round())
    } else {
        format!("{v}")
    }
}
