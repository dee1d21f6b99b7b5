//! Static SVG learning curves, one file per environment.
//!
//! Each training log contributes a light raw-return path and a dark smoothed
//! path in its mode's color family. A mode with several seeds also gets a
//! dashed median of the smoothed curves.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::curves::{median_curve, moving_average};
use crate::discover::RunSource;
use crate::error::{IoContext, Result};

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;

/// (light, dark) stroke colors.
fn palette(mode: &str) -> (&'static str, &'static str) {
    match mode {
        "abq_max_mean" => ("#9ecae1", "#08519c"),
        "bdq_branch_mean" => ("#fdae6b", "#a63603"),
        "none" => ("#a1d99b", "#006d2c"),
        _ => ("#cccccc", "#404040"),
    }
}

/// One curve: mode label plus per-episode returns.
#[derive(Debug, Clone)]
pub struct Series {
    pub mode: String,
    pub returns: Vec<f64>,
}

fn nice_ticks(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let span = (hi - lo).max(1e-12);
    let raw = span / count as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() * step;
    let mut out = Vec::new();
    let mut t = first;
    while t <= hi + step * 1e-9 {
        out.push(if t.abs() < step * 1e-9 { 0.0 } else { t });
        t += step;
    }
    out
}

fn fmt_tick(v: f64) -> String {
    if v.fract() == 0.0 {
        format!("{}", v as i64)
    } else {
        format!("{v:.2}")
    }
}

/// Renders one environment's curves. Identical inputs give identical text.
pub fn render_svg(title: &str, series: &[Series], window: usize) -> String {
    let smoothed: Vec<Vec<f64>> = series.iter().map(|s| moving_average(&s.returns, window)).collect();

    let mut modes: Vec<&str> = Vec::new();
    for s in series {
        if !modes.contains(&s.mode.as_str()) {
            modes.push(&s.mode);
        }
    }
    let medians: Vec<(&str, Vec<f64>)> = modes
        .iter()
        .filter_map(|m| {
            let group: Vec<Vec<f64>> = series
                .iter()
                .zip(&smoothed)
                .filter(|(s, _)| s.mode == *m)
                .map(|(_, c)| c.clone())
                .collect();
            (group.len() > 1).then(|| (*m, median_curve(&group)))
        })
        .collect();

    let len = series.iter().map(|s| s.returns.len()).max().unwrap_or(0).max(1);
    let (mut lo, mut hi) = series
        .iter()
        .flat_map(|s| s.returns.iter().copied())
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        (lo, hi) = (0.0, 1.0);
    }
    if hi - lo < 1e-9 {
        lo -= 1.0;
        hi += 1.0;
    }
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let x = |k: usize| LEFT + if len > 1 { k as f64 / (len - 1) as f64 * plot_w } else { 0.0 };
    let y = |v: f64| TOP + (hi - v.clamp(lo, hi)) / (hi - lo) * plot_h;
    let path = |values: &[f64]| {
        let mut d = String::new();
        for (k, v) in values.iter().enumerate() {
            let _ = write!(d, "{}{:.2},{:.2}", if k == 0 { "M" } else { " L" }, x(k), y(*v));
        }
        d
    };

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="24" text-anchor="middle" font-size="16">{}</text>"#,
        LEFT + plot_w / 2.0,
        escape(title)
    );

    // Axes and ticks.
    let _ = writeln!(
        svg,
        r##"<g stroke="#000000" stroke-width="1"><line x1="{LEFT}" y1="{b:.2}" x2="{r:.2}" y2="{b:.2}"/><line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{b:.2}"/></g>"##,
        b = TOP + plot_h,
        r = LEFT + plot_w
    );
    for t in nice_ticks(lo, hi, 5) {
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            LEFT - 6.0,
            y(t) + 4.0,
            fmt_tick(t)
        );
    }
    for t in nice_ticks(1.0, len as f64, 5) {
        let k = (t as usize).saturating_sub(1);
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            x(k),
            TOP + plot_h + 18.0,
            fmt_tick(t)
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">Episode</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 16.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="20" y="{:.2}" text-anchor="middle" transform="rotate(-90 20 {:.2})">Return (window {window})</text>"#,
        TOP + plot_h / 2.0,
        TOP + plot_h / 2.0
    );

    for s in series {
        let (light, _) = palette(&s.mode);
        let _ = writeln!(
            svg,
            r#"<path class="raw" d="{}" fill="none" stroke="{light}" stroke-width="1"/>"#,
            path(&s.returns)
        );
    }
    for (s, sm) in series.iter().zip(&smoothed) {
        let (_, dark) = palette(&s.mode);
        let _ = writeln!(
            svg,
            r#"<path class="smoothed" d="{}" fill="none" stroke="{dark}" stroke-width="1.5"/>"#,
            path(sm)
        );
    }
    for (m, curve) in &medians {
        let (_, dark) = palette(m);
        let _ = writeln!(
            svg,
            r#"<path class="median" d="{}" fill="none" stroke="{dark}" stroke-width="2.5" stroke-dasharray="6 3"/>"#,
            path(curve)
        );
    }

    // Legend.
    let lx = WIDTH - RIGHT + 16.0;
    for (i, m) in modes.iter().enumerate() {
        let (light, dark) = palette(m);
        let ly = TOP + 10.0 + i as f64 * 22.0;
        let _ = writeln!(
            svg,
            r#"<line x1="{lx}" y1="{ly}" x2="{:.2}" y2="{ly}" stroke="{light}" stroke-width="4"/><line x1="{lx}" y1="{ly}" x2="{:.2}" y2="{ly}" stroke="{dark}" stroke-width="1.5"/><text x="{:.2}" y="{:.2}">{}</text>"#,
            lx + 24.0,
            lx + 24.0,
            lx + 30.0,
            ly + 4.0,
            escape(m)
        );
    }
    svg.push_str("</svg>\n");
    svg
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Writes `<out_dir>/<env>.svg` for every environment among `sources` and
/// returns the written paths in environment order.
pub fn render_curves(sources: &[RunSource], window: usize, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let mut by_env: BTreeMap<&str, Vec<Series>> = BTreeMap::new();
    for src in sources {
        let records = crate::csvlog::load(&src.train_csv)?;
        by_env.entry(&src.env).or_default().push(Series {
            mode: src.mode.clone(),
            returns: records.iter().map(|r| r.cumulative_reward).collect(),
        });
    }
    std::fs::create_dir_all(out_dir).at(out_dir)?;
    let mut written = Vec::new();
    for (env, mut series) in by_env {
        // Stable grouping: modes in their canonical order, seeds in input order.
        series.sort_by_key(|s| mode_rank(&s.mode));
        let file = out_dir.join(format!("{env}.svg"));
        std::fs::write(&file, render_svg(env, &series, window)).at(&file)?;
        written.push(file);
    }
    Ok(written)
}

fn mode_rank(mode: &str) -> usize {
    match mode {
        "abq_max_mean" => 0,
        "bdq_branch_mean" => 1,
        "none" => 2,
        _ => 3,
    }
}
