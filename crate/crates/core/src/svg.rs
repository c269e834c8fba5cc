//! Plain SVG output: line charts for training curves and a coverage heatmap
//! with an optional trajectory overlay. Output is byte-stable for identical
//! input.

use std::fmt::Write;

use crate::raytrace::CoverageMap;
use crate::rlenv::Cell;
use crate::scene::OccupancyGrid;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 20.0;
const MARGIN_T: f64 = 40.0;
const MARGIN_B: f64 = 50.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn header(out: &mut String, w: f64, h: f64, seed: Option<u64>) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
    );
    if let Some(s) = seed {
        let _ = writeln!(out, "<!-- raydar seed={s} -->");
    }
}

/// Round limits outward to a tidy step so ticks land on short numbers.
fn nice_range(lo: f64, hi: f64) -> (f64, f64, f64) {
    let (lo, hi) = if lo == hi { (lo - 1.0, hi + 1.0) } else { (lo, hi) };
    let raw = (hi - lo) / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .into_iter()
        .map(|m| m * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag);
    ((lo / step).floor() * step, (hi / step).ceil() * step, step)
}

fn tick_label(v: f64) -> String {
    if v.abs() >= 1e5 || (v != 0.0 && v.abs() < 1e-2) {
        format!("{v:.1e}")
    } else if v.fract() == 0.0 {
        format!("{v:.0}")
    } else {
        format!("{v:.2}")
    }
}

/// Polyline of `ys` against `0, 1, 2, …`.
pub fn line_chart(title: &str, x_label: &str, y_label: &str, ys: &[f64], seed: Option<u64>) -> String {
    let mut out = String::new();
    header(&mut out, WIDTH, HEIGHT, seed);
    let _ = writeln!(out, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="24" font-family="sans-serif" font-size="16" text-anchor="middle">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
    let pw = WIDTH - MARGIN_L - MARGIN_R;
    let ph = HEIGHT - MARGIN_T - MARGIN_B;
    let finite: Vec<f64> = ys.iter().copied().filter(|v| v.is_finite()).collect();
    let lo = finite.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = finite.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (y0, y1, ystep) = if finite.is_empty() { nice_range(0.0, 1.0) } else { nice_range(lo, hi) };
    let xmax = (ys.len().max(2) - 1) as f64;
    let px = |k: f64| MARGIN_L + k / xmax * pw;
    let py = |v: f64| MARGIN_T + (y1 - v) / (y1 - y0) * ph;

    let _ = writeln!(
        out,
        r##"<g stroke="#888" stroke-width="1"><line x1="{l}" y1="{b}" x2="{r}" y2="{b}"/><line x1="{l}" y1="{t}" x2="{l}" y2="{b}"/></g>"##,
        l = MARGIN_L,
        r = MARGIN_L + pw,
        t = MARGIN_T,
        b = MARGIN_T + ph
    );
    let mut v = y0;
    while v <= y1 + 0.5 * ystep {
        let y = py(v);
        let _ = writeln!(
            out,
            r##"<line x1="{MARGIN_L}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#ddd"/><text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="11" text-anchor="end">{}</text>"##,
            MARGIN_L + pw,
            MARGIN_L - 6.0,
            y + 4.0,
            tick_label(v)
        );
        v += ystep;
    }
    let (_, _, xstep) = nice_range(0.0, xmax);
    let mut k = 0.0;
    while k <= xmax + 1e-9 {
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="11" text-anchor="middle">{}</text>"#,
            px(k),
            MARGIN_T + ph + 16.0,
            tick_label(k)
        );
        k += xstep;
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="12" text-anchor="middle">{}</text>"#,
        MARGIN_L + pw / 2.0,
        HEIGHT - 10.0,
        escape(x_label)
    );
    let _ = writeln!(
        out,
        r#"<text x="16" y="{:.2}" font-family="sans-serif" font-size="12" text-anchor="middle" transform="rotate(-90 16 {:.2})">{}</text>"#,
        MARGIN_T + ph / 2.0,
        MARGIN_T + ph / 2.0,
        escape(y_label)
    );
    let points: Vec<String> = ys
        .iter()
        .enumerate()
        .filter(|(_, v)| v.is_finite())
        .map(|(k, &v)| format!("{:.2},{:.2}", px(k as f64), py(v)))
        .collect();
    let _ = writeln!(
        out,
        r##"<polyline fill="none" stroke="#1f77b4" stroke-width="1.5" points="{}"/>"##,
        points.join(" ")
    );
    out.push_str("</svg>\n");
    out
}

/// Blue through green to yellow over `t ∈ [0, 1]`.
fn color(t: f64) -> String {
    let t = t.clamp(0.0, 1.0);
    let (r, g, b) = if t < 0.5 {
        let s = t / 0.5;
        (30.0 + 20.0 * s, 60.0 + 140.0 * s, 160.0 - 60.0 * s)
    } else {
        let s = (t - 0.5) / 0.5;
        (50.0 + 200.0 * s, 200.0 + 30.0 * s, 100.0 - 70.0 * s)
    };
    format!("#{:02x}{:02x}{:02x}", r as u8, g as u8, b as u8)
}

/// One square per grid cell, `j` increasing upward, colored by received
/// power. Dead cells are gray, blocked cells black; the trajectory is drawn
/// through cell centers.
pub fn heatmap(
    map: &CoverageMap,
    occupancy: Option<&OccupancyGrid>,
    path: Option<&[Cell]>,
    seed: Option<u64>,
) -> String {
    let g = &map.grid;
    let px = (600.0 / g.nx.max(g.ny) as f64).clamp(1.0, 24.0);
    let (w, h) = (g.nx as f64 * px, g.ny as f64 * px);
    let mut out = String::new();
    header(&mut out, w, h, seed);
    let powers: Vec<f64> = (0..g.len())
        .filter_map(|k| map.received_power_dbm(k % g.nx, k / g.nx))
        .collect();
    let lo = powers.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = powers.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = if hi > lo { hi - lo } else { 1.0 };
    if powers.is_empty() {
        let _ = writeln!(out, "<!-- no live cells -->");
    } else {
        let _ = writeln!(out, "<!-- received power {lo:.2} to {hi:.2} dBm -->");
    }
    for (i, j) in g.cells() {
        let fill = if occupancy.is_some_and(|o| o.is_blocked(i, j)) {
            "#000000".to_string()
        } else {
            match map.received_power_dbm(i, j) {
                Some(p) => color((p - lo) / span),
                None => "#9a9a9a".to_string(),
            }
        };
        let _ = writeln!(
            out,
            r#"<rect x="{:.2}" y="{:.2}" width="{px:.2}" height="{px:.2}" fill="{fill}"/>"#,
            i as f64 * px,
            h - (j + 1) as f64 * px
        );
    }
    if let Some(cells) = path.filter(|c| !c.is_empty()) {
        let pts: Vec<String> = cells
            .iter()
            .map(|&(i, j)| format!("{:.2},{:.2}", (i as f64 + 0.5) * px, h - (j as f64 + 0.5) * px))
            .collect();
        let _ = writeln!(
            out,
            r##"<polyline fill="none" stroke="#d62728" stroke-width="{:.2}" points="{}"/>"##,
            (px / 4.0).max(1.0),
            pts.join(" ")
        );
    }
    out.push_str("</svg>\n");
    out
}
