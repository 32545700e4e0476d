//! Line-and-marker SVG of a sweep, built from CSV rows alone.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::sweep::{fmt_sig, SweepRow};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 190.0;
const MARGIN_TOP: f64 = 30.0;
const MARGIN_BOTTOM: f64 = 55.0;

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        let w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
        MARGIN_LEFT + (x - self.x0) / (self.x1 - self.x0) * w
    }

    fn py(&self, y: f64) -> f64 {
        let h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
        HEIGHT - MARGIN_BOTTOM - (y - self.y0) / (self.y1 - self.y0) * h
    }
}

fn nice_ticks(lo: f64, hi: f64, target: usize) -> Vec<f64> {
    let span = (hi - lo).max(1e-12);
    let raw = span / target as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| span / s <= target as f64)
        .unwrap_or(10.0 * mag);
    let mut t = (lo / step).ceil() * step;
    let mut out = Vec::new();
    while t <= hi + 1e-9 * step {
        out.push(if t.abs() < 1e-12 * step { 0.0 } else { t });
        t += step;
    }
    out
}

fn polyline(points: &[(f64, f64)], frame: &Frame) -> String {
    points
        .iter()
        .map(|&(x, y)| format!("{:.2},{:.2}", frame.px(x), frame.py(y)))
        .collect::<Vec<_>>()
        .join(" ")
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Mean ± std of the maximal entropy against `L`, one series per
/// (preset, boundary, beta), with the bound drawn dashed. Failed points
/// are skipped.
pub fn render_svg(rows: &[SweepRow], title: &str) -> String {
    let ok: Vec<&SweepRow> = rows.iter().filter(|r| r.mean_max_entropy.is_some()).collect();

    // keyed on the bit pattern, which orders non-negative betas numerically
    let mut series: BTreeMap<(String, String, u64), Vec<&SweepRow>> = BTreeMap::new();
    for r in &ok {
        series
            .entry((r.preset.clone(), r.boundary.to_string(), r.beta.to_bits()))
            .or_default()
            .push(r);
    }
    let mut bound: BTreeMap<usize, f64> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.bound.is_finite()) {
        bound.insert(r.l, r.bound);
    }

    let mut ys: Vec<f64> = bound.values().copied().collect();
    for r in &ok {
        let m = r.mean_max_entropy.unwrap_or(0.0);
        let s = r.std_dev.unwrap_or(0.0);
        ys.extend([m - s, m + s]);
    }
    let ls: Vec<f64> = rows.iter().map(|r| r.l as f64).collect();
    let (mut x0, mut x1) = bounds_of(&ls).unwrap_or((0.0, 1.0));
    let (mut y0, mut y1) = bounds_of(&ys).unwrap_or((0.0, 1.0));
    x0 -= 0.5;
    x1 += 0.5;
    let pad = ((y1 - y0) * 0.08).max(0.05);
    y0 = (y0 - pad).max(0.0);
    y1 += pad;
    let frame = Frame { x0, x1, y0, y1 };

    let mut svg = String::new();
    open_svg(&mut svg, title, &frame, "L", "max entanglement entropy (nats)", true);

    let mut legend: Vec<(String, &str, bool)> = Vec::new();
    if !bound.is_empty() {
        let pts: Vec<(f64, f64)> = bound.iter().map(|(&l, &b)| (l as f64, b)).collect();
        let _ = writeln!(
            svg,
            r#"<polyline points="{}" fill="none" stroke="black" stroke-dasharray="6,4"/>"#,
            polyline(&pts, &frame)
        );
        legend.push(("bound".into(), "black", true));
    }

    for (i, ((preset, boundary, beta_bits), pts)) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let mut sorted = pts.clone();
        sorted.sort_by_key(|r| r.l);
        let line: Vec<(f64, f64)> = sorted
            .iter()
            .map(|r| (r.l as f64, r.mean_max_entropy.unwrap_or(0.0)))
            .collect();
        let _ = writeln!(
            svg,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
            polyline(&line, &frame)
        );
        for r in &sorted {
            let m = r.mean_max_entropy.unwrap_or(0.0);
            let s = r.std_dev.unwrap_or(0.0);
            let x = frame.px(r.l as f64);
            let _ = writeln!(
                svg,
                r#"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="{color}"/><line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{color}"/><line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{color}"/><circle cx="{x:.2}" cy="{:.2}" r="3.5" fill="{color}"/>"#,
                frame.py(m - s),
                frame.py(m + s),
                x - 4.0,
                frame.py(m - s),
                x + 4.0,
                frame.py(m - s),
                x - 4.0,
                frame.py(m + s),
                x + 4.0,
                frame.py(m + s),
                frame.py(m),
            );
        }
        let beta = f64::from_bits(*beta_bits);
        legend.push((
            format!("{preset} ({boundary}), β = {}", trim_number(beta)),
            color,
            false,
        ));
    }
    close_svg(&mut svg, &legend);
    svg
}

/// Curves against time with the bound as a dashed horizontal line.
pub fn render_trace_svg(title: &str, taus: &[f64], curves: &[(&str, Vec<f64>)], bound: f64) -> String {
    let mut ys: Vec<f64> = curves.iter().flat_map(|(_, v)| v.iter().copied()).collect();
    ys.push(bound);
    let (x0, x1) = bounds_of(taus).unwrap_or((0.0, 1.0));
    let (y0, y1) = bounds_of(&ys).unwrap_or((0.0, 1.0));
    let pad = ((y1 - y0) * 0.08).max(0.05);
    let frame = Frame {
        x0,
        x1,
        y0: (y0 - pad).max(0.0),
        y1: y1 + pad,
    };
    let (left, right) = (frame.px(frame.x0), frame.px(frame.x1));
    let mut svg = String::new();
    open_svg(&mut svg, title, &frame, "τ", "entropy (nats)", false);
    let by = frame.py(bound);
    let _ = writeln!(
        svg,
        r#"<line x1="{left:.2}" y1="{by:.2}" x2="{right:.2}" y2="{by:.2}" stroke="black" stroke-dasharray="6,4"/>"#
    );
    let mut legend = vec![("bound".to_string(), "black", true)];
    for (i, (label, values)) in curves.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let pts: Vec<(f64, f64)> = taus.iter().copied().zip(values.iter().copied()).collect();
        let _ = writeln!(
            svg,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.2"/>"#,
            polyline(&pts, &frame)
        );
        legend.push((label.to_string(), color, false));
    }
    close_svg(&mut svg, &legend);
    svg
}

fn open_svg(svg: &mut String, title: &str, frame: &Frame, x_label: &str, y_label: &str, integer_x: bool) {
    let (left, right) = (frame.px(frame.x0), frame.px(frame.x1));
    let (bottom, top) = (frame.py(frame.y0), frame.py(frame.y1));
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="18" text-anchor="middle" font-size="14">{}</text>"#,
        (left + right) / 2.0,
        escape(title)
    );
    let _ = writeln!(
        svg,
        r#"<path d="M{left:.2},{top:.2} V{bottom:.2} H{right:.2}" fill="none" stroke="black"/>"#
    );
    for t in nice_ticks(frame.x0, frame.x1, 8) {
        if integer_x && t.fract() != 0.0 {
            continue;
        }
        let x = frame.px(t);
        let _ = writeln!(
            svg,
            r#"<line x1="{x:.2}" y1="{bottom:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            bottom + 5.0,
            bottom + 19.0,
            trim_number(t)
        );
    }
    for t in nice_ticks(frame.y0, frame.y1, 6) {
        let y = frame.py(t);
        let _ = writeln!(
            svg,
            r#"<line x1="{:.2}" y1="{y:.2}" x2="{left:.2}" y2="{y:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            left - 5.0,
            left - 8.0,
            y + 4.0,
            trim_number(t)
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
        (left + right) / 2.0,
        HEIGHT - 15.0,
        escape(x_label)
    );
    let _ = writeln!(
        svg,
        r#"<text transform="translate(18,{:.1}) rotate(-90)" text-anchor="middle">{}</text>"#,
        (top + bottom) / 2.0,
        escape(y_label)
    );
}

/// Legend entries are (label, colour, dashed).
fn close_svg(svg: &mut String, legend: &[(String, &str, bool)]) {
    let lx = WIDTH - MARGIN_RIGHT + 15.0;
    for (i, (label, color, dashed)) in legend.iter().enumerate() {
        let y = MARGIN_TOP + 10.0 + 20.0 * i as f64;
        let dash = if *dashed { r#" stroke-dasharray="6,4""# } else { "" };
        let _ = writeln!(
            svg,
            r#"<line x1="{lx:.1}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="{color}" stroke-width="1.5"{dash}/><text x="{:.1}" y="{:.1}" font-size="11">{}</text>"#,
            lx + 22.0,
            lx + 27.0,
            y + 4.0,
            escape(label)
        );
    }
    svg.push_str("</svg>\n");
}

fn bounds_of(v: &[f64]) -> Option<(f64, f64)> {
    let finite = v.iter().copied().filter(|x| x.is_finite());
    let lo = finite.clone().fold(f64::INFINITY, f64::min);
    let hi = finite.fold(f64::NEG_INFINITY, f64::max);
    if lo > hi {
        None
    } else if lo == hi {
        Some((lo - 0.5, hi + 0.5))
    } else {
        Some((lo, hi))
    }
}

fn trim_number(x: f64) -> String {
    let s = fmt_sig(x);
    if s.contains('e') || !s.contains('.') {
        return s;
    }
    let s = s.trim_end_matches('0').trim_end_matches('.');
    s.to_string()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::Boundary;

    fn row(l: usize, beta: f64, mean: Option<f64>) -> SweepRow {
        SweepRow {
            l,
            m: 4,
            n: 3,
            beta,
            preset: "nonintegrable".into(),
            boundary: Boundary::Open,
            mean_max_entropy: mean,
            std_dev: mean.map(|_| 0.01),
            bound: (l as f64).ln(),
            mean_n_a_at_max: mean.map(|_| 1.5),
            seeds: 6,
            error: mean.is_none().then(|| "boom".to_string()),
        }
    }

    #[test]
    fn renders_series_and_bound() {
        let rows = vec![
            row(8, 0.01, Some(2.30)),
            row(9, 0.01, Some(2.39)),
            row(8, 2.0, Some(0.8)),
            row(9, 2.0, None),
        ];
        let svg = render_svg(&rows, "a < b");
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert!(svg.contains("stroke-dasharray"));
        assert!(svg.contains("β = 0.01"));
        assert!(svg.contains("β = 2"));
        assert!(svg.contains("a &lt; b"));
        assert_eq!(svg.matches("<circle").count(), 3);
    }

    #[test]
    fn empty_input_still_valid() {
        let svg = render_svg(&[], "empty");
        assert!(svg.contains("</svg>"));
    }

    #[test]
    fn trace_plot() {
        let taus = [0.0, 0.5, 1.0];
        let svg = render_trace_svg("t", &taus, &[("S1", vec![0.1, 0.5, 0.7])], 1.0);
        assert_eq!(svg.matches("<polyline").count(), 1);
        assert!(svg.contains("stroke-dasharray"));
    }

    #[test]
    fn ticks() {
        let t = nice_ticks(0.0, 1.0, 5);
        assert_eq!(t.len(), 6);
        assert!((t[5] - 1.0).abs() < 1e-12);
        assert_eq!(nice_ticks(8.0, 10.0, 8).first(), Some(&8.0));
        assert_eq!(trim_number(2.5), "2.5");
        assert_eq!(trim_number(2.0), "2");
    }
}
