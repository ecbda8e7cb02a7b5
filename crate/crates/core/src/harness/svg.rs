//! Self-contained SVG line charts, written as plain text.

use std::fmt::Write as _;
use std::path::Path;

use crate::analysis::Component;
use crate::error::HarnessError;
use crate::integrator::Trajectory;

use super::sweep::SweepTable;

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 130.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 50.0;
/// Polylines are thinned to roughly this many vertices.
const MAX_VERTICES: usize = 4000;

const COLORS: [&str; 3] = ["#1f77b4", "#d62728", "#2ca02c"];

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Tick positions at 1, 2 or 5 times a power of ten, about `target` of them.
fn nice_ticks(lo: f64, hi: f64, target: usize) -> Vec<f64> {
    let span = hi - lo;
    if span.is_nan() || span <= 0.0 {
        return vec![lo];
    }
    let raw = span / target as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|k| k as f64 * step).collect()
}

fn tick_label(v: f64) -> String {
    let s = format!("{:.6}", v);
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".into() } else { s.to_string() }
}

struct Frame {
    x_lo: f64,
    x_hi: f64,
    y_lo: f64,
    y_hi: f64,
    log_x: bool,
}

impl Frame {
    fn new(x_lo: f64, x_hi: f64, y_lo: f64, y_hi: f64, log_x: bool) -> Self {
        let (x_lo, x_hi) = if log_x { (x_lo.log10(), x_hi.log10()) } else { (x_lo, x_hi) };
        let (x_lo, x_hi) = if x_hi > x_lo { (x_lo, x_hi) } else { (x_lo - 0.5, x_lo + 0.5) };
        let pad = if y_hi > y_lo { 0.05 * (y_hi - y_lo) } else { 0.5 };
        Frame {
            x_lo,
            x_hi,
            y_lo: y_lo - pad,
            y_hi: y_hi + pad,
            log_x,
        }
    }

    fn px(&self, x: f64) -> f64 {
        let x = if self.log_x { x.log10() } else { x };
        LEFT + (x - self.x_lo) / (self.x_hi - self.x_lo) * (WIDTH - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - BOTTOM - (y - self.y_lo) / (self.y_hi - self.y_lo) * (HEIGHT - TOP - BOTTOM)
    }

    fn axes(&self, out: &mut String, x_label: &str, y_label: &str) {
        let (x0, x1) = (LEFT, WIDTH - RIGHT);
        let (y0, y1) = (HEIGHT - BOTTOM, TOP);
        let _ = writeln!(
            out,
            r##"<g class="axes" stroke="#333" stroke-width="1"><line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}"/><line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}"/></g>"##
        );
        out.push_str(r##"<g class="ticks" stroke="#333" stroke-width="1" font-family="sans-serif" font-size="11">"##);
        out.push('\n');
        let x_ticks: Vec<(f64, String)> = if self.log_x {
            let (lo, hi) = (self.x_lo.ceil() as i32, self.x_hi.floor() as i32);
            (lo..=hi).map(|e| (10f64.powi(e), tick_label(10f64.powi(e)))).collect()
        } else {
            nice_ticks(self.x_lo, self.x_hi, 8).into_iter().map(|v| (v, tick_label(v))).collect()
        };
        for (v, label) in x_ticks {
            let x = self.px(v);
            let _ = writeln!(
                out,
                r#"<line x1="{x:.2}" y1="{y0}" x2="{x:.2}" y2="{:.2}"/><text x="{x:.2}" y="{:.2}" text-anchor="middle" stroke="none">{}</text>"#,
                y0 + 5.0,
                y0 + 18.0,
                escape(&label)
            );
        }
        for v in nice_ticks(self.y_lo, self.y_hi, 6) {
            let y = self.py(v);
            let _ = writeln!(
                out,
                r#"<line x1="{:.2}" y1="{y:.2}" x2="{x0}" y2="{y:.2}"/><text x="{:.2}" y="{:.2}" text-anchor="end" stroke="none">{}</text>"#,
                x0 - 5.0,
                x0 - 8.0,
                y + 4.0,
                escape(&tick_label(v))
            );
        }
        out.push_str("</g>\n");
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-family="sans-serif" font-size="13">{}</text>"#,
            (x0 + x1) / 2.0,
            HEIGHT - 12.0,
            escape(x_label)
        );
        let _ = writeln!(
            out,
            r#"<text x="16" y="{:.2}" text-anchor="middle" font-family="sans-serif" font-size="13" transform="rotate(-90 16 {:.2})">{}</text>"#,
            (y0 + y1) / 2.0,
            (y0 + y1) / 2.0,
            escape(y_label)
        );
    }

    fn points(&self, pts: impl Iterator<Item = (f64, f64)>) -> String {
        let mut s = String::new();
        for (i, (x, y)) in pts.enumerate() {
            if i > 0 {
                s.push(' ');
            }
            let _ = write!(s, "{:.2},{:.2}", self.px(x), self.py(y));
        }
        s
    }
}

fn legend(out: &mut String, entries: &[(&str, &str)]) {
    out.push_str(r#"<g class="legend" font-family="sans-serif" font-size="13">"#);
    out.push('\n');
    for (i, (label, color)) in entries.iter().enumerate() {
        let x = WIDTH - RIGHT + 15.0;
        let y = TOP + 10.0 + 22.0 * i as f64;
        let _ = writeln!(
            out,
            r#"<rect x="{x}" y="{}" width="18" height="4" fill="{color}"/><text x="{}" y="{}">{}</text>"#,
            y - 2.0,
            x + 24.0,
            y + 4.0,
            escape(label)
        );
    }
    out.push_str("</g>\n");
}

fn header(title: &str) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(out, "<title>{}</title>", escape(title));
    out.push_str(r#"<rect width="100%" height="100%" fill="white"/>"#);
    out.push('\n');
    out
}

/// Indices to keep: all of them when short, otherwise per-bucket min and max
/// (in time order) so peaks survive thinning.
fn thin(values: &[f64]) -> Vec<usize> {
    let n = values.len();
    if n <= MAX_VERTICES {
        return (0..n).collect();
    }
    let buckets = MAX_VERTICES / 2;
    let mut keep = Vec::with_capacity(MAX_VERTICES + 2);
    for b in 0..buckets {
        let lo = b * n / buckets;
        let hi = ((b + 1) * n / buckets).max(lo + 1);
        let slice = &values[lo..hi];
        let (mut imin, mut imax) = (0, 0);
        for (i, v) in slice.iter().enumerate() {
            if *v < slice[imin] {
                imin = i;
            }
            if *v > slice[imax] {
                imax = i;
            }
        }
        let (a, b) = if imin <= imax { (imin, imax) } else { (imax, imin) };
        keep.push(lo + a);
        if b != a {
            keep.push(lo + b);
        }
    }
    if keep.last() != Some(&(n - 1)) {
        keep.push(n - 1);
    }
    keep
}

/// θ, ψ, α against t, with a dashed reference line at `alpha_r`.
pub fn render_trajectory(traj: &Trajectory, alpha_r: f64, title: &str) -> Result<String, HarnessError> {
    if traj.is_empty() {
        return Err(HarnessError::EmptyPlot);
    }
    let (t_lo, t_hi) = (traj.first().unwrap().t, traj.last().unwrap().t);
    let mut y_lo = alpha_r;
    let mut y_hi = alpha_r;
    for s in &traj.samples {
        for v in s.vector() {
            y_lo = y_lo.min(v);
            y_hi = y_hi.max(v);
        }
    }
    let frame = Frame::new(t_lo, t_hi, y_lo, y_hi, false);
    let mut out = header(title);
    frame.axes(&mut out, "t", "state");

    let ry = frame.py(alpha_r);
    let _ = writeln!(
        out,
        r##"<line class="reference" x1="{LEFT}" y1="{ry:.2}" x2="{}" y2="{ry:.2}" stroke="#888" stroke-dasharray="6,4"/>"##,
        WIDTH - RIGHT
    );
    for c in Component::ALL {
        let values: Vec<f64> = traj.samples.iter().map(|s| c.of(s)).collect();
        let pts = frame.points(thin(&values).into_iter().map(|i| (traj.samples[i].t, values[i])));
        let _ = writeln!(
            out,
            r#"<polyline class="{}" fill="none" stroke="{}" stroke-width="1.5" points="{pts}"/>"#,
            c.name(),
            COLORS[c.index()]
        );
    }
    legend(&mut out, &[("θ", COLORS[0]), ("ψ", COLORS[1]), ("α", COLORS[2]), ("α_r", "#888")]);
    out.push_str("</svg>\n");
    Ok(out)
}

/// Measured and predicted ψ amplitude against T (log axis).
pub fn render_sweep(table: &SweepTable, title: &str) -> Result<String, HarnessError> {
    let rows = &table.rows;
    if rows.is_empty() {
        return Err(HarnessError::EmptyPlot);
    }
    let ts: Vec<f64> = rows
        .iter()
        .map(|r| r.time_constant)
        .filter(|t| t.is_finite() && *t > 0.0)
        .collect();
    if ts.is_empty() {
        return Err(HarnessError::EmptyPlot);
    }
    let (x_lo, x_hi) = ts.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &t| (a.min(t), b.max(t)));
    let values = rows
        .iter()
        .flat_map(|r| [Some(r.predicted), r.measured])
        .flatten()
        .filter(|v| v.is_finite());
    let y_hi = values.fold(0.0, f64::max);
    let frame = Frame::new(x_lo, x_hi, 0.0, y_hi, true);
    let mut out = header(title);
    frame.axes(&mut out, "T", "ψ amplitude");

    type Series<'a> = (&'a str, &'a str, Vec<(f64, f64)>);
    let series: [Series; 2] = [
        (
            "measured",
            COLORS[0],
            rows.iter().filter_map(|r| r.measured.map(|m| (r.time_constant, m))).collect(),
        ),
        (
            "predicted",
            COLORS[1],
            rows.iter()
                .filter(|r| r.predicted.is_finite())
                .map(|r| (r.time_constant, r.predicted))
                .collect(),
        ),
    ];
    for (name, color, pts) in &series {
        let _ = writeln!(
            out,
            r#"<polyline class="{name}" fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            frame.points(pts.iter().copied())
        );
        let _ = write!(out, r#"<g class="{name}-markers" fill="{color}">"#);
        for &(x, y) in pts {
            let _ = write!(out, r#"<circle cx="{:.2}" cy="{:.2}" r="3"/>"#, frame.px(x), frame.py(y));
        }
        out.push_str("</g>\n");
    }
    legend(&mut out, &[("measured", COLORS[0]), ("predicted", COLORS[1])]);
    out.push_str("</svg>\n");
    Ok(out)
}

pub fn write_svg(svg: &str, path: impl AsRef<Path>) -> Result<(), HarnessError> {
    let path = path.as_ref();
    std::fs::write(path, svg).map_err(|e| HarnessError::io(path, e))
}

pub fn emit_trajectory_plot(
    traj: &Trajectory,
    alpha_r: f64,
    title: &str,
    path: impl AsRef<Path>,
) -> Result<(), HarnessError> {
    write_svg(&render_trajectory(traj, alpha_r, title)?, path)
}

pub fn emit_sweep_plot(table: &SweepTable, title: &str, path: impl AsRef<Path>) -> Result<(), HarnessError> {
    write_svg(&render_sweep(table, title)?, path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::State;

    fn wave(n: usize) -> Trajectory {
        Trajectory::new(
            (0..n)
                .map(|k| {
                    let t = k as f64 * 0.01;
                    State::new(t, 3.0 + t.sin(), t.cos(), 3.0)
                })
                .collect(),
        )
    }

    #[test]
    fn trajectory_plot_structure() {
        let svg = render_trajectory(&wave(500), 3.0, "demo").unwrap();
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<polyline").count(), 3);
        assert_eq!(svg.matches(r#"class="reference""#).count(), 1);
        for name in ["θ", "ψ", "α"] {
            assert!(svg.contains(&format!(">{name}</text>")));
        }
    }

    #[test]
    fn long_trajectories_are_thinned_but_keep_extremes() {
        let values: Vec<f64> = (0..100_000).map(|i| ((i as f64) * 0.001).sin()).collect();
        let keep = thin(&values);
        assert!(keep.len() <= MAX_VERTICES + 1);
        assert!(keep.windows(2).all(|w| w[0] < w[1]));
        let kept_max = keep.iter().map(|&i| values[i]).fold(f64::NEG_INFINITY, f64::max);
        let all_max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(kept_max, all_max);
    }

    #[test]
    fn output_is_deterministic() {
        let a = render_trajectory(&wave(10_000), 3.0, "x").unwrap();
        let b = render_trajectory(&wave(10_000), 3.0, "x").unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn empty_input_is_an_error() {
        assert!(matches!(
            render_trajectory(&Trajectory::default(), 0.0, "x"),
            Err(HarnessError::EmptyPlot)
        ));
        assert!(render_sweep(&SweepTable::default(), "x").is_err());
    }

    #[test]
    fn titles_are_escaped() {
        let svg = render_trajectory(&wave(10), 3.0, "a < b & c").unwrap();
        assert!(svg.contains("a &lt; b &amp; c"));
    }

    #[test]
    fn nice_ticks_cover_range() {
        assert_eq!(nice_ticks(0.0, 50.0, 8), vec![0.0, 10.0, 20.0, 30.0, 40.0, 50.0]);
        let t = nice_ticks(-0.3, 0.7, 6);
        assert!(t.first().unwrap() >= &-0.3 && t.last().unwrap() <= &0.7);
        assert_eq!(tick_label(0.30000000000000004), "0.3");
        assert_eq!(tick_label(-0.0), "0");
    }
}
