//! Minimal SVG charts. Coordinates are printed with two decimals so the
//! output is stable across runs.

use std::fmt::Write;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 64.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 48.0;

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

/// One named line of `(x, y)` points.
#[derive(Debug, Clone, PartialEq)]
pub struct Line {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

/// Quantile bands around a median, one entry per horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct Fan {
    pub title: String,
    /// Observed values before the origin, at x = -len+1..=0.
    pub history: Vec<f64>,
    /// Realized values after the origin, when known.
    pub actual: Vec<f64>,
    pub median: Vec<f64>,
    pub inner: Vec<(f64, f64)>,
    pub outer: Vec<(f64, f64)>,
    pub inner_label: String,
    pub outer_label: String,
}

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn new(xs: impl Iterator<Item = f64>, ys: impl Iterator<Item = f64>) -> Self {
        let fin = |v: &f64| v.is_finite();
        let (mut x0, mut x1) = bounds(xs.filter(fin));
        let (mut y0, mut y1) = bounds(ys.filter(fin));
        if x1 <= x0 {
            x0 -= 1.0;
            x1 += 1.0;
        }
        if y1 <= y0 {
            y0 -= 1.0;
            y1 += 1.0;
        }
        let pad = 0.05 * (y1 - y0);
        Frame {
            x0,
            x1,
            y0: y0 - pad,
            y1: y1 + pad,
        }
    }

    fn x(&self, v: f64) -> f64 {
        LEFT + (v - self.x0) / (self.x1 - self.x0) * (WIDTH - LEFT - RIGHT)
    }

    fn y(&self, v: f64) -> f64 {
        HEIGHT - BOTTOM - (v - self.y0) / (self.y1 - self.y0) * (HEIGHT - TOP - BOTTOM)
    }
}

fn bounds(vals: impl Iterator<Item = f64>) -> (f64, f64) {
    vals.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn header(out: &mut String, title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
        (WIDTH - RIGHT + LEFT) / 2.0,
        escape(title)
    );
}

fn axes(out: &mut String, f: &Frame, x_label: &str, y_label: &str) {
    let (l, r) = (LEFT, WIDTH - RIGHT);
    let (t, b) = (TOP, HEIGHT - BOTTOM);
    let _ = writeln!(
        out,
        r##"<path d="M{l:.2},{t:.2} L{l:.2},{b:.2} L{r:.2},{b:.2}" fill="none" stroke="#333"/>"##
    );
    for i in 0..=4 {
        let v = f.y0 + (f.y1 - f.y0) * i as f64 / 4.0;
        let y = f.y(v);
        let _ = writeln!(
            out,
            r##"<line x1="{:.2}" y1="{y:.2}" x2="{l:.2}" y2="{y:.2}" stroke="#333"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"##,
            l - 4.0,
            l - 6.0,
            y + 4.0,
            tick(v)
        );
    }
    for i in 0..=4 {
        let v = f.x0 + (f.x1 - f.x0) * i as f64 / 4.0;
        let x = f.x(v);
        let _ = writeln!(
            out,
            r##"<line x1="{x:.2}" y1="{b:.2}" x2="{x:.2}" y2="{:.2}" stroke="#333"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"##,
            b + 4.0,
            b + 18.0,
            tick(v)
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        (l + r) / 2.0,
        HEIGHT - 8.0,
        escape(x_label)
    );
    let _ = writeln!(
        out,
        r#"<text x="14" y="{:.2}" text-anchor="middle" transform="rotate(-90 14 {:.2})">{}</text>"#,
        (t + b) / 2.0,
        (t + b) / 2.0,
        escape(y_label)
    );
}

fn tick(v: f64) -> String {
    if v.abs() >= 100.0 || v == v.trunc() {
        format!("{v:.0}")
    } else {
        format!("{v:.2}")
    }
}

fn polyline(points: impl Iterator<Item = (f64, f64)>) -> String {
    points
        .map(|(x, y)| format!("{x:.2},{y:.2}"))
        .collect::<Vec<_>>()
        .join(" ")
}

fn legend(out: &mut String, entries: &[(&str, &str)]) {
    let x = WIDTH - RIGHT + 14.0;
    for (i, (label, color)) in entries.iter().enumerate() {
        let y = TOP + 10.0 + 18.0 * i as f64;
        let _ = writeln!(
            out,
            r#"<rect x="{x:.2}" y="{:.2}" width="14" height="10" fill="{color}"/><text x="{:.2}" y="{:.2}">{}</text>"#,
            y - 9.0,
            x + 20.0,
            y,
            escape(label)
        );
    }
}

/// A line chart with one polyline per entry of `lines`.
pub fn line_chart(title: &str, x_label: &str, y_label: &str, lines: &[Line]) -> String {
    let pts = || lines.iter().flat_map(|l| l.points.iter());
    let f = Frame::new(pts().map(|p| p.0), pts().map(|p| p.1));
    let mut out = String::new();
    header(&mut out, title);
    axes(&mut out, &f, x_label, y_label);
    let mut entries = Vec::new();
    for (i, line) in lines.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let pts = line
            .points
            .iter()
            .filter(|p| p.0.is_finite() && p.1.is_finite())
            .map(|&(x, y)| (f.x(x), f.y(y)));
        let _ = writeln!(
            out,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
            polyline(pts)
        );
        entries.push((line.label.as_str(), color));
    }
    legend(&mut out, &entries);
    out.push_str("</svg>\n");
    out
}

fn band(f: &Frame, b: &[(f64, f64)]) -> String {
    let upper = b.iter().enumerate().map(|(i, p)| (f.x((i + 1) as f64), f.y(p.1)));
    let lower = b.iter().enumerate().rev().map(|(i, p)| (f.x((i + 1) as f64), f.y(p.0)));
    polyline(upper.chain(lower))
}

/// History, median forecast and two shaded bands.
pub fn fan_chart(fan: &Fan) -> String {
    let hist_x = |i: usize| i as f64 + 1.0 - fan.history.len() as f64;
    let h = fan.median.len();
    let xs = (0..fan.history.len()).map(hist_x).chain((1..=h).map(|i| i as f64));
    let ys = fan
        .history
        .iter()
        .copied()
        .chain(fan.actual.iter().copied())
        .chain(fan.outer.iter().flat_map(|p| [p.0, p.1]))
        .chain(fan.median.iter().copied());
    let f = Frame::new(xs, ys);
    let mut out = String::new();
    header(&mut out, &fan.title);
    axes(&mut out, &f, "days after origin", "count");
    let outer_color = "#c6dbef";
    let inner_color = "#6baed6";
    let median_color = "#08519c";
    let _ = writeln!(
        out,
        r#"<polygon points="{}" fill="{outer_color}" stroke="none"/>"#,
        band(&f, &fan.outer)
    );
    let _ = writeln!(
        out,
        r#"<polygon points="{}" fill="{inner_color}" stroke="none"/>"#,
        band(&f, &fan.inner)
    );
    if !fan.history.is_empty() {
        let pts = fan.history.iter().enumerate().map(|(i, &v)| (f.x(hist_x(i)), f.y(v)));
        let _ = writeln!(
            out,
            r##"<polyline points="{}" fill="none" stroke="#333" stroke-width="1.5"/>"##,
            polyline(pts)
        );
    }
    for (i, &v) in fan.actual.iter().enumerate() {
        let _ = writeln!(
            out,
            r##"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="#333"/>"##,
            f.x((i + 1) as f64),
            f.y(v)
        );
    }
    let pts = fan.median.iter().enumerate().map(|(i, &v)| (f.x((i + 1) as f64), f.y(v)));
    let _ = writeln!(
        out,
        r#"<polyline points="{}" fill="none" stroke="{median_color}" stroke-width="2"/>"#,
        polyline(pts)
    );
    legend(
        &mut out,
        &[
            ("observed", "#333"),
            ("median", median_color),
            (&fan.inner_label, inner_color),
            (&fan.outer_label, outer_color),
        ],
    );
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_chart_is_deterministic_and_well_formed() {
        let lines = vec![
            Line {
                label: "A<B".into(),
                points: vec![(1.0, 2.0), (2.0, 3.0), (3.0, f64::NAN)],
            },
            Line {
                label: "C".into(),
                points: vec![(1.0, 1.0), (2.0, 1.5)],
            },
        ];
        let a = line_chart("t", "h", "score", &lines);
        assert_eq!(a, line_chart("t", "h", "score", &lines));
        assert!(a.starts_with("<svg") && a.ends_with("</svg>\n"));
        assert_eq!(a.matches("<polyline").count(), 2);
        assert!(a.contains("A&lt;B"));
        assert!(!a.contains("NaN"));
    }

    #[test]
    fn flat_data_does_not_divide_by_zero() {
        let lines = vec![Line {
            label: "flat".into(),
            points: vec![(1.0, 5.0)],
        }];
        let s = line_chart("t", "h", "v", &lines);
        assert!(!s.contains("NaN") && !s.contains("inf"));
    }

    #[test]
    fn fan_chart_has_two_bands() {
        let fan = Fan {
            title: "f".into(),
            history: vec![3.0, 4.0],
            actual: vec![5.5],
            median: vec![5.0, 6.0],
            inner: vec![(4.0, 6.0), (5.0, 7.0)],
            outer: vec![(3.0, 7.0), (4.0, 8.0)],
            inner_label: "80%".into(),
            outer_label: "95%".into(),
        };
        let s = fan_chart(&fan);
        assert_eq!(s.matches("<polygon").count(), 2);
        assert_eq!(s.matches("<polyline").count(), 2);
        assert_eq!(s.matches("<circle").count(), 1);
    }
}
