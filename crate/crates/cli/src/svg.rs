//! Minimal static SVG charts: lines, ribbons, points and bars on linear
//! axes, arranged in a grid of panels.

use std::fmt::Write;

pub enum Series {
    Line {
        xs: Vec<f64>,
        ys: Vec<f64>,
        color: &'static str,
        width: f64,
        opacity: f64,
    },
    Ribbon {
        xs: Vec<f64>,
        lower: Vec<f64>,
        upper: Vec<f64>,
        color: &'static str,
        opacity: f64,
    },
    Points {
        xs: Vec<f64>,
        ys: Vec<f64>,
        color: &'static str,
    },
    Bars {
        xs: Vec<f64>,
        ys: Vec<f64>,
        color: &'static str,
    },
}

impl Series {
    pub fn line(xs: Vec<f64>, ys: Vec<f64>, color: &'static str) -> Self {
        Series::Line {
            xs,
            ys,
            color,
            width: 1.8,
            opacity: 1.0,
        }
    }

    pub fn thin(xs: Vec<f64>, ys: Vec<f64>, color: &'static str) -> Self {
        Series::Line {
            xs,
            ys,
            color,
            width: 0.6,
            opacity: 0.25,
        }
    }

    fn points(&self) -> Vec<(f64, f64)> {
        match self {
            Series::Line { xs, ys, .. } | Series::Points { xs, ys, .. } => {
                xs.iter().copied().zip(ys.iter().copied()).collect()
            }
            Series::Bars { xs, ys, .. } => xs
                .iter()
                .copied()
                .zip(ys.iter().copied())
                .chain(xs.iter().map(|&x| (x, 0.0)))
                .collect(),
            Series::Ribbon { xs, lower, upper, .. } => xs
                .iter()
                .copied()
                .zip(lower.iter().copied())
                .chain(xs.iter().copied().zip(upper.iter().copied()))
                .collect(),
        }
    }
}

pub struct Panel {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
}

impl Panel {
    pub fn new(title: &str, x_label: &str, y_label: &str) -> Self {
        Self {
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            series: Vec::new(),
        }
    }

    pub fn with(mut self, s: Series) -> Self {
        self.series.push(s);
        self
    }
}

const W: f64 = 520.0;
const H: f64 = 340.0;
const MARGIN: (f64, f64, f64, f64) = (64.0, 20.0, 34.0, 46.0);

fn nice_step(span: f64) -> f64 {
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let f = raw / mag;
    mag * if f < 1.5 {
        1.0
    } else if f < 3.5 {
        2.0
    } else if f < 7.5 {
        5.0
    } else {
        10.0
    }
}

fn label(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() >= 1e4 || v.abs() < 1e-2 {
        format!("{v:.1e}")
    } else {
        let s = format!("{v:.3}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn bounds(panel: &Panel) -> (f64, f64, f64, f64) {
    let pts: Vec<(f64, f64)> = panel
        .series
        .iter()
        .flat_map(Series::points)
        .filter(|(x, y)| x.is_finite() && y.is_finite())
        .collect();
    let fold = |f: fn(&(f64, f64)) -> f64| {
        pts.iter()
            .map(f)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
    };
    let (mut x0, mut x1) = fold(|p| p.0);
    let (mut y0, mut y1) = fold(|p| p.1);
    if !x0.is_finite() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    if x1 <= x0 {
        x1 = x0 + 1.0;
    }
    if y1 <= y0 {
        let pad = if y0 == 0.0 { 1.0 } else { 0.1 * y0.abs() };
        y0 -= pad;
        y1 += pad;
    }
    let pad = 0.05 * (y1 - y0);
    (x0, x1, y0 - pad, y1 + pad)
}

fn render_panel(out: &mut String, panel: &Panel, ox: f64, oy: f64) {
    let (left, right, top, bottom) = MARGIN;
    let (x0, x1, y0, y1) = bounds(panel);
    let pw = W - left - right;
    let ph = H - top - bottom;
    let sx = |x: f64| ox + left + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| oy + top + (1.0 - (y - y0) / (y1 - y0)) * ph;
    let _ = writeln!(
        out,
        r##"<rect x="{:.2}" y="{:.2}" width="{pw:.2}" height="{ph:.2}" fill="none" stroke="#444"/>"##,
        ox + left,
        oy + top
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" font-size="14" text-anchor="middle">{}</text>"#,
        ox + left + pw / 2.0,
        oy + 20.0,
        escape(&panel.title)
    );
    for (step, lo, hi, horizontal) in [(nice_step(x1 - x0), x0, x1, true), (nice_step(y1 - y0), y0, y1, false)] {
        let mut v = (lo / step).ceil() * step;
        while v <= hi + 1e-9 * step {
            if horizontal {
                let _ = writeln!(
                    out,
                    r#"<text x="{:.2}" y="{:.2}" font-size="10" text-anchor="middle">{}</text>"#,
                    sx(v),
                    oy + top + ph + 14.0,
                    label(v)
                );
            } else {
                let _ = writeln!(
                    out,
                    r##"<line x1="{:.2}" x2="{:.2}" y1="{y:.2}" y2="{y:.2}" stroke="#ddd"/><text x="{:.2}" y="{:.2}" font-size="10" text-anchor="end">{}</text>"##,
                    ox + left,
                    ox + left + pw,
                    ox + left - 4.0,
                    sy(v) + 3.0,
                    label(v),
                    y = sy(v)
                );
            }
            v += step;
        }
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" font-size="11" text-anchor="middle">{}</text>"#,
        ox + left + pw / 2.0,
        oy + H - 10.0,
        escape(&panel.x_label)
    );
    let (lx, ly) = (ox + 14.0, oy + top + ph / 2.0);
    let _ = writeln!(
        out,
        r#"<text x="{lx:.2}" y="{ly:.2}" font-size="11" text-anchor="middle" transform="rotate(-90 {lx:.2} {ly:.2})">{}</text>"#,
        escape(&panel.y_label)
    );
    for s in &panel.series {
        match s {
            Series::Line {
                xs,
                ys,
                color,
                width,
                opacity,
            } => {
                let mut d = String::new();
                let mut pen_up = true;
                for (&x, &y) in xs.iter().zip(ys) {
                    if !(x.is_finite() && y.is_finite()) {
                        pen_up = true;
                        continue;
                    }
                    let _ = write!(d, "{}{:.2},{:.2} ", if pen_up { "M" } else { "L" }, sx(x), sy(y));
                    pen_up = false;
                }
                let _ = writeln!(
                    out,
                    r#"<path d="{}" fill="none" stroke="{color}" stroke-width="{width}" stroke-opacity="{opacity}"/>"#,
                    d.trim_end()
                );
            }
            Series::Ribbon {
                xs,
                lower,
                upper,
                color,
                opacity,
            } => {
                let mut pts = Vec::new();
                for (&x, &y) in xs.iter().zip(upper) {
                    pts.push(format!("{:.2},{:.2}", sx(x), sy(y)));
                }
                for (&x, &y) in xs.iter().zip(lower).rev() {
                    pts.push(format!("{:.2},{:.2}", sx(x), sy(y)));
                }
                let _ = writeln!(
                    out,
                    r#"<polygon points="{}" fill="{color}" fill-opacity="{opacity}" stroke="none"/>"#,
                    pts.join(" ")
                );
            }
            Series::Points { xs, ys, color } => {
                for (&x, &y) in xs.iter().zip(ys) {
                    if x.is_finite() && y.is_finite() {
                        let _ = writeln!(out, r#"<circle cx="{:.2}" cy="{:.2}" r="2.2" fill="{color}"/>"#, sx(x), sy(y));
                    }
                }
            }
            Series::Bars { xs, ys, color } => {
                let bw = (pw / xs.len().max(1) as f64 * 0.8).max(0.5);
                for (&x, &y) in xs.iter().zip(ys) {
                    let (a, b) = (sy(y.max(0.0)), sy(y.min(0.0)));
                    let _ = writeln!(
                        out,
                        r#"<rect x="{:.2}" y="{a:.2}" width="{bw:.2}" height="{:.2}" fill="{color}"/>"#,
                        sx(x) - bw / 2.0,
                        b - a
                    );
                }
            }
        }
    }
}

pub fn render(panels: &[Panel], columns: usize) -> String {
    let columns = columns.max(1);
    let rows = panels.len().div_ceil(columns);
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" font-family="sans-serif">"#,
        W * columns as f64,
        H * rows as f64
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for (i, panel) in panels.iter().enumerate() {
        let ox = W * (i % columns) as f64;
        let oy = H * (i / columns) as f64;
        render_panel(&mut out, panel, ox, oy);
    }
    out.push_str("</svg>\n");
    out
}
