//! Minimal deterministic SVG charts on a fixed 800×600 canvas.

use std::fmt::Write as _;

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 600.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 30.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

#[derive(Debug, Clone)]
enum Item {
    Points(Vec<(f64, f64)>),
    Line { points: Vec<(f64, f64)>, label: String },
    Arrow { to: (f64, f64), label: String },
    Diagonal,
}

#[derive(Debug, Clone)]
pub struct Chart {
    title: String,
    x_label: String,
    y_label: String,
    items: Vec<Item>,
    equal_aspect: bool,
}

/// Tick positions covering `[lo, hi]` with a 1-2-5 step.
pub fn nice_ticks(lo: f64, hi: f64) -> Vec<f64> {
    let span = (hi - lo).abs().max(1e-12);
    let raw = span / 5.0;
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

fn fmt_tick(v: f64) -> String {
    let s = format!("{v:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.into()
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

impl Chart {
    pub fn new(title: &str, x_label: &str, y_label: &str) -> Self {
        Self {
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            items: Vec::new(),
            equal_aspect: false,
        }
    }

    pub fn equal_aspect(mut self) -> Self {
        self.equal_aspect = true;
        self
    }

    pub fn points(&mut self, pts: Vec<(f64, f64)>) {
        self.items.push(Item::Points(pts));
    }

    pub fn line(&mut self, points: Vec<(f64, f64)>, label: &str) {
        self.items.push(Item::Line {
            points,
            label: label.into(),
        });
    }

    pub fn arrow(&mut self, to: (f64, f64), label: &str) {
        self.items.push(Item::Arrow {
            to,
            label: label.into(),
        });
    }

    /// The `y = x` reference line.
    pub fn diagonal(&mut self) {
        self.items.push(Item::Diagonal);
    }

    fn extent(&self) -> (f64, f64, f64, f64) {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for item in &self.items {
            match item {
                Item::Points(p) | Item::Line { points: p, .. } => {
                    xs.extend(p.iter().map(|q| q.0));
                    ys.extend(p.iter().map(|q| q.1));
                }
                Item::Arrow { to, .. } => {
                    xs.extend([0.0, to.0]);
                    ys.extend([0.0, to.1]);
                }
                Item::Diagonal => {}
            }
        }
        let range = |v: &[f64]| {
            let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if !lo.is_finite() {
                (0.0, 1.0)
            } else if hi - lo < 1e-12 {
                (lo - 0.5, hi + 0.5)
            } else {
                let pad = 0.05 * (hi - lo);
                (lo - pad, hi + pad)
            }
        };
        let (x0, x1) = range(&xs);
        let (y0, y1) = range(&ys);
        if self.equal_aspect {
            let plot_w = WIDTH - LEFT - RIGHT;
            let plot_h = HEIGHT - TOP - BOTTOM;
            let per_px = ((x1 - x0) / plot_w).max((y1 - y0) / plot_h);
            let (cx, cy) = (0.5 * (x0 + x1), 0.5 * (y0 + y1));
            let (hw, hh) = (0.5 * per_px * plot_w, 0.5 * per_px * plot_h);
            (cx - hw, cx + hw, cy - hh, cy + hh)
        } else {
            (x0, x1, y0, y1)
        }
    }

    pub fn render(&self) -> String {
        let (x0, x1, y0, y1) = self.extent();
        let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * (WIDTH - LEFT - RIGHT);
        let sy = |y: f64| HEIGHT - BOTTOM - (y - y0) / (y1 - y0) * (HEIGHT - TOP - BOTTOM);
        let mut out = String::new();
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {WIDTH} {HEIGHT}" width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(out, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="24" text-anchor="middle" font-size="16">{}</text>"#,
            WIDTH / 2.0,
            escape(&self.title)
        );

        // Axes box, ticks and labels.
        let _ = writeln!(
            out,
            r#"<rect x="{LEFT}" y="{TOP}" width="{:.2}" height="{:.2}" fill="none" stroke="black"/>"#,
            WIDTH - LEFT - RIGHT,
            HEIGHT - TOP - BOTTOM
        );
        for t in nice_ticks(x0, x1) {
            let x = sx(t);
            let yb = HEIGHT - BOTTOM;
            let _ = writeln!(
                out,
                r#"<line x1="{x:.2}" y1="{yb:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
                yb + 5.0,
                yb + 18.0,
                fmt_tick(t)
            );
        }
        for t in nice_ticks(y0, y1) {
            let y = sy(t);
            let _ = writeln!(
                out,
                r#"<line x1="{:.2}" y1="{y:.2}" x2="{LEFT:.2}" y2="{y:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
                LEFT - 5.0,
                LEFT - 8.0,
                y + 4.0,
                fmt_tick(t)
            );
        }
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            LEFT + (WIDTH - LEFT - RIGHT) / 2.0,
            HEIGHT - 15.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            out,
            r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">{}</text>"#,
            TOP + (HEIGHT - TOP - BOTTOM) / 2.0,
            TOP + (HEIGHT - TOP - BOTTOM) / 2.0,
            escape(&self.y_label)
        );

        let mut legend = Vec::new();
        let mut line_no = 0;
        for item in &self.items {
            match item {
                Item::Points(pts) => {
                    for &(x, y) in pts {
                        let _ = writeln!(
                            out,
                            r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{}"/>"#,
                            sx(x),
                            sy(y),
                            PALETTE[0]
                        );
                    }
                }
                Item::Line { points, label } => {
                    let color = PALETTE[line_no % PALETTE.len()];
                    line_no += 1;
                    let path: Vec<String> = points
                        .iter()
                        .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
                        .collect();
                    let _ = writeln!(
                        out,
                        r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
                        path.join(" ")
                    );
                    legend.push((color, label.clone()));
                }
                Item::Arrow { to, label } => {
                    let (ox, oy) = (sx(0.0), sy(0.0));
                    let (tx, ty) = (sx(to.0), sy(to.1));
                    let _ = writeln!(
                        out,
                        r#"<line x1="{ox:.2}" y1="{oy:.2}" x2="{tx:.2}" y2="{ty:.2}" stroke="{}"/><circle cx="{tx:.2}" cy="{ty:.2}" r="2.5" fill="{}"/><text x="{:.2}" y="{:.2}">{}</text>"#,
                        PALETTE[0],
                        PALETTE[0],
                        tx + 4.0,
                        ty - 4.0,
                        escape(label)
                    );
                }
                Item::Diagonal => {
                    let lo = x0.max(y0);
                    let hi = x1.min(y1);
                    if lo < hi {
                        let _ = writeln!(
                            out,
                            r##"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#888" stroke-dasharray="4 4"/>"##,
                            sx(lo),
                            sy(lo),
                            sx(hi),
                            sy(hi)
                        );
                    }
                }
            }
        }
        for (k, (color, label)) in legend.iter().enumerate() {
            let y = TOP + 15.0 + 16.0 * k as f64;
            let x = WIDTH - RIGHT - 110.0;
            let _ = writeln!(
                out,
                r#"<line x1="{x:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="{color}" stroke-width="2"/><text x="{:.2}" y="{:.2}">{}</text>"#,
                x + 20.0,
                x + 25.0,
                y + 4.0,
                escape(label)
            );
        }
        out.push_str("</svg>\n");
        out
    }
}
