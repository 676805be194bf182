//! Deterministic SVG rendering of functional data.
//!
//! Output is a pure function of the data, labels and axis text: one
//! `<polyline>` per observation (plus point markers for irregular data),
//! colors taken from a fixed palette by class label when given, by
//! observation index otherwise.

use fundata_core::data::{is_missing, FunctionalData};

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 600.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 20.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 50.0;

const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    "#bcbd22", "#17becf",
];

pub struct PlotSpec<'a> {
    pub title: &'a str,
    pub xlabel: &'a str,
    pub ylabel: &'a str,
}

struct Frame {
    x_min: f64,
    x_max: f64,
    y_min: f64,
    y_max: f64,
}

impl Frame {
    fn x(&self, v: f64) -> f64 {
        MARGIN_LEFT + (v - self.x_min) / (self.x_max - self.x_min) * (WIDTH - MARGIN_LEFT - MARGIN_RIGHT)
    }

    fn y(&self, v: f64) -> f64 {
        HEIGHT - MARGIN_BOTTOM
            - (v - self.y_min) / (self.y_max - self.y_min) * (HEIGHT - MARGIN_TOP - MARGIN_BOTTOM)
    }
}

/// Candidate tick positions: at most `target + 1` multiples of a 1/2/5
/// decade step covering the range.
fn ticks(min: f64, max: f64, target: usize) -> Vec<f64> {
    let range = max - min;
    if !(range > 0.0) {
        return vec![min];
    }
    let raw = range / target as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let norm = raw / mag;
    let step = if norm <= 1.0 {
        mag
    } else if norm <= 2.0 {
        2.0 * mag
    } else if norm <= 5.0 {
        5.0 * mag
    } else {
        10.0 * mag
    };
    let first = (min / step).ceil() * step;
    let mut out = Vec::new();
    let mut t = first;
    while t <= max + 1e-9 * step {
        // snap near-zero ticks so labels print as 0
        out.push(if t.abs() < 1e-12 * step { 0.0 } else { t });
        t += step;
    }
    out
}

fn curves_of(fd: &FunctionalData) -> Vec<Vec<(f64, f64)>> {
    match fd {
        FunctionalData::Dense(d) => {
            let grid = d.grid(0).points();
            d.obs_matrix()
                .rows()
                .into_iter()
                .map(|row| {
                    row.iter()
                        .enumerate()
                        .filter(|(_, v)| !is_missing(**v))
                        .map(|(j, &v)| (grid[j], v))
                        .collect()
                })
                .collect()
        }
        FunctionalData::Irregular(ir) => (0..ir.n_obs())
            .map(|i| {
                let (pts, vals) = ir.curve(i);
                pts.iter().copied().zip(vals.iter().copied()).collect()
            })
            .collect(),
    }
}

/// Render curves to an SVG document.
pub fn render(fd: &FunctionalData, labels: Option<&[usize]>, spec: &PlotSpec<'_>) -> String {
    let curves = curves_of(fd);
    let markers = matches!(fd, FunctionalData::Irregular(_));
    let mut x_min = f64::INFINITY;
    let mut x_max = f64::NEG_INFINITY;
    let mut y_min = f64::INFINITY;
    let mut y_max = f64::NEG_INFINITY;
    for curve in &curves {
        for &(x, y) in curve {
            x_min = x_min.min(x);
            x_max = x_max.max(x);
            y_min = y_min.min(y);
            y_max = y_max.max(y);
        }
    }
    if !(x_max > x_min) {
        x_max = x_min + 1.0;
    }
    if !(y_max > y_min) {
        let pad = if y_min == 0.0 { 1.0 } else { y_min.abs() * 0.1 };
        y_max = y_min + pad;
        y_min -= pad;
    }
    let frame = Frame { x_min, x_max, y_min, y_max };

    let mut out = String::new();
    out.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n"
    ));
    out.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");

    // axes
    let (x0, y0) = (MARGIN_LEFT, HEIGHT - MARGIN_BOTTOM);
    let (x1, y1) = (WIDTH - MARGIN_RIGHT, MARGIN_TOP);
    out.push_str(&format!(
        "<line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x1}\" y2=\"{y0}\" stroke=\"black\"/>\n"
    ));
    out.push_str(&format!(
        "<line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x0}\" y2=\"{y1}\" stroke=\"black\"/>\n"
    ));
    for t in ticks(x_min, x_max, 6) {
        let px = frame.x(t);
        out.push_str(&format!(
            "<line x1=\"{px:.2}\" y1=\"{y0}\" x2=\"{px:.2}\" y2=\"{}\" stroke=\"black\"/>\n",
            y0 + 5.0
        ));
        out.push_str(&format!(
            "<text x=\"{px:.2}\" y=\"{}\" font-size=\"12\" text-anchor=\"middle\">{t}</text>\n",
            y0 + 18.0
        ));
    }
    for t in ticks(y_min, y_max, 6) {
        let py = frame.y(t);
        out.push_str(&format!(
            "<line x1=\"{}\" y1=\"{py:.2}\" x2=\"{x0}\" y2=\"{py:.2}\" stroke=\"black\"/>\n",
            x0 - 5.0
        ));
        out.push_str(&format!(
            "<text x=\"{}\" y=\"{:.2}\" font-size=\"12\" text-anchor=\"end\">{t}</text>\n",
            x0 - 8.0,
            py + 4.0
        ));
    }

    // curves
    for (i, curve) in curves.iter().enumerate() {
        let color = match labels {
            Some(l) => PALETTE[l[i] % PALETTE.len()],
            None => PALETTE[i % PALETTE.len()],
        };
        let points: Vec<String> = curve
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", frame.x(x), frame.y(y)))
            .collect();
        out.push_str(&format!(
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1\" points=\"{}\"/>\n",
            points.join(" ")
        ));
        if markers {
            for &(x, y) in curve {
                out.push_str(&format!(
                    "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"2\" fill=\"{color}\"/>\n",
                    frame.x(x),
                    frame.y(y)
                ));
            }
        }
    }

    // axis text
    if !spec.title.is_empty() {
        out.push_str(&format!(
            "<text x=\"{:.1}\" y=\"24\" font-size=\"16\" text-anchor=\"middle\">{}</text>\n",
            (MARGIN_LEFT + WIDTH - MARGIN_RIGHT) / 2.0,
            escape(spec.title)
        ));
    }
    if !spec.xlabel.is_empty() {
        out.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{}\" font-size=\"14\" text-anchor=\"middle\">{}</text>\n",
            (MARGIN_LEFT + WIDTH - MARGIN_RIGHT) / 2.0,
            HEIGHT - 12.0,
            escape(spec.xlabel)
        ));
    }
    if !spec.ylabel.is_empty() {
        out.push_str(&format!(
            "<text x=\"18\" y=\"{:.1}\" font-size=\"14\" text-anchor=\"middle\" transform=\"rotate(-90 18 {:.1})\">{}</text>\n",
            (MARGIN_TOP + HEIGHT - MARGIN_BOTTOM) / 2.0,
            (MARGIN_TOP + HEIGHT - MARGIN_BOTTOM) / 2.0,
            escape(spec.ylabel)
        ));
    }
    out.push_str("</svg>\n");
    out
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
