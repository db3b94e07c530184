//! Artifact envelopes and dependency-free SVG line plots.
//!
//! Everything here is byte-deterministic: struct fields serialize in
//! declaration order and numbers are printed with fixed precision.

use serde::Serialize;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Who made an artifact and from what; embedded in every output file.
#[derive(Clone, Debug, Serialize)]
pub struct Provenance<C: Serialize> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub seed: Option<u64>,
    pub config: C,
}

impl<C: Serialize> Provenance<C> {
    pub fn new(command: &str, seed: Option<u64>, config: C) -> Self {
        Self {
            tool: "parabolic",
            version: VERSION,
            command: command.to_string(),
            seed,
            config,
        }
    }

    /// Single-line JSON, suitable for a CSV comment or an SVG description.
    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("provenance serializes")
    }
}

/// A JSON report: provenance followed by the result.
#[derive(Clone, Debug, Serialize)]
pub struct Artifact<'a, C: Serialize, R: Serialize> {
    #[serde(flatten)]
    pub provenance: &'a Provenance<C>,
    pub result: R,
}

impl<'a, C: Serialize, R: Serialize> Artifact<'a, C, R> {
    pub fn new(provenance: &'a Provenance<C>, result: R) -> Self {
        Self { provenance, result }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("artifact serializes");
        s.push('\n');
        s
    }
}

#[derive(Clone, Debug)]
pub struct Series {
    pub label: String,
    pub color: &'static str,
    /// Non-finite y values break the polyline.
    pub points: Vec<(f64, f64)>,
}

#[derive(Clone, Debug)]
pub struct Marker {
    pub value: f64,
    pub label: String,
}

#[derive(Clone, Debug, Default)]
pub struct LinePlot {
    pub title: String,
    /// Written into the SVG <desc> element.
    pub description: Option<String>,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
    pub hlines: Vec<Marker>,
    pub vlines: Vec<Marker>,
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN: f64 = 56.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for v in values.filter(|v| v.is_finite()) {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        return (lo - 0.5, hi + 0.5);
    }
    let pad = 0.05 * (hi - lo);
    (lo - pad, hi + pad)
}

impl LinePlot {
    pub fn to_svg(&self) -> String {
        let (x0, x1) = bounds(
            self.series
                .iter()
                .flat_map(|s| s.points.iter().map(|p| p.0))
                .chain(self.vlines.iter().map(|m| m.value)),
        );
        let (y0, y1) = bounds(
            self.series
                .iter()
                .flat_map(|s| s.points.iter().map(|p| p.1))
                .chain(self.hlines.iter().map(|m| m.value)),
        );
        let sx = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (WIDTH - 2.0 * MARGIN);
        let sy = |y: f64| HEIGHT - MARGIN - (y - y0) / (y1 - y0) * (HEIGHT - 2.0 * MARGIN);

        let mut out = String::new();
        out.push_str(&format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" font-family=\"sans-serif\" font-size=\"11\">\n"
        ));
        if let Some(d) = &self.description {
            out.push_str(&format!("<desc>{}</desc>\n", escape(d)));
        }
        out.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
        out.push_str(&format!(
            "<text x=\"{:.1}\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">{}</text>\n",
            WIDTH / 2.0,
            escape(&self.title)
        ));
        out.push_str(&format!(
            "<rect x=\"{MARGIN}\" y=\"{MARGIN}\" width=\"{:.1}\" height=\"{:.1}\" fill=\"none\" stroke=\"black\"/>\n",
            WIDTH - 2.0 * MARGIN,
            HEIGHT - 2.0 * MARGIN
        ));
        for i in 0..=4 {
            let fx = x0 + (x1 - x0) * i as f64 / 4.0;
            let fy = y0 + (y1 - y0) * i as f64 / 4.0;
            out.push_str(&format!(
                "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{fx:.3}</text>\n",
                sx(fx),
                HEIGHT - MARGIN + 16.0
            ));
            out.push_str(&format!(
                "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">{fy:.3}</text>\n",
                MARGIN - 4.0,
                sy(fy) + 4.0
            ));
        }
        out.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{}</text>\n",
            WIDTH / 2.0,
            HEIGHT - 14.0,
            escape(&self.x_label)
        ));
        out.push_str(&format!(
            "<text x=\"14\" y=\"{:.1}\" text-anchor=\"middle\" transform=\"rotate(-90 14 {:.1})\">{}</text>\n",
            HEIGHT / 2.0,
            HEIGHT / 2.0,
            escape(&self.y_label)
        ));
        for m in &self.hlines {
            out.push_str(&format!(
                "<line x1=\"{MARGIN}\" x2=\"{:.1}\" y1=\"{y:.2}\" y2=\"{y:.2}\" stroke=\"gray\" stroke-dasharray=\"4 3\"/>\n<text x=\"{:.1}\" y=\"{:.2}\" text-anchor=\"end\" fill=\"gray\">{}</text>\n",
                WIDTH - MARGIN,
                WIDTH - MARGIN - 4.0,
                sy(m.value) - 4.0,
                escape(&m.label),
                y = sy(m.value)
            ));
        }
        for m in &self.vlines {
            out.push_str(&format!(
                "<line x1=\"{x:.2}\" x2=\"{x:.2}\" y1=\"{MARGIN}\" y2=\"{:.1}\" stroke=\"gray\" stroke-dasharray=\"4 3\"/>\n<text x=\"{:.2}\" y=\"{:.1}\" fill=\"gray\">{}</text>\n",
                HEIGHT - MARGIN,
                sx(m.value) + 4.0,
                MARGIN + 14.0,
                escape(&m.label),
                x = sx(m.value)
            ));
        }
        for (k, s) in self.series.iter().enumerate() {
            let mut path = String::new();
            let mut pen_down = false;
            for &(x, y) in &s.points {
                if !(x.is_finite() && y.is_finite()) {
                    pen_down = false;
                    continue;
                }
                path.push_str(&format!("{}{:.2},{:.2} ", if pen_down { "L" } else { "M" }, sx(x), sy(y)));
                pen_down = true;
            }
            if !path.is_empty() {
                out.push_str(&format!(
                    "<path d=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\"/>\n",
                    path.trim_end(),
                    s.color
                ));
            }
            let ly = MARGIN + 14.0 + 14.0 * k as f64;
            out.push_str(&format!(
                "<line x1=\"{:.1}\" x2=\"{:.1}\" y1=\"{ly:.1}\" y2=\"{ly:.1}\" stroke=\"{}\" stroke-width=\"2\"/>\n<text x=\"{:.1}\" y=\"{:.1}\">{}</text>\n",
                MARGIN + 8.0,
                MARGIN + 26.0,
                s.color,
                MARGIN + 30.0,
                ly + 4.0,
                escape(&s.label)
            ));
        }
        out.push_str("</svg>\n");
        out
    }
}
