//! Minimal static SVG plots: line/marker series on linear or log axes and
//! closed polygons.

use std::fmt::Write;

const W: f64 = 640.0;
const H: f64 = 440.0;
const PAD_L: f64 = 72.0;
const PAD_R: f64 = 150.0;
const PAD_T: f64 = 36.0;
const PAD_B: f64 = 52.0;
const COLORS: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#7f7f7f"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Style {
    Line,
    Markers,
    Both,
    /// Closed polygon outline.
    Polygon,
}

#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub points: Vec<[f64; 2]>,
    pub style: Style,
}

impl Series {
    pub fn new(label: impl Into<String>, points: Vec<[f64; 2]>, style: Style) -> Series {
        Series { label: label.into(), points, style }
    }
}

#[derive(Debug, Clone)]
pub struct Plot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_x: bool,
    pub log_y: bool,
    /// Same scale on both axes (section overlays).
    pub equal: bool,
    pub series: Vec<Series>,
}

impl Plot {
    pub fn new(title: &str, x_label: &str, y_label: &str) -> Plot {
        Plot {
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            log_x: false,
            log_y: false,
            equal: false,
            series: Vec::new(),
        }
    }

    pub fn log_log(mut self) -> Plot {
        self.log_x = true;
        self.log_y = true;
        self
    }

    pub fn with(mut self, s: Series) -> Plot {
        self.series.push(s);
        self
    }

    fn tx(&self, p: [f64; 2]) -> Option<[f64; 2]> {
        let x = if self.log_x { p[0].log10() } else { p[0] };
        let y = if self.log_y { p[1].log10() } else { p[1] };
        (x.is_finite() && y.is_finite()).then_some([x, y])
    }

    pub fn render(&self) -> String {
        let pts: Vec<[f64; 2]> = self.series.iter().flat_map(|s| s.points.iter().filter_map(|&p| self.tx(p))).collect();
        let (mut x0, mut x1, mut y0, mut y1) = pts.iter().fold(
            (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY),
            |(a, b, c, d), p| (a.min(p[0]), b.max(p[0]), c.min(p[1]), d.max(p[1])),
        );
        if pts.is_empty() {
            (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
        }
        let widen = |lo: &mut f64, hi: &mut f64| {
            let span = *hi - *lo;
            let m = if span > 0.0 { 0.05 * span } else { 0.5 * lo.abs().max(1.0) };
            *lo -= m;
            *hi += m;
        };
        widen(&mut x0, &mut x1);
        widen(&mut y0, &mut y1);
        let (pw, ph) = (W - PAD_L - PAD_R, H - PAD_T - PAD_B);
        if self.equal {
            let (sx, sy) = ((x1 - x0) / pw, (y1 - y0) / ph);
            let s = sx.max(sy);
            let (cx, cy) = (0.5 * (x0 + x1), 0.5 * (y0 + y1));
            (x0, x1, y0, y1) = (cx - 0.5 * s * pw, cx + 0.5 * s * pw, cy - 0.5 * s * ph, cy + 0.5 * s * ph);
        }
        let sx = |x: f64| PAD_L + (x - x0) / (x1 - x0) * pw;
        let sy = |y: f64| PAD_T + (y1 - y) / (y1 - y0) * ph;

        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
        let _ = writeln!(s, r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#, W / 2.0, esc(&self.title));
        let _ = writeln!(s, r#"<rect x="{PAD_L}" y="{PAD_T}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#);
        for (lo, hi, log, horizontal) in [(x0, x1, self.log_x, true), (y0, y1, self.log_y, false)] {
            for t in ticks(lo, hi) {
                let label = if log { format!("1e{}", fmt_tick(t)) } else { fmt_tick(t) };
                if horizontal {
                    let x = sx(t);
                    let _ = writeln!(s, r##"<line x1="{x:.2}" y1="{PAD_T}" x2="{x:.2}" y2="{:.2}" stroke="#e0e0e0"/>"##, PAD_T + ph);
                    let _ = writeln!(s, r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{label}</text>"#, PAD_T + ph + 16.0);
                } else {
                    let y = sy(t);
                    let _ = writeln!(s, r##"<line x1="{PAD_L}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#e0e0e0"/>"##, PAD_L + pw);
                    let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{label}</text>"#, PAD_L - 6.0, y + 4.0);
                }
            }
        }
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, PAD_L + pw / 2.0, H - 10.0, esc(&self.x_label));
        let _ = writeln!(
            s,
            r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">{}</text>"#,
            PAD_T + ph / 2.0,
            PAD_T + ph / 2.0,
            esc(&self.y_label)
        );
        for (k, series) in self.series.iter().enumerate() {
            let c = COLORS[k % COLORS.len()];
            let p: Vec<[f64; 2]> = series.points.iter().filter_map(|&p| self.tx(p)).map(|p| [sx(p[0]), sy(p[1])]).collect();
            let path: Vec<String> = p.iter().map(|q| format!("{:.2},{:.2}", q[0], q[1])).collect();
            match series.style {
                Style::Line | Style::Both => {
                    let _ = writeln!(s, r#"<polyline points="{}" fill="none" stroke="{c}" stroke-width="1.5"/>"#, path.join(" "));
                }
                Style::Polygon => {
                    let _ = writeln!(s, r#"<polygon points="{}" fill="none" stroke="{c}" stroke-width="1.2"/>"#, path.join(" "));
                }
                Style::Markers => {}
            }
            if matches!(series.style, Style::Markers | Style::Both) {
                for q in &p {
                    let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{c}"/>"#, q[0], q[1]);
                }
            }
            let ly = PAD_T + 14.0 + 18.0 * k as f64;
            let lx = PAD_L + pw + 10.0;
            let _ = writeln!(s, r#"<line x1="{lx:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{c}" stroke-width="2"/>"#, ly - 4.0, lx + 18.0, ly - 4.0);
            let _ = writeln!(s, r#"<text x="{:.2}" y="{ly:.2}">{}</text>"#, lx + 24.0, esc(&series.label));
        }
        s.push_str("</svg>\n");
        s
    }
}

fn esc(t: &str) -> String {
    t.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn fmt_tick(t: f64) -> String {
    let r = (t * 1e6).round() / 1e6;
    let s = format!("{r}");
    if s == "-0" {
        "0".into()
    } else {
        s
    }
}

/// About five round tick positions covering `[lo, hi]`.
fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let raw = (hi - lo) / 5.0;
    if !(raw > 0.0) {
        return vec![lo];
    }
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| *s >= raw).unwrap_or(10.0 * mag);
    let mut t = (lo / step).ceil() * step;
    let mut out = Vec::new();
    while t <= hi + 1e-12 * step {
        out.push(t);
        t += step;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ticks_are_round() {
        let t = ticks(0.0, 1.0);
        assert_eq!(t.len(), 6);
        assert!(t.iter().enumerate().all(|(i, v)| (v - 0.2 * i as f64).abs() < 1e-12));
        assert_eq!(fmt_tick(t[3]), "0.6");
    }

    #[test]
    fn render_skips_nonpositive_on_log_axes() {
        let p = Plot::new("t", "x", "y").log_log().with(Series::new("s", vec![[1.0, 1.0], [0.0, 2.0], [10.0, 100.0]], Style::Both));
        let svg = p.render();
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
        assert_eq!(svg.matches("<circle").count(), 2);
    }
}
