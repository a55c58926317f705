//! Minimal SVG line plots: axes, ticks, polylines and a legend.

use std::fmt::Write;

#[derive(Clone, Debug)]
pub struct Series {
    pub name: String,
    pub color: String,
    pub points: Vec<(f64, f64)>,
}

impl Series {
    pub fn new(name: impl Into<String>, color: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Series {
            name: name.into(),
            color: color.into(),
            points,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Plot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_x: bool,
    pub series: Vec<Series>,
}

const W: f64 = 720.0;
const H: f64 = 450.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 55.0;

fn nice_ticks(lo: f64, hi: f64, target: usize) -> Vec<f64> {
    let span = hi - lo;
    if !(span > 0.0) {
        return vec![lo];
    }
    let raw = span / target as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| span / s <= target as f64)
        .unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|k| k as f64 * step).collect()
}

fn fmt_tick(v: f64) -> String {
    let s = format!("{v:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".into() } else { s.to_string() }
}

impl Plot {
    pub fn new(title: impl Into<String>, x_label: impl Into<String>, y_label: impl Into<String>) -> Self {
        Plot {
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            log_x: false,
            series: Vec::new(),
        }
    }

    pub fn log_x(mut self, on: bool) -> Self {
        self.log_x = on;
        self
    }

    pub fn with_series(mut self, s: Series) -> Self {
        self.series.push(s);
        self
    }

    pub fn render(&self) -> String {
        let tx = |x: f64| if self.log_x { x.log10() } else { x };
        let pts = || {
            self.series
                .iter()
                .flat_map(|s| s.points.iter())
                .filter(|(x, y)| y.is_finite() && x.is_finite() && (!self.log_x || *x > 0.0))
        };
        let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for &(x, y) in pts() {
            x0 = x0.min(tx(x));
            x1 = x1.max(tx(x));
            y0 = y0.min(y);
            y1 = y1.max(y);
        }
        if !x0.is_finite() {
            (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
        }
        if x1 <= x0 {
            x1 = x0 + 1.0;
        }
        let pad = 0.05 * (y1 - y0).max(1e-9);
        let (y0, y1) = (y0 - pad, y1 + pad);
        let px = |x: f64| LEFT + (tx(x) - x0) / (x1 - x0) * (W - LEFT - RIGHT);
        let py = |y: f64| H - BOTTOM - (y - y0) / (y1 - y0) * (H - TOP - BOTTOM);

        let mut out = String::new();
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(out, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
        let _ = writeln!(
            out,
            r#"<text x="{}" y="22" text-anchor="middle" font-size="15">{}</text>"#,
            W / 2.0,
            escape(&self.title)
        );
        let (bx0, bx1, by0, by1) = (LEFT, W - RIGHT, TOP, H - BOTTOM);
        let _ = writeln!(
            out,
            r#"<rect x="{bx0}" y="{by0}" width="{}" height="{}" fill="none" stroke="black"/>"#,
            bx1 - bx0,
            by1 - by0
        );
        let xticks: Vec<(f64, String)> = if self.log_x {
            nice_ticks(x0, x1, 6)
                .into_iter()
                .filter(|e| e.fract() == 0.0)
                .map(|e| (10f64.powf(e), fmt_tick(10f64.powf(e))))
                .collect()
        } else {
            nice_ticks(x0, x1, 8).into_iter().map(|v| (v, fmt_tick(v))).collect()
        };
        for (v, label) in xticks {
            let x = px(v);
            let _ = writeln!(
                out,
                r##"<line x1="{x:.1}" y1="{by1}" x2="{x:.1}" y2="{by0}" stroke="#ddd"/><text x="{x:.1}" y="{}" text-anchor="middle">{label}</text>"##,
                by1 + 16.0
            );
        }
        for v in nice_ticks(y0, y1, 8) {
            let y = py(v);
            let _ = writeln!(
                out,
                r##"<line x1="{bx0}" y1="{y:.1}" x2="{bx1}" y2="{y:.1}" stroke="#ddd"/><text x="{}" y="{:.1}" text-anchor="end">{}</text>"##,
                bx0 - 6.0,
                y + 4.0,
                fmt_tick(v)
            );
        }
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            (bx0 + bx1) / 2.0,
            H - 12.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            out,
            r#"<text x="18" y="{}" text-anchor="middle" transform="rotate(-90 18 {})">{}</text>"#,
            (by0 + by1) / 2.0,
            (by0 + by1) / 2.0,
            escape(&self.y_label)
        );
        for (k, s) in self.series.iter().enumerate() {
            let mut path = String::new();
            for &(x, y) in s.points.iter().filter(|(x, y)| y.is_finite() && (!self.log_x || *x > 0.0)) {
                let _ = write!(path, "{:.2},{:.2} ", px(x), py(y));
            }
            let _ = writeln!(
                out,
                r#"<polyline fill="none" stroke="{}" stroke-width="1.5" points="{}"/>"#,
                s.color,
                path.trim_end()
            );
            let ly = by0 + 16.0 + 16.0 * k as f64;
            let _ = writeln!(
                out,
                r#"<line x1="{}" y1="{ly}" x2="{}" y2="{ly}" stroke="{}" stroke-width="2"/><text x="{}" y="{}">{}</text>"#,
                bx1 - 150.0,
                bx1 - 130.0,
                s.color,
                bx1 - 125.0,
                ly + 4.0,
                escape(&s.name)
            );
        }
        out.push_str("</svg>\n");
        out
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_well_formed_document() {
        let svg = Plot::new("S<->", "f [MHz]", "dB")
            .with_series(Series::new("a", "red", vec![(1.0, -5.0), (50.0, -0.5)]))
            .with_series(Series::new("b", "blue", vec![(1.0, 15.0), (50.0, 2.0), (60.0, f64::NAN)]))
            .render();
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains("S&lt;-&gt;"));
        assert!(!svg.contains("NaN"));
    }

    #[test]
    fn log_axis_and_empty_plot() {
        let svg = Plot::new("t", "x", "y")
            .log_x(true)
            .with_series(Series::new("a", "red", vec![(1e5, 0.0), (1e8, 1.0), (0.0, 2.0)]))
            .render();
        assert!(svg.contains(">1000000<"));
        assert!(Plot::new("t", "x", "y").render().contains("</svg>"));
    }

    #[test]
    fn ticks_cover_range() {
        let t = nice_ticks(-5.3, 17.9, 8);
        assert!(t.first().unwrap() >= &-5.3 && t.last().unwrap() <= &17.9);
        assert!(t.len() >= 4);
    }
}
