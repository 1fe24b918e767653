//! Minimal static SVG charts: line/marker plots and a heatmap.

use std::fmt::Write;

const W: f64 = 720.0;
const H: f64 = 460.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 30.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Style {
    Line,
    Markers,
    LineMarkers,
}

#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub style: Style,
}

impl Series {
    pub fn new(label: impl Into<String>, points: Vec<(f64, f64)>, style: Style) -> Self {
        Series {
            label: label.into(),
            points,
            style,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Axis {
    lo: f64,
    hi: f64,
    log: bool,
}

impl Axis {
    fn fit(values: impl Iterator<Item = f64>, log: bool) -> Axis {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in values.filter(|v| v.is_finite() && (!log || *v > 0.0)) {
            let v = if log { v.log10() } else { v };
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if !lo.is_finite() {
            (lo, hi) = (0.0, 1.0);
        }
        if hi - lo < 1e-12 {
            let pad = if lo == 0.0 { 1.0 } else { 0.1 * lo.abs() };
            (lo, hi) = (lo - pad, hi + pad);
        }
        let pad = 0.04 * (hi - lo);
        Axis {
            lo: lo - pad,
            hi: hi + pad,
            log,
        }
    }

    fn unit(&self, v: f64) -> Option<f64> {
        let v = if self.log {
            if v <= 0.0 {
                return None;
            }
            v.log10()
        } else {
            v
        };
        v.is_finite().then(|| (v - self.lo) / (self.hi - self.lo))
    }

    /// Tick positions in data units with labels.
    fn ticks(&self) -> Vec<(f64, String)> {
        if self.log {
            let (a, b) = (self.lo.ceil() as i32, self.hi.floor() as i32);
            let stride = ((b - a) / 8 + 1).max(1);
            return (a..=b)
                .step_by(stride as usize)
                .map(|e| (10f64.powi(e), format!("1e{e}")))
                .collect();
        }
        let raw = (self.hi - self.lo) / 6.0;
        let mag = 10f64.powf(raw.log10().floor());
        let step = [1.0, 2.0, 5.0, 10.0]
            .iter()
            .map(|m| m * mag)
            .find(|s| *s >= raw)
            .unwrap_or(10.0 * mag);
        let mut t = (self.lo / step).ceil() * step;
        let mut out = Vec::new();
        while t <= self.hi + 1e-9 * step {
            let v = if t.abs() < 1e-12 * step { 0.0 } else { t };
            out.push((v, fmt_tick(v)));
            t += step;
        }
        out
    }
}

fn fmt_tick(v: f64) -> String {
    if v != 0.0 && (v.abs() >= 1e4 || v.abs() < 1e-3) {
        format!("{v:.1e}")
    } else {
        let s = format!("{v:.4}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn header(out: &mut String, title: &str) {
    let _ = write!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = write!(out, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = write!(
        out,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
        W / 2.0,
        escape(title)
    );
}

fn frame(out: &mut String, xa: &Axis, ya: &Axis, x_label: &str, y_label: &str) {
    let (pw, ph) = (W - LEFT - RIGHT, H - TOP - BOTTOM);
    let _ = write!(
        out,
        r##"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="#333"/>"##
    );
    for (v, label) in xa.ticks() {
        if let Some(u) = xa.unit(v) {
            let x = LEFT + u * pw;
            let _ = write!(
                out,
                r##"<line x1="{x:.1}" y1="{:.1}" x2="{x:.1}" y2="{:.1}" stroke="#333"/><text x="{x:.1}" y="{:.1}" text-anchor="middle">{label}</text>"##,
                TOP + ph,
                TOP + ph + 5.0,
                TOP + ph + 19.0
            );
        }
    }
    for (v, label) in ya.ticks() {
        if let Some(u) = ya.unit(v) {
            let y = TOP + (1.0 - u) * ph;
            let _ = write!(
                out,
                r##"<line x1="{:.1}" y1="{y:.1}" x2="{LEFT}" y2="{y:.1}" stroke="#333"/><text x="{:.1}" y="{:.1}" text-anchor="end">{label}</text>"##,
                LEFT - 5.0,
                LEFT - 8.0,
                y + 4.0
            );
        }
    }
    let _ = write!(
        out,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
        LEFT + pw / 2.0,
        H - 18.0,
        escape(x_label)
    );
    let _ = write!(
        out,
        r#"<text transform="translate(18 {:.1}) rotate(-90)" text-anchor="middle">{}</text>"#,
        TOP + ph / 2.0,
        escape(y_label)
    );
}

/// Line and marker chart; non-positive values are dropped on log axes.
pub fn line_plot(title: &str, x_label: &str, y_label: &str, log_x: bool, log_y: bool, series: &[Series]) -> String {
    let xa = Axis::fit(series.iter().flat_map(|s| s.points.iter().map(|p| p.0)), log_x);
    let ya = Axis::fit(series.iter().flat_map(|s| s.points.iter().map(|p| p.1)), log_y);
    let (pw, ph) = (W - LEFT - RIGHT, H - TOP - BOTTOM);
    let mut out = String::new();
    header(&mut out, title);
    frame(&mut out, &xa, &ya, x_label, y_label);
    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let pts: Vec<(f64, f64)> = s
            .points
            .iter()
            .filter_map(|&(x, y)| Some((LEFT + xa.unit(x)? * pw, TOP + (1.0 - ya.unit(y)?) * ph)))
            .collect();
        if matches!(s.style, Style::Line | Style::LineMarkers) && pts.len() > 1 {
            let path: Vec<String> = pts.iter().map(|(x, y)| format!("{x:.1},{y:.1}")).collect();
            let _ = write!(
                out,
                r#"<polyline fill="none" stroke="{color}" stroke-width="1.8" points="{}"/>"#,
                path.join(" ")
            );
        }
        if matches!(s.style, Style::Markers | Style::LineMarkers) {
            for (x, y) in &pts {
                let _ = write!(out, r#"<circle cx="{x:.1}" cy="{y:.1}" r="3" fill="{color}"/>"#);
            }
        }
        let ly = TOP + 16.0 + 16.0 * i as f64;
        let _ = write!(
            out,
            r#"<rect x="{:.1}" y="{:.1}" width="12" height="3" fill="{color}"/><text x="{:.1}" y="{:.1}">{}</text>"#,
            LEFT + 12.0,
            ly - 4.0,
            LEFT + 30.0,
            ly,
            escape(&s.label)
        );
    }
    out.push_str("</svg>\n");
    out
}

/// Piecewise-linear approximation of the viridis colour map on `[0, 1]`.
fn viridis(t: f64) -> (u8, u8, u8) {
    const STOPS: [(f64, f64, f64); 5] = [
        (68.0, 1.0, 84.0),
        (59.0, 82.0, 139.0),
        (33.0, 145.0, 140.0),
        (94.0, 201.0, 98.0),
        (253.0, 231.0, 37.0),
    ];
    let t = t.clamp(0.0, 1.0) * (STOPS.len() - 1) as f64;
    let i = (t.floor() as usize).min(STOPS.len() - 2);
    let s = t - i as f64;
    let (a, b) = (STOPS[i], STOPS[i + 1]);
    let mix = |u: f64, v: f64| (u + s * (v - u)).round() as u8;
    (mix(a.0, b.0), mix(a.1, b.1), mix(a.2, b.2))
}

/// Heatmap of `values` on a `side × side` grid, row-major with the second
/// coordinate fastest, coloured by `log10` of the value.
pub fn heatmap(title: &str, side: usize, lo: [f64; 2], hi: [f64; 2], values: &[f64]) -> String {
    let logs: Vec<f64> = values.iter().map(|v| if *v > 0.0 { v.log10() } else { f64::NAN }).collect();
    let finite = logs.iter().copied().filter(|v| v.is_finite());
    let (vmin, vmax) = finite.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    let (vmin, vmax) = if vmin.is_finite() { (vmin, vmax.max(vmin + 1e-12)) } else { (0.0, 1.0) };
    let xa = Axis { lo: lo[0], hi: hi[0], log: false };
    let ya = Axis { lo: lo[1], hi: hi[1], log: false };
    let (pw, ph) = (W - LEFT - RIGHT - 70.0, H - TOP - BOTTOM);
    let mut out = String::new();
    header(&mut out, title);
    let (cw, chh) = (pw / side as f64, ph / side as f64);
    for i in 0..side {
        for j in 0..side {
            let v = logs[i * side + j];
            let fill = if v.is_finite() {
                let (r, g, b) = viridis((v - vmin) / (vmax - vmin));
                format!("rgb({r},{g},{b})")
            } else {
                "#cccccc".to_string()
            };
            let _ = write!(
                out,
                r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{fill}"/>"#,
                LEFT + i as f64 * cw,
                TOP + (side - 1 - j) as f64 * chh,
                cw + 0.3,
                chh + 0.3
            );
        }
    }
    let _ = write!(
        out,
        r##"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="#333"/>"##
    );
    for (v, label) in xa.ticks() {
        let x = LEFT + (v - xa.lo) / (xa.hi - xa.lo) * pw;
        let _ = write!(
            out,
            r#"<text x="{x:.1}" y="{:.1}" text-anchor="middle">{label}</text>"#,
            TOP + ph + 19.0
        );
    }
    for (v, label) in ya.ticks() {
        let y = TOP + (1.0 - (v - ya.lo) / (ya.hi - ya.lo)) * ph;
        let _ = write!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{label}</text>"#,
            LEFT - 8.0,
            y + 4.0
        );
    }
    let _ = write!(
        out,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">x1</text><text x="24" y="{:.1}">x2</text>"#,
        LEFT + pw / 2.0,
        H - 18.0,
        TOP + ph / 2.0
    );
    // colour bar
    let bx = LEFT + pw + 20.0;
    for k in 0..50 {
        let t = k as f64 / 49.0;
        let (r, g, b) = viridis(t);
        let _ = write!(
            out,
            r#"<rect x="{bx:.1}" y="{:.2}" width="16" height="{:.2}" fill="rgb({r},{g},{b})"/>"#,
            TOP + (1.0 - t) * (ph - ph / 50.0),
            ph / 50.0 + 0.3
        );
    }
    let _ = write!(
        out,
        r#"<text x="{:.1}" y="{:.1}">{:.2}</text><text x="{:.1}" y="{:.1}">{:.2}</text><text x="{:.1}" y="{:.1}">log10</text>"#,
        bx + 20.0,
        TOP + 10.0,
        vmax,
        bx + 20.0,
        TOP + ph,
        vmin,
        bx,
        TOP - 6.0
    );
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_plot_is_well_formed() {
        let s = line_plot(
            "t",
            "x",
            "y",
            true,
            true,
            &[Series::new("a", vec![(1.0, 1.0), (10.0, 100.0), (0.0, 3.0)], Style::LineMarkers)],
        );
        assert!(s.starts_with("<svg") && s.trim_end().ends_with("</svg>"));
        assert_eq!(s.matches("<circle").count(), 2);
    }

    #[test]
    fn heatmap_has_one_cell_per_value() {
        let v: Vec<f64> = (0..9).map(|i| i as f64).collect();
        let s = heatmap("h", 3, [-1.0, -1.0], [1.0, 1.0], &v);
        assert!(s.contains("#cccccc"));
        assert!(s.matches("<rect").count() >= 9 + 50);
    }

    #[test]
    fn viridis_endpoints() {
        assert_eq!(viridis(0.0), (68, 1, 84));
        assert_eq!(viridis(1.0), (253, 231, 37));
    }
}
