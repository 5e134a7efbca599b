//! Static line plots written directly as SVG.

use std::fmt::Write;

const PANEL_W: f64 = 900.0;
const PANEL_H: f64 = 320.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 170.0;
const MARGIN_T: f64 = 34.0;
const MARGIN_B: f64 = 46.0;
/// Longer series are decimated to roughly this many points.
const MAX_POINTS: usize = 3000;

const PALETTE: [&str; 10] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
];

#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub dashed: bool,
    /// Palette index; defaults to the series position.
    pub color: Option<usize>,
}

impl Series {
    pub fn new(label: impl Into<String>, x: Vec<f64>, y: Vec<f64>) -> Self {
        Self {
            label: label.into(),
            x,
            y,
            dashed: false,
            color: None,
        }
    }

    pub fn dashed(mut self) -> Self {
        self.dashed = true;
        self
    }

    pub fn color(mut self, index: usize) -> Self {
        self.color = Some(index);
        self
    }
}

#[derive(Debug, Clone, Default)]
pub struct Panel {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_x: bool,
    pub series: Vec<Series>,
    /// Vertical markers `(x, label)`.
    pub markers: Vec<(f64, String)>,
}

impl Panel {
    pub fn new(title: &str, x_label: &str, y_label: &str) -> Self {
        Self {
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            ..Default::default()
        }
    }

    pub fn log_x(mut self) -> Self {
        self.log_x = true;
        self
    }

    pub fn with(mut self, s: Series) -> Self {
        self.series.push(s);
        self
    }

    pub fn marker(mut self, x: f64, label: impl Into<String>) -> Self {
        self.markers.push((x, label.into()));
        self
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn tick_label(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let a = v.abs();
    if !(1e-3..1e5).contains(&a) {
        return format!("{v:.0e}");
    }
    let s = format!("{v:.4}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

fn nice_step(span: f64, target: usize) -> f64 {
    let raw = span / target as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let norm = raw / mag;
    let step = if norm < 1.5 {
        1.0
    } else if norm < 3.5 {
        2.0
    } else if norm < 7.5 {
        5.0
    } else {
        10.0
    };
    step * mag
}

fn linear_ticks(lo: f64, hi: f64) -> Vec<f64> {
    let step = nice_step(hi - lo, 6);
    let mut t = (lo / step).ceil() * step;
    let mut out = Vec::new();
    while t <= hi + 1e-9 * step {
        out.push(if t.abs() < 1e-12 * step { 0.0 } else { t });
        t += step;
    }
    out
}

fn range(values: impl Iterator<Item = f64>) -> Option<(f64, f64)> {
    values
        .filter(|v| v.is_finite())
        .fold(None, |acc, v| match acc {
            None => Some((v, v)),
            Some((lo, hi)) => Some((lo.min(v), hi.max(v))),
        })
}

fn padded(lo: f64, hi: f64) -> (f64, f64) {
    if hi > lo {
        let pad = 0.05 * (hi - lo);
        (lo - pad, hi + pad)
    } else {
        let w = if lo == 0.0 { 1.0 } else { 0.1 * lo.abs() };
        (lo - w, hi + w)
    }
}

fn render_panel(out: &mut String, panel: &Panel, top: f64) {
    let pw = PANEL_W - MARGIN_L - MARGIN_R;
    let ph = PANEL_H - MARGIN_T - MARGIN_B;
    let (x0, y0) = (MARGIN_L, top + MARGIN_T);

    let fx = |x: f64| if panel.log_x { x.log10() } else { x };
    let xs = panel.series.iter().flat_map(|s| s.x.iter().copied()).filter(|x| !panel.log_x || *x > 0.0);
    let (xlo, xhi) = range(xs.map(fx)).unwrap_or((0.0, 1.0));
    let (xlo, xhi) = if xhi > xlo { (xlo, xhi) } else { (xlo - 0.5, xhi + 0.5) };
    let (ylo, yhi) = padded_range(panel);

    let px = |x: f64| x0 + (fx(x) - xlo) / (xhi - xlo) * pw;
    let py = |y: f64| y0 + ph - (y - ylo) / (yhi - ylo) * ph;

    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" font-size="15" font-weight="bold">{}</text>"#,
        x0,
        top + 20.0,
        escape(&panel.title)
    );
    let _ = writeln!(
        out,
        r##"<rect x="{x0:.1}" y="{y0:.1}" width="{pw:.1}" height="{ph:.1}" fill="white" stroke="#333"/>"##
    );

    let xticks: Vec<f64> = if panel.log_x {
        (xlo.ceil() as i32..=xhi.floor() as i32).map(|e| 10f64.powi(e)).collect()
    } else {
        linear_ticks(xlo, xhi)
    };
    for t in xticks {
        let x = px(t);
        let _ = writeln!(
            out,
            r##"<line x1="{x:.1}" y1="{y0:.1}" x2="{x:.1}" y2="{:.1}" stroke="#ddd"/><text x="{x:.1}" y="{:.1}" font-size="11" text-anchor="middle">{}</text>"##,
            y0 + ph,
            y0 + ph + 15.0,
            tick_label(t)
        );
    }
    for t in linear_ticks(ylo, yhi) {
        let y = py(t);
        let _ = writeln!(
            out,
            r##"<line x1="{x0:.1}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="#ddd"/><text x="{:.1}" y="{:.1}" font-size="11" text-anchor="end">{}</text>"##,
            x0 + pw,
            x0 - 5.0,
            y + 4.0,
            tick_label(t)
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" font-size="12" text-anchor="middle">{}</text>"#,
        x0 + pw / 2.0,
        y0 + ph + 34.0,
        escape(&panel.x_label)
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" font-size="12" text-anchor="middle" transform="rotate(-90 {:.1} {:.1})">{}</text>"#,
        x0 - 50.0,
        y0 + ph / 2.0,
        x0 - 50.0,
        y0 + ph / 2.0,
        escape(&panel.y_label)
    );

    for (i, s) in panel.series.iter().enumerate() {
        let color = PALETTE[s.color.unwrap_or(i) % PALETTE.len()];
        let stride = s.x.len().div_ceil(MAX_POINTS).max(1);
        let mut points = String::new();
        for (k, (&x, &y)) in s.x.iter().zip(&s.y).enumerate() {
            let last = k + 1 == s.x.len();
            if (k % stride != 0 && !last) || !y.is_finite() || (panel.log_x && x <= 0.0) {
                continue;
            }
            let _ = write!(points, "{:.2},{:.2} ", px(x), py(y));
        }
        let dash = if s.dashed { r#" stroke-dasharray="6 4""# } else { "" };
        let _ = writeln!(
            out,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.4"{dash} points="{}"/>"#,
            points.trim_end()
        );
        let ly = y0 + 12.0 + 16.0 * i as f64;
        let lx = x0 + pw + 12.0;
        let _ = writeln!(
            out,
            r#"<line x1="{lx:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{color}" stroke-width="2"{dash}/><text x="{:.1}" y="{:.1}" font-size="11">{}</text>"#,
            lx + 22.0,
            lx + 27.0,
            ly + 4.0,
            escape(&s.label)
        );
    }
    for (x, label) in &panel.markers {
        if panel.log_x && *x <= 0.0 {
            continue;
        }
        let xp = px(*x);
        let _ = writeln!(
            out,
            r##"<line x1="{xp:.1}" y1="{y0:.1}" x2="{xp:.1}" y2="{:.1}" stroke="#000" stroke-dasharray="3 3"/><text x="{:.1}" y="{:.1}" font-size="11">{}</text>"##,
            y0 + ph,
            xp + 4.0,
            y0 + 14.0,
            escape(label)
        );
    }
}

fn padded_range(panel: &Panel) -> (f64, f64) {
    let ys = panel.series.iter().flat_map(|s| {
        s.x.iter()
            .zip(&s.y)
            .filter(|(x, _)| !panel.log_x || **x > 0.0)
            .map(|(_, y)| *y)
    });
    let (lo, hi) = range(ys).unwrap_or((0.0, 1.0));
    padded(lo, hi)
}

/// Stacks the panels vertically into one SVG document.
pub fn render(panels: &[Panel]) -> String {
    let height = PANEL_H * panels.len().max(1) as f64;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{PANEL_W:.0}" height="{height:.0}" viewBox="0 0 {PANEL_W:.0} {height:.0}" font-family="sans-serif">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for (i, p) in panels.iter().enumerate() {
        render_panel(&mut out, p, i as f64 * PANEL_H);
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ticks_are_round() {
        assert_eq!(linear_ticks(0.0, 10.0), vec![0.0, 2.0, 4.0, 6.0, 8.0, 10.0]);
        assert_eq!(tick_label(0.5), "0.5");
        assert_eq!(tick_label(20.0), "20");
    }

    #[test]
    fn escapes_text_and_is_deterministic() {
        let p = Panel::new("a < b & c", "t", "v").with(Series::new("s", vec![0.0, 1.0], vec![1.0, 2.0]));
        let a = render(std::slice::from_ref(&p));
        assert!(a.contains("a &lt; b &amp; c"));
        assert_eq!(a, render(&[p]));
        assert!(a.starts_with("<svg") && a.trim_end().ends_with("</svg>"));
    }

    #[test]
    fn long_series_are_decimated() {
        let n = 30_000;
        let x: Vec<f64> = (0..n).map(|k| k as f64).collect();
        let p = Panel::new("t", "x", "y").with(Series::new("s", x.clone(), x));
        let svg = render(&[p]);
        let points = svg.split("points=\"").nth(1).unwrap().split('"').next().unwrap();
        assert!(points.split(' ').count() <= MAX_POINTS + 1);
    }

    #[test]
    fn log_axis_skips_nonpositive() {
        let p = Panel::new("bode", "w", "dB")
            .log_x()
            .with(Series::new("g", vec![0.0, 0.1, 1.0, 10.0], vec![5.0, 1.0, 0.0, -20.0]))
            .marker(5.0, "crossover");
        let svg = render(&[p]);
        assert!(svg.contains("crossover"));
        assert!(!svg.contains("NaN") && !svg.contains("inf"));
    }
}
