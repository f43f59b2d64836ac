//! Minimal deterministic SVG bar charts. Identical input gives
//! byte-identical output: fixed layout, fixed palette, fixed number format.

use std::fmt::Write;

const WIDTH: f64 = 820.0;
const HEIGHT: f64 = 440.0;
const LEFT: f64 = 90.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 50.0;
const BOTTOM: f64 = 60.0;
const PALETTE: [&str; 8] = ["#4c72b0", "#dd8452", "#55a868", "#c44e52", "#8172b3", "#937860", "#da8bc3", "#8c8c8c"];

/// Horizontal marker across one group, e.g. a baseline detector.
#[derive(Debug, Clone, PartialEq)]
pub struct Reference {
    pub group: usize,
    pub value: f64,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BarChart {
    pub title: String,
    pub y_label: String,
    pub groups: Vec<String>,
    pub series: Vec<String>,
    /// `values[group][series]`; `None` leaves a gap.
    pub values: Vec<Vec<Option<f64>>>,
    pub log_scale: bool,
    pub references: Vec<Reference>,
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn fmt_value(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() >= 1e4 || v.abs() < 1e-2 {
        format!("{v:.2e}")
    } else {
        format!("{v:.3}")
    }
}

struct Axis {
    lo: f64,
    hi: f64,
    log: bool,
}

impl Axis {
    fn new(values: &[f64], log: bool) -> Self {
        if log {
            let pos: Vec<f64> = values.iter().copied().filter(|v| *v > 0.0).collect();
            let (mn, mx) = pos.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
            if pos.is_empty() {
                return Self { lo: -1.0, hi: 0.0, log };
            }
            let lo = mn.log10().floor();
            let hi = mx.log10().ceil().max(lo + 1.0);
            Self { lo, hi, log }
        } else {
            let mx = values.iter().copied().fold(0.0, f64::max);
            Self { lo: 0.0, hi: if mx > 0.0 { mx * 1.1 } else { 1.0 }, log }
        }
    }

    /// Fraction of the plot height, clamped to `[0, 1]`.
    fn frac(&self, v: f64) -> f64 {
        let t = if self.log {
            if v <= 0.0 {
                return 0.0;
            }
            (v.log10() - self.lo) / (self.hi - self.lo)
        } else {
            (v - self.lo) / (self.hi - self.lo)
        };
        t.clamp(0.0, 1.0)
    }

    fn ticks(&self) -> Vec<(f64, String)> {
        if self.log {
            (self.lo as i32..=self.hi as i32).map(|e| (10f64.powi(e), format!("1e{e}"))).collect()
        } else {
            (0..=5).map(|i| {
                let v = self.lo + (self.hi - self.lo) * i as f64 / 5.0;
                (v, fmt_value(v))
            })
            .collect()
        }
    }
}

pub fn grouped_bar_chart(c: &BarChart) -> String {
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let mut all: Vec<f64> = c.values.iter().flatten().flatten().copied().collect();
    all.extend(c.references.iter().map(|r| r.value));
    let axis = Axis::new(&all, c.log_scale);
    let y = |v: f64| TOP + plot_h * (1.0 - axis.frac(v));

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r##"<rect width="{WIDTH}" height="{HEIGHT}" fill="#ffffff"/>"##);
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="28" text-anchor="middle" font-size="15">{}</text>"#,
        LEFT + plot_w / 2.0,
        esc(&c.title)
    );
    let _ = writeln!(
        s,
        r#"<text x="18" y="{:.1}" text-anchor="middle" transform="rotate(-90 18 {:.1})">{}{}</text>"#,
        TOP + plot_h / 2.0,
        TOP + plot_h / 2.0,
        esc(&c.y_label),
        if c.log_scale { " (log scale)" } else { "" }
    );
    for (v, label) in axis.ticks() {
        let ty = y(v);
        let _ = writeln!(
            s,
            r##"<line x1="{LEFT:.1}" y1="{ty:.1}" x2="{:.1}" y2="{ty:.1}" stroke="#dddddd"/>"##,
            LEFT + plot_w
        );
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{label}</text>"#, LEFT - 6.0, ty + 4.0);
    }
    let _ = writeln!(
        s,
        r##"<line x1="{LEFT:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="#000000"/>"##,
        TOP + plot_h,
        LEFT + plot_w,
        TOP + plot_h
    );
    let _ = writeln!(s, r##"<line x1="{LEFT:.1}" y1="{TOP:.1}" x2="{LEFT:.1}" y2="{:.1}" stroke="#000000"/>"##, TOP + plot_h);

    let n_groups = c.groups.len().max(1);
    let group_w = plot_w / n_groups as f64;
    let n_series = c.series.len().max(1);
    let bar_w = group_w * 0.8 / n_series as f64;
    for (g, label) in c.groups.iter().enumerate() {
        let gx = LEFT + group_w * g as f64;
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            gx + group_w / 2.0,
            TOP + plot_h + 20.0,
            esc(label)
        );
        for (k, v) in c.values.get(g).into_iter().flatten().enumerate() {
            let Some(v) = *v else { continue };
            let x = gx + group_w * 0.1 + bar_w * k as f64;
            let top = y(v);
            let color = PALETTE[k % PALETTE.len()];
            let _ = writeln!(
                s,
                r#"<rect x="{x:.1}" y="{top:.1}" width="{bar_w:.1}" height="{:.1}" fill="{color}"><title>{}: {}</title></rect>"#,
                TOP + plot_h - top,
                esc(c.series.get(k).map_or("", String::as_str)),
                fmt_value(v)
            );
            let _ = writeln!(
                s,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-size="9">{}</text>"#,
                x + bar_w / 2.0,
                top - 3.0,
                fmt_value(v)
            );
        }
    }
    for r in &c.references {
        let gx = LEFT + group_w * r.group as f64;
        let ry = y(r.value);
        let _ = writeln!(
            s,
            r##"<line x1="{:.1}" y1="{ry:.1}" x2="{:.1}" y2="{ry:.1}" stroke="#000000" stroke-dasharray="6 3"><title>{}: {}</title></line>"##,
            gx + group_w * 0.05,
            gx + group_w * 0.95,
            esc(&r.label),
            fmt_value(r.value)
        );
    }

    let lx = LEFT + plot_w + 16.0;
    for (k, name) in c.series.iter().enumerate() {
        let ly = TOP + 10.0 + 20.0 * k as f64;
        let _ = writeln!(
            s,
            r#"<rect x="{lx:.1}" y="{:.1}" width="12" height="12" fill="{}"/>"#,
            ly - 10.0,
            PALETTE[k % PALETTE.len()]
        );
        let _ = writeln!(s, r#"<text x="{:.1}" y="{ly:.1}">{}</text>"#, lx + 18.0, esc(name));
    }
    if let Some(r) = c.references.first() {
        let ly = TOP + 10.0 + 20.0 * c.series.len() as f64;
        let _ = writeln!(
            s,
            r##"<line x1="{lx:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="#000000" stroke-dasharray="6 3"/>"##,
            ly - 4.0,
            lx + 12.0,
            ly - 4.0
        );
        let _ = writeln!(s, r#"<text x="{:.1}" y="{ly:.1}">{}</text>"#, lx + 18.0, esc(&r.label));
    }
    s.push_str("</svg>\n");
    s
}
