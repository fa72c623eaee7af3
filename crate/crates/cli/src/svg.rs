//! Bare-bones static SVG rendering: stacked line panels and a labelled
//! heat map.

use std::fmt::Write;

const WIDTH: f64 = 760.0;
const PANEL_HEIGHT: f64 = 220.0;
const LEFT: f64 = 90.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 45.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

pub struct Panel {
    pub y_label: String,
    pub series: Vec<Series>,
}

fn fmt_tick(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if (1e-2..1e4).contains(&v.abs()) {
        format!("{v:.3}")
    } else {
        format!("{v:.2e}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if lo == hi {
        let pad = if lo == 0.0 { 1.0 } else { lo.abs() * 0.1 };
        return (lo - pad, hi + pad);
    }
    (lo, hi)
}

struct Frame {
    x0: f64,
    y0: f64,
    w: f64,
    h: f64,
    x_range: (f64, f64),
    y_range: (f64, f64),
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        self.x0 + (x - self.x_range.0) / (self.x_range.1 - self.x_range.0) * self.w
    }

    fn py(&self, y: f64) -> f64 {
        self.y0 + self.h - (y - self.y_range.0) / (self.y_range.1 - self.y_range.0) * self.h
    }

    fn axes(&self, out: &mut String, x_label: &str, y_label: &str) {
        let (x0, y0, w, h) = (self.x0, self.y0, self.w, self.h);
        let _ = writeln!(
            out,
            r##"<rect x="{x0:.1}" y="{y0:.1}" width="{w:.1}" height="{h:.1}" fill="none" stroke="#333"/>"##
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" font-size="11" text-anchor="start">{}</text>"#,
            x0,
            y0 + h + 15.0,
            fmt_tick(self.x_range.0)
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" font-size="11" text-anchor="end">{}</text>"#,
            x0 + w,
            y0 + h + 15.0,
            fmt_tick(self.x_range.1)
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" font-size="12" text-anchor="middle">{}</text>"#,
            x0 + w / 2.0,
            y0 + h + 32.0,
            escape(x_label)
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" font-size="11" text-anchor="end">{}</text>"#,
            x0 - 4.0,
            y0 + h,
            fmt_tick(self.y_range.0)
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" font-size="11" text-anchor="end">{}</text>"#,
            x0 - 4.0,
            y0 + 10.0,
            fmt_tick(self.y_range.1)
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" font-size="12" text-anchor="middle" transform="rotate(-90 {:.1} {:.1})">{}</text>"#,
            x0 - 60.0,
            y0 + h / 2.0,
            x0 - 60.0,
            y0 + h / 2.0,
            escape(y_label)
        );
    }
}

fn polyline(out: &mut String, frame: &Frame, points: &[(f64, f64)], color: &str) {
    let mut path = String::new();
    let mut pen_down = false;
    for &(x, y) in points {
        if !(x.is_finite() && y.is_finite()) {
            pen_down = false;
            continue;
        }
        let cmd = if pen_down { 'L' } else { 'M' };
        let _ = write!(path, "{cmd}{:.2},{:.2} ", frame.px(x), frame.py(y));
        pen_down = true;
    }
    if !path.is_empty() {
        let _ = writeln!(
            out,
            r#"<path d="{}" fill="none" stroke="{color}" stroke-width="1.3"/>"#,
            path.trim_end()
        );
    }
}

fn header(height: f64, title: &str) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" viewBox="0 0 {WIDTH} {height}" font-family="sans-serif">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="18" font-size="14" text-anchor="middle">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
    out
}

/// Vertically stacked panels sharing the x axis.
pub fn line_panels(title: &str, x_label: &str, panels: &[Panel]) -> String {
    let height = TOP + panels.len() as f64 * (PANEL_HEIGHT + BOTTOM);
    let mut out = header(height, title);
    let x_range = bounds(
        panels
            .iter()
            .flat_map(|p| p.series.iter().flat_map(|s| s.points.iter().map(|p| p.0))),
    );
    for (i, panel) in panels.iter().enumerate() {
        let frame = Frame {
            x0: LEFT,
            y0: TOP + i as f64 * (PANEL_HEIGHT + BOTTOM),
            w: WIDTH - LEFT - RIGHT,
            h: PANEL_HEIGHT,
            x_range,
            y_range: bounds(panel.series.iter().flat_map(|s| s.points.iter().map(|p| p.1))),
        };
        frame.axes(&mut out, x_label, &panel.y_label);
        for (k, series) in panel.series.iter().enumerate() {
            let color = COLORS[k % COLORS.len()];
            polyline(&mut out, &frame, &series.points, color);
            if panel.series.len() > 1 {
                let _ = writeln!(
                    out,
                    r#"<text x="{:.1}" y="{:.1}" font-size="11" fill="{color}" text-anchor="end">{}</text>"#,
                    frame.x0 + frame.w - 6.0,
                    frame.y0 + 14.0 + 13.0 * k as f64,
                    escape(&series.label)
                );
            }
        }
    }
    out.push_str("</svg>\n");
    out
}

pub struct Reference {
    pub label: String,
    /// Vertical line at this x when true, horizontal at this y otherwise.
    pub vertical: bool,
    pub value: f64,
}

/// Cells coloured by category over an x/y grid, with an optional overlay
/// curve and labelled reference lines.
pub fn heat_map(
    title: &str,
    x_label: &str,
    y_label: &str,
    cells: &[(f64, f64, &str)],
    palette: &[(&str, &str)],
    overlay: Option<&[(f64, f64)]>,
    references: &[Reference],
) -> String {
    let height = TOP + PANEL_HEIGHT * 2.0 + BOTTOM;
    let mut out = header(height, title);
    let xs = bounds(cells.iter().map(|c| c.0));
    let ys = bounds(cells.iter().map(|c| c.1));
    let frame = Frame {
        x0: LEFT,
        y0: TOP,
        w: WIDTH - LEFT - RIGHT - 110.0,
        h: PANEL_HEIGHT * 2.0,
        x_range: xs,
        y_range: ys,
    };
    let distinct = |values: Vec<f64>| {
        let mut v = values;
        v.sort_by(f64::total_cmp);
        v.dedup();
        v.len().max(1)
    };
    let nx = distinct(cells.iter().map(|c| c.0).collect());
    let ny = distinct(cells.iter().map(|c| c.1).collect());
    let (cw, ch) = (frame.w / nx as f64, frame.h / ny as f64);
    for &(x, y, label) in cells {
        let color = palette
            .iter()
            .find(|(l, _)| *l == label)
            .map_or("#999999", |(_, c)| c);
        let (cx, cy) = (
            frame.x0 + (x - xs.0) / (xs.1 - xs.0) * (frame.w - cw),
            frame.y0 + (frame.h - ch) - (y - ys.0) / (ys.1 - ys.0) * (frame.h - ch),
        );
        let _ = writeln!(
            out,
            r#"<rect x="{cx:.2}" y="{cy:.2}" width="{:.2}" height="{:.2}" fill="{color}"/>"#,
            cw + 0.3,
            ch + 0.3
        );
    }
    let inner = Frame {
        x0: frame.x0 + cw / 2.0,
        y0: frame.y0 + ch / 2.0,
        w: frame.w - cw,
        h: frame.h - ch,
        ..frame
    };
    if let Some(points) = overlay {
        let inside: Vec<(f64, f64)> = points
            .iter()
            .copied()
            .filter(|&(x, y)| x >= xs.0 && x <= xs.1 && y >= ys.0 && y <= ys.1)
            .collect();
        polyline(&mut out, &inner, &inside, "#000000");
    }
    for r in references {
        let (x1, y1, x2, y2) = if r.vertical {
            if r.value < xs.0 || r.value > xs.1 {
                continue;
            }
            let x = inner.px(r.value);
            (x, frame.y0, x, frame.y0 + frame.h)
        } else {
            if r.value < ys.0 || r.value > ys.1 {
                continue;
            }
            let y = inner.py(r.value);
            (frame.x0, y, frame.x0 + frame.w, y)
        };
        let _ = writeln!(
            out,
            r##"<line x1="{x1:.2}" y1="{y1:.2}" x2="{x2:.2}" y2="{y2:.2}" stroke="#000" stroke-dasharray="5,4"/>"##
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" font-size="11">{}</text>"#,
            x2.min(frame.x0 + frame.w) + 3.0,
            if r.vertical { frame.y0 + 12.0 } else { y2 + 4.0 },
            escape(&r.label)
        );
    }
    frame.axes(&mut out, x_label, y_label);
    for (k, (label, color)) in palette.iter().enumerate() {
        let y = TOP + 20.0 + 18.0 * k as f64;
        let x = WIDTH - RIGHT - 100.0;
        let _ = writeln!(
            out,
            r#"<rect x="{x:.1}" y="{:.1}" width="12" height="12" fill="{color}"/><text x="{:.1}" y="{:.1}" font-size="11">{}</text>"#,
            y - 10.0,
            x + 16.0,
            y,
            escape(label)
        );
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_panel_skips_non_finite_points() {
        let svg = line_panels(
            "t",
            "x",
            &[Panel {
                y_label: "y".into(),
                series: vec![Series {
                    label: "a".into(),
                    points: vec![(0.0, 1.0), (1.0, f64::NAN), (2.0, 3.0), (3.0, 4.0)],
                }],
            }],
        );
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches('M').count(), 2);
        assert!(!svg.contains("NaN"));
    }

    #[test]
    fn heat_map_draws_every_cell() {
        let cells = [(0.0, 0.0, "stable"), (1.0, 0.0, "unstable"), (0.0, 1.0, "stable"), (1.0, 1.0, "stable")];
        let svg = heat_map("m", "J1", "J2", &cells, &[("stable", "#0f0"), ("unstable", "#f00")], None, &[]);
        assert_eq!(svg.matches("fill=\"#0f0\"").count(), 4);
        assert_eq!(svg.matches("fill=\"#f00\"").count(), 2);
    }
}
