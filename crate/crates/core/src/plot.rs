//! Minimal SVG rendering for the pipeline's charts.
//!
//! Every chart is a pure function of its [`PlotData`]; the same data always
//! renders to the same bytes.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 170.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 60.0;

const PALETTE: [&str; 20] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
    "#aec7e8", "#ffbb78", "#98df8a", "#ff9896", "#c5b0d5", "#c49c94", "#f7b6d2", "#c7c7c7", "#dbdb8d", "#9edae5",
];

// viridis at 0, .25, .5, .75, 1
const COLOR_STOPS: [(f64, f64, f64); 5] = [
    (68.0, 1.0, 84.0),
    (59.0, 82.0, 139.0),
    (33.0, 145.0, 140.0),
    (94.0, 201.0, 98.0),
    (253.0, 231.0, 37.0),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    StackedBars,
    Heatmap,
    ScatterMap,
    TrajectoryPath,
    DensityMap,
    Curve,
    Histogram,
    LogLog,
    Table,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PlotData {
    /// `values[c][s]` is the height of series `s` in category `c`.
    StackedBars {
        categories: Vec<String>,
        series: Vec<String>,
        values: Vec<Vec<f64>>,
    },
    /// Missing cells are drawn black.
    Heatmap {
        rows: Vec<String>,
        columns: Vec<String>,
        values: Vec<Vec<Option<f64>>>,
    },
    ScatterMap { points: Vec<(String, f64, f64)> },
    /// Polyline in the given order; the first and last points are labelled.
    TrajectoryPath { points: Vec<(String, f64, f64)> },
    /// `values[iy][ix]` over the `xs` × `ys` grid, with sample markers on top.
    DensityMap {
        xs: Vec<f64>,
        ys: Vec<f64>,
        values: Vec<Vec<f64>>,
        samples: Vec<[f64; 2]>,
    },
    Curve { series: Vec<(String, Vec<(f64, f64)>)> },
    /// (lower edge, width, count) per bin.
    Histogram { bins: Vec<(f64, f64, usize)> },
    /// Positive (x, y) pairs drawn on log10 axes.
    LogLog { points: Vec<(f64, f64)> },
    Table { header: Vec<String>, rows: Vec<Vec<String>> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlotSpec {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub data: PlotData,
}

impl PlotSpec {
    pub fn new(title: impl Into<String>, x_label: impl Into<String>, y_label: impl Into<String>, data: PlotData) -> Self {
        Self {
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            data,
        }
    }

    pub fn kind(&self) -> PlotKind {
        match &self.data {
            PlotData::StackedBars { .. } => PlotKind::StackedBars,
            PlotData::Heatmap { .. } => PlotKind::Heatmap,
            PlotData::ScatterMap { .. } => PlotKind::ScatterMap,
            PlotData::TrajectoryPath { .. } => PlotKind::TrajectoryPath,
            PlotData::DensityMap { .. } => PlotKind::DensityMap,
            PlotData::Curve { .. } => PlotKind::Curve,
            PlotData::Histogram { .. } => PlotKind::Histogram,
            PlotData::LogLog { .. } => PlotKind::LogLog,
            PlotData::Table { .. } => PlotKind::Table,
        }
    }

    /// Checks the shape constraints each kind relies on.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidParameter(format!("{:?} plot: {msg}", self.kind())));
        match &self.data {
            PlotData::StackedBars { categories, series, values } => {
                if values.len() != categories.len() || values.iter().any(|v| v.len() != series.len()) {
                    return bad("values must be categories × series");
                }
            }
            PlotData::Heatmap { rows, columns, values } => {
                if values.len() != rows.len() || values.iter().any(|v| v.len() != columns.len()) {
                    return bad("values must be rows × columns");
                }
            }
            PlotData::DensityMap { xs, ys, values, .. } => {
                if xs.len() < 2 || ys.len() < 2 || values.len() != ys.len() || values.iter().any(|v| v.len() != xs.len()) {
                    return bad("values must be ys × xs with at least two nodes per axis");
                }
            }
            PlotData::LogLog { points } => {
                if points.iter().any(|&(x, y)| x <= 0.0 || y <= 0.0) {
                    return bad("log axes need positive values");
                }
            }
            PlotData::Table { header, rows } => {
                if rows.iter().any(|r| r.len() != header.len()) {
                    return bad("every row needs one cell per header column");
                }
            }
            PlotData::ScatterMap { .. } | PlotData::TrajectoryPath { .. } | PlotData::Curve { .. } | PlotData::Histogram { .. } => {}
        }
        Ok(())
    }

    pub fn render(&self) -> Result<String> {
        self.validate()?;
        let mut svg = Svg::new();
        svg.title(&self.title);
        match &self.data {
            PlotData::StackedBars { categories, series, values } => stacked_bars(&mut svg, self, categories, series, values),
            PlotData::Heatmap { rows, columns, values } => heatmap(&mut svg, self, rows, columns, values),
            PlotData::ScatterMap { points } => scatter(&mut svg, self, points),
            PlotData::TrajectoryPath { points } => trajectory_path(&mut svg, self, points),
            PlotData::DensityMap { xs, ys, values, samples } => density_map(&mut svg, self, xs, ys, values, samples),
            PlotData::Curve { series } => curve(&mut svg, self, series),
            PlotData::Histogram { bins } => histogram(&mut svg, self, bins),
            PlotData::LogLog { points } => loglog(&mut svg, self, points),
            PlotData::Table { header, rows } => table(&mut svg, header, rows),
        }
        Ok(svg.finish())
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let text = self.render()?;
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

struct Svg {
    body: String,
}

impl Svg {
    fn new() -> Self {
        let mut body = String::new();
        write!(
            body,
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\" font-size=\"11\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
        )
        .unwrap();
        Self { body }
    }

    fn title(&mut self, title: &str) {
        writeln!(
            self.body,
            "<text x=\"{:.1}\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">{}</text>",
            WIDTH / 2.0,
            escape(title)
        )
        .unwrap();
    }

    fn text(&mut self, x: f64, y: f64, anchor: &str, s: &str) {
        writeln!(self.body, "<text x=\"{x:.2}\" y=\"{y:.2}\" text-anchor=\"{anchor}\">{}</text>", escape(s)).unwrap();
    }

    fn rotated_text(&mut self, x: f64, y: f64, s: &str) {
        writeln!(
            self.body,
            "<text x=\"{x:.2}\" y=\"{y:.2}\" text-anchor=\"middle\" transform=\"rotate(-90 {x:.2} {y:.2})\">{}</text>",
            escape(s)
        )
        .unwrap();
    }

    fn rect(&mut self, x: f64, y: f64, w: f64, h: f64, fill: &str) {
        writeln!(self.body, "<rect x=\"{x:.3}\" y=\"{y:.3}\" width=\"{w:.3}\" height=\"{h:.3}\" fill=\"{fill}\"/>").unwrap();
    }

    fn line(&mut self, x1: f64, y1: f64, x2: f64, y2: f64, stroke: &str) {
        writeln!(self.body, "<line x1=\"{x1:.3}\" y1=\"{y1:.3}\" x2=\"{x2:.3}\" y2=\"{y2:.3}\" stroke=\"{stroke}\"/>").unwrap();
    }

    fn circle(&mut self, x: f64, y: f64, r: f64, fill: &str) {
        writeln!(self.body, "<circle cx=\"{x:.3}\" cy=\"{y:.3}\" r=\"{r}\" fill=\"{fill}\"/>").unwrap();
    }

    fn polyline(&mut self, pts: &[(f64, f64)], stroke: &str) {
        let coords: Vec<String> = pts.iter().map(|(x, y)| format!("{x:.3},{y:.3}")).collect();
        writeln!(
            self.body,
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{stroke}\" stroke-width=\"1.5\"/>",
            coords.join(" ")
        )
        .unwrap();
    }

    fn finish(mut self) -> String {
        self.body.push_str("</svg>\n");
        self.body
    }
}

fn color_scale(v: f64) -> String {
    let v = if v.is_finite() { v.clamp(0.0, 1.0) } else { 0.0 };
    let pos = v * (COLOR_STOPS.len() - 1) as f64;
    let k = (pos.floor() as usize).min(COLOR_STOPS.len() - 2);
    let f = pos - k as f64;
    let (a, b) = (COLOR_STOPS[k], COLOR_STOPS[k + 1]);
    let mix = |x: f64, y: f64| (x + (y - x) * f).round() as u8;
    format!("#{:02x}{:02x}{:02x}", mix(a.0, b.0), mix(a.1, b.1), mix(a.2, b.2))
}

/// Linear map from a data range onto the plot area.
#[derive(Clone, Copy)]
struct Axis {
    lo: f64,
    hi: f64,
    px_lo: f64,
    px_hi: f64,
}

impl Axis {
    fn new(lo: f64, hi: f64, px_lo: f64, px_hi: f64) -> Self {
        let (lo, hi) = if !lo.is_finite() || !hi.is_finite() {
            (0.0, 1.0)
        } else if hi - lo <= f64::EPSILON * hi.abs().max(1.0) {
            (lo - 0.5, hi + 0.5)
        } else {
            (lo, hi)
        };
        Self { lo, hi, px_lo, px_hi }
    }

    fn padded(lo: f64, hi: f64, px_lo: f64, px_hi: f64) -> Self {
        let pad = (hi - lo).abs() * 0.05;
        Self::new(lo - pad, hi + pad, px_lo, px_hi)
    }

    fn map(&self, v: f64) -> f64 {
        self.px_lo + (v - self.lo) / (self.hi - self.lo) * (self.px_hi - self.px_lo)
    }

    fn ticks(&self) -> Vec<f64> {
        (0..=4).map(|i| self.lo + (self.hi - self.lo) * i as f64 / 4.0).collect()
    }
}

fn plot_area() -> (f64, f64, f64, f64) {
    (MARGIN_LEFT, WIDTH - MARGIN_RIGHT, MARGIN_TOP, HEIGHT - MARGIN_BOTTOM)
}

fn fmt_tick(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() >= 1e4 || v.abs() < 1e-2 {
        format!("{v:.1e}")
    } else {
        format!("{v:.2}")
    }
}

fn axes(svg: &mut Svg, spec: &PlotSpec, x: &Axis, y: &Axis, x_tick: impl Fn(f64) -> String, y_tick: impl Fn(f64) -> String) {
    let (left, right, top, bottom) = plot_area();
    svg.line(left, bottom, right, bottom, "black");
    svg.line(left, top, left, bottom, "black");
    for t in x.ticks() {
        let px = x.map(t);
        svg.line(px, bottom, px, bottom + 4.0, "black");
        svg.text(px, bottom + 16.0, "middle", &x_tick(t));
    }
    for t in y.ticks() {
        let py = y.map(t);
        svg.line(left - 4.0, py, left, py, "black");
        svg.text(left - 6.0, py + 4.0, "end", &y_tick(t));
    }
    svg.text((left + right) / 2.0, HEIGHT - 18.0, "middle", &spec.x_label);
    svg.rotated_text(18.0, (top + bottom) / 2.0, &spec.y_label);
}

fn legend(svg: &mut Svg, labels: &[String]) {
    let x = WIDTH - MARGIN_RIGHT + 12.0;
    for (i, label) in labels.iter().enumerate().take(30) {
        let y = MARGIN_TOP + 14.0 * i as f64;
        svg.rect(x, y, 10.0, 10.0, PALETTE[i % PALETTE.len()]);
        svg.text(x + 14.0, y + 9.0, "start", label);
    }
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
}

fn stacked_bars(svg: &mut Svg, spec: &PlotSpec, categories: &[String], series: &[String], values: &[Vec<f64>]) {
    let (left, right, top, bottom) = plot_area();
    let max_total = values.iter().map(|v| v.iter().sum::<f64>()).fold(0.0, f64::max);
    let y = Axis::new(0.0, if max_total > 0.0 { max_total } else { 1.0 }, bottom, top);
    let slot = (right - left) / categories.len().max(1) as f64;
    for (c, vals) in values.iter().enumerate() {
        let mut acc = 0.0;
        for (s, v) in vals.iter().enumerate() {
            let (y0, y1) = (y.map(acc), y.map(acc + v));
            svg.rect(left + c as f64 * slot + slot * 0.1, y1, slot * 0.8, y0 - y1, PALETTE[s % PALETTE.len()]);
            acc += v;
        }
    }
    let step = (categories.len() / 12).max(1);
    for (c, label) in categories.iter().enumerate().step_by(step) {
        svg.text(left + (c as f64 + 0.5) * slot, bottom + 16.0, "middle", label);
    }
    let x = Axis::new(0.0, 1.0, left, right);
    axes(svg, spec, &x, &y, |_| String::new(), fmt_tick);
    legend(svg, series);
}

fn heatmap(svg: &mut Svg, spec: &PlotSpec, rows: &[String], columns: &[String], values: &[Vec<Option<f64>>]) {
    let (left, right, top, bottom) = plot_area();
    let (lo, hi) = bounds(values.iter().flatten().flatten().copied());
    let span = if hi > lo { hi - lo } else { 1.0 };
    let cw = (right - left) / columns.len().max(1) as f64;
    let ch = (bottom - top) / rows.len().max(1) as f64;
    for (r, row) in values.iter().enumerate() {
        for (c, v) in row.iter().enumerate() {
            let fill = match v {
                Some(v) => color_scale((v - lo) / span),
                None => "#000000".to_string(),
            };
            svg.rect(left + c as f64 * cw, top + r as f64 * ch, cw, ch, &fill);
        }
    }
    let rstep = (rows.len() / 30).max(1);
    for (r, label) in rows.iter().enumerate().step_by(rstep) {
        svg.text(left - 4.0, top + (r as f64 + 0.5) * ch + 4.0, "end", label);
    }
    let cstep = (columns.len() / 12).max(1);
    for (c, label) in columns.iter().enumerate().step_by(cstep) {
        svg.text(left + (c as f64 + 0.5) * cw, bottom + 16.0, "middle", label);
    }
    svg.text((left + right) / 2.0, HEIGHT - 18.0, "middle", &spec.x_label);
    colorbar(svg, lo, hi);
}

fn colorbar(svg: &mut Svg, lo: f64, hi: f64) {
    let x = WIDTH - MARGIN_RIGHT + 20.0;
    let (top, bottom) = (MARGIN_TOP, HEIGHT - MARGIN_BOTTOM);
    let steps = 20;
    let h = (bottom - top) / steps as f64;
    for i in 0..steps {
        let v = 1.0 - (i as f64 + 0.5) / steps as f64;
        svg.rect(x, top + i as f64 * h, 14.0, h, &color_scale(v));
    }
    if lo.is_finite() {
        svg.text(x + 18.0, top + 8.0, "start", &fmt_tick(hi));
        svg.text(x + 18.0, bottom, "start", &fmt_tick(lo));
    }
}

fn xy_axes(points: impl Iterator<Item = (f64, f64)> + Clone) -> (Axis, Axis) {
    let (left, right, top, bottom) = plot_area();
    let (xl, xh) = bounds(points.clone().map(|p| p.0));
    let (yl, yh) = bounds(points.map(|p| p.1));
    (Axis::padded(xl, xh, left, right), Axis::padded(yl, yh, bottom, top))
}

fn scatter(svg: &mut Svg, spec: &PlotSpec, points: &[(String, f64, f64)]) {
    let (x, y) = xy_axes(points.iter().map(|p| (p.1, p.2)));
    axes(svg, spec, &x, &y, fmt_tick, fmt_tick);
    for (i, (label, px, py)) in points.iter().enumerate() {
        let (cx, cy) = (x.map(*px), y.map(*py));
        svg.circle(cx, cy, 4.0, PALETTE[i % PALETTE.len()]);
        svg.text(cx + 6.0, cy - 4.0, "start", label);
    }
}

fn trajectory_path(svg: &mut Svg, spec: &PlotSpec, points: &[(String, f64, f64)]) {
    let (x, y) = xy_axes(points.iter().map(|p| (p.1, p.2)));
    axes(svg, spec, &x, &y, fmt_tick, fmt_tick);
    let px: Vec<(f64, f64)> = points.iter().map(|p| (x.map(p.1), y.map(p.2))).collect();
    svg.polyline(&px, PALETTE[0]);
    for (i, &(cx, cy)) in px.iter().enumerate() {
        svg.circle(cx, cy, 3.0, PALETTE[0]);
        if i == 0 || i + 1 == px.len() {
            svg.text(cx + 6.0, cy - 4.0, "start", &points[i].0);
        }
    }
}

fn density_map(svg: &mut Svg, spec: &PlotSpec, xs: &[f64], ys: &[f64], values: &[Vec<f64>], samples: &[[f64; 2]]) {
    let (left, right, top, bottom) = plot_area();
    let x = Axis::new(xs[0], xs[xs.len() - 1], left, right);
    let y = Axis::new(ys[0], ys[ys.len() - 1], bottom, top);
    let (_, hi) = bounds(values.iter().flatten().copied());
    let hi = if hi > 0.0 { hi } else { 1.0 };
    let (dx, dy) = (xs[1] - xs[0], ys[1] - ys[0]);
    for (iy, row) in values.iter().enumerate() {
        for (ix, v) in row.iter().enumerate() {
            let (x0, x1) = (x.map(xs[ix] - dx / 2.0).max(left), x.map(xs[ix] + dx / 2.0).min(right));
            let (y0, y1) = (y.map(ys[iy] + dy / 2.0).max(top), y.map(ys[iy] - dy / 2.0).min(bottom));
            svg.rect(x0, y0, x1 - x0, y1 - y0, &color_scale(v / hi));
        }
    }
    for p in samples {
        svg.circle(x.map(p[0]), y.map(p[1]), 1.5, "#ffffff");
    }
    axes(svg, spec, &x, &y, fmt_tick, fmt_tick);
    colorbar(svg, 0.0, hi);
}

fn curve(svg: &mut Svg, spec: &PlotSpec, series: &[(String, Vec<(f64, f64)>)]) {
    let all = series.iter().flat_map(|s| s.1.iter().copied());
    let (x, y) = xy_axes(all);
    axes(svg, spec, &x, &y, fmt_tick, fmt_tick);
    for (i, (_, pts)) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let px: Vec<(f64, f64)> = pts.iter().map(|&(a, b)| (x.map(a), y.map(b))).collect();
        svg.polyline(&px, color);
        for &(cx, cy) in &px {
            svg.circle(cx, cy, 2.5, color);
        }
    }
    if series.len() > 1 {
        legend(svg, &series.iter().map(|s| s.0.clone()).collect::<Vec<_>>());
    }
}

fn histogram(svg: &mut Svg, spec: &PlotSpec, bins: &[(f64, f64, usize)]) {
    let (left, right, top, bottom) = plot_area();
    let (lo, _) = bounds(bins.iter().map(|b| b.0));
    let (_, hi) = bounds(bins.iter().map(|b| b.0 + b.1));
    let max = bins.iter().map(|b| b.2).max().unwrap_or(0).max(1) as f64;
    let x = Axis::new(lo, hi, left, right);
    let y = Axis::new(0.0, max, bottom, top);
    for &(edge, width, count) in bins {
        let (x0, x1) = (x.map(edge), x.map(edge + width));
        let y1 = y.map(count as f64);
        svg.rect(x0, y1, (x1 - x0).max(0.5), bottom - y1, PALETTE[0]);
    }
    axes(svg, spec, &x, &y, fmt_tick, fmt_tick);
}

fn loglog(svg: &mut Svg, spec: &PlotSpec, points: &[(f64, f64)]) {
    let logs: Vec<(f64, f64)> = points.iter().map(|&(a, b)| (a.log10(), b.log10())).collect();
    let (x, y) = xy_axes(logs.iter().copied());
    let pow = |v: f64| format!("1e{v:.1}");
    axes(svg, spec, &x, &y, pow, pow);
    let px: Vec<(f64, f64)> = logs.iter().map(|&(a, b)| (x.map(a), y.map(b))).collect();
    svg.polyline(&px, PALETTE[0]);
}

fn table(svg: &mut Svg, header: &[String], rows: &[Vec<String>]) {
    let cols = header.len().max(1);
    let left = 20.0;
    let col_w = (WIDTH - 40.0) / cols as f64;
    let row_h = ((HEIGHT - 60.0) / (rows.len() + 1) as f64).min(18.0);
    let mut y = 50.0;
    for (c, h) in header.iter().enumerate() {
        svg.text(left + c as f64 * col_w, y, "start", h);
    }
    svg.line(left, y + 4.0, WIDTH - 20.0, y + 4.0, "black");
    for row in rows {
        y += row_h;
        for (c, cell) in row.iter().enumerate() {
            svg.text(left + c as f64 * col_w, y, "start", cell);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(v: &[&str]) -> Vec<String> {
        v.iter().map(|x| x.to_string()).collect()
    }

    #[test]
    fn every_kind_renders_deterministically() {
        let specs = vec![
            PlotData::StackedBars {
                categories: s(&["2000", "2001"]),
                series: s(&["a", "b"]),
                values: vec![vec![0.3, 0.7], vec![0.5, 0.5]],
            },
            PlotData::Heatmap {
                rows: s(&["A", "B"]),
                columns: s(&["2000"]),
                values: vec![vec![Some(1.0)], vec![None]],
            },
            PlotData::ScatterMap { points: vec![("A".into(), 0.0, 1.0), ("B".into(), 1.0, 0.0)] },
            PlotData::TrajectoryPath { points: vec![("2000".into(), 0.1, 0.2), ("2001".into(), 0.2, 0.1)] },
            PlotData::DensityMap {
                xs: vec![0.0, 1.0],
                ys: vec![0.0, 1.0],
                values: vec![vec![0.1, 0.2], vec![0.3, 0.4]],
                samples: vec![[0.5, 0.5]],
            },
            PlotData::Curve { series: vec![("c".into(), vec![(1.0, 0.5), (2.0, 0.6)])] },
            PlotData::Histogram { bins: vec![(0.0, 10.0, 3), (10.0, 10.0, 1)] },
            PlotData::LogLog { points: vec![(1.0, 100.0), (2.0, 50.0)] },
            PlotData::Table { header: s(&["topic", "terms"]), rows: vec![s(&["0", "a & b"])] },
        ];
        for data in specs {
            let spec = PlotSpec::new("t <x>", "x", "y", data);
            let a = spec.render().unwrap();
            assert!(a.starts_with("<svg") && a.ends_with("</svg>\n"));
            assert!(a.contains("t &lt;x&gt;"));
            assert_eq!(a, spec.render().unwrap());
        }
    }

    #[test]
    fn invalid_shapes_rejected() {
        let spec = PlotSpec::new(
            "",
            "",
            "",
            PlotData::Heatmap { rows: s(&["A"]), columns: s(&["x", "y"]), values: vec![vec![Some(1.0)]] },
        );
        assert!(spec.render().is_err());
        let spec = PlotSpec::new("", "", "", PlotData::LogLog { points: vec![(0.0, 1.0)] });
        assert!(spec.render().is_err());
    }

    #[test]
    fn missing_heatmap_cells_are_black() {
        let spec = PlotSpec::new(
            "",
            "",
            "",
            PlotData::Heatmap { rows: s(&["A"]), columns: s(&["x", "y"]), values: vec![vec![Some(1.0), None]] },
        );
        assert!(spec.render().unwrap().contains("fill=\"#000000\""));
    }
}
