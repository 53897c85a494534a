//! Deterministic SVG rendering of score-space scatter plots and
//! functional-space summaries.
//!
//! Output is a pure function of the inputs: coordinates are written with
//! fixed 3-decimal precision, colors come from a fixed palette, and no
//! timestamps or randomness are involved, so identical inputs give
//! byte-identical documents.

use serde::Serialize;
use thiserror::Error;

use crate::curves::{CurveClass, FunctionalSample};
use crate::geom::{Point2, Polygon2};
use crate::pipeline::EnsembleSummary;
use crate::reduction::PointCloud2D;

#[derive(Debug, Error)]
pub enum RenderError {
    #[error("nothing to draw")]
    EmptyPlot,
    #[error("classes length {classes} does not match point count {points}")]
    ClassMismatch { classes: usize, points: usize },
}

#[derive(Debug, Clone, Serialize)]
pub struct Margins {
    pub left: f64,
    pub right: f64,
    pub top: f64,
    pub bottom: f64,
}

impl Default for Margins {
    fn default() -> Self {
        Margins {
            left: 62.0,
            right: 18.0,
            top: 18.0,
            bottom: 46.0,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Palette {
    pub central: String,
    pub outer: String,
    pub median: String,
    pub ci: String,
    pub outlier_cycle: Vec<String>,
}

impl Default for Palette {
    fn default() -> Self {
        Palette {
            central: "#555555".into(),
            outer: "#cccccc".into(),
            median: "#000000".into(),
            ci: "#000000".into(),
            outlier_cycle: vec![
                "#e41a1c".into(),
                "#377eb8".into(),
                "#4daf4a".into(),
                "#984ea3".into(),
                "#ff7f00".into(),
                "#a65628".into(),
                "#f781bf".into(),
                "#17becf".into(),
            ],
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PlotSpec {
    pub width: f64,
    pub height: f64,
    pub margins: Margins,
    pub x_label: String,
    pub y_label: String,
    pub palette: Palette,
}

impl Default for PlotSpec {
    fn default() -> Self {
        PlotSpec {
            width: 900.0,
            height: 600.0,
            margins: Margins::default(),
            x_label: "time [s]".into(),
            y_label: "value".into(),
            palette: Palette::default(),
        }
    }
}

/// A filled polygon layer drawn below the data points.
#[derive(Debug, Clone)]
pub struct FilledRegion {
    pub polygon: Polygon2,
    pub fill: String,
    pub opacity: f64,
    pub label: String,
}

struct Frame {
    px0: f64,
    py0: f64,
    pw: f64,
    ph: f64,
    xmin: f64,
    xmax: f64,
    ymin: f64,
    ymax: f64,
}

impl Frame {
    /// 5% padding around the data extent; degenerate extents get a unit pad.
    fn new(spec: &PlotSpec, mut xmin: f64, mut xmax: f64, mut ymin: f64, mut ymax: f64) -> Frame {
        let pad = |lo: &mut f64, hi: &mut f64| {
            let span = *hi - *lo;
            if span <= 0.0 {
                let p = lo.abs().max(1.0) * 0.05 + 0.5;
                *lo -= p;
                *hi += p;
            } else {
                *lo -= 0.05 * span;
                *hi += 0.05 * span;
            }
        };
        pad(&mut xmin, &mut xmax);
        pad(&mut ymin, &mut ymax);
        Frame {
            px0: spec.margins.left,
            py0: spec.margins.top,
            pw: spec.width - spec.margins.left - spec.margins.right,
            ph: spec.height - spec.margins.top - spec.margins.bottom,
            xmin,
            xmax,
            ymin,
            ymax,
        }
    }

    fn x(&self, v: f64) -> f64 {
        self.px0 + (v - self.xmin) / (self.xmax - self.xmin) * self.pw
    }

    fn y(&self, v: f64) -> f64 {
        // SVG y grows downward
        self.py0 + (self.ymax - v) / (self.ymax - self.ymin) * self.ph
    }
}

fn fnum(v: f64) -> String {
    format!("{v:.3}")
}

fn tick_label(v: f64) -> String {
    let s = format!("{v:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s.is_empty() || s == "-" {
        "0".into()
    } else {
        s.to_string()
    }
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn open_svg(out: &mut String, spec: &PlotSpec) {
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    out.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{}\" height=\"{}\" viewBox=\"0 0 {} {}\">\n",
        fnum(spec.width),
        fnum(spec.height),
        fnum(spec.width),
        fnum(spec.height)
    ));
    out.push_str(&format!(
        "<rect x=\"0\" y=\"0\" width=\"{}\" height=\"{}\" fill=\"#ffffff\"/>\n",
        fnum(spec.width),
        fnum(spec.height)
    ));
}

fn draw_axes(out: &mut String, spec: &PlotSpec, frame: &Frame) {
    out.push_str(&format!(
        "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#333333\" stroke-width=\"1\"/>\n",
        fnum(frame.px0),
        fnum(frame.py0),
        fnum(frame.pw),
        fnum(frame.ph)
    ));
    let ticks = 5usize;
    for i in 0..=ticks {
        let fx = frame.xmin + (frame.xmax - frame.xmin) * i as f64 / ticks as f64;
        let px = frame.x(fx);
        let by = frame.py0 + frame.ph;
        out.push_str(&format!(
            "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#333333\" stroke-width=\"1\"/>\n",
            fnum(px),
            fnum(by),
            fnum(px),
            fnum(by + 5.0)
        ));
        out.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">{}</text>\n",
            fnum(px),
            fnum(by + 18.0),
            tick_label(fx)
        ));
        let fy = frame.ymin + (frame.ymax - frame.ymin) * i as f64 / ticks as f64;
        let py = frame.y(fy);
        out.push_str(&format!(
            "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#333333\" stroke-width=\"1\"/>\n",
            fnum(frame.px0 - 5.0),
            fnum(py),
            fnum(frame.px0),
            fnum(py)
        ));
        out.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">{}</text>\n",
            fnum(frame.px0 - 8.0),
            fnum(py + 4.0),
            tick_label(fy)
        ));
    }
    out.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\">{}</text>\n",
        fnum(frame.px0 + frame.pw / 2.0),
        fnum(frame.py0 + frame.ph + 38.0),
        xml_escape(&spec.x_label)
    ));
    out.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 {} {})\">{}</text>\n",
        fnum(frame.px0 - 44.0),
        fnum(frame.py0 + frame.ph / 2.0),
        fnum(frame.px0 - 44.0),
        fnum(frame.py0 + frame.ph / 2.0),
        xml_escape(&spec.y_label)
    ));
}

fn polygon_path(frame: &Frame, vertices: &[Point2]) -> String {
    vertices
        .iter()
        .map(|p| format!("{},{}", fnum(frame.x(p[0])), fnum(frame.y(p[1]))))
        .collect::<Vec<_>>()
        .join(" ")
}

fn polyline_points(frame: &Frame, grid: &[f64], curve: &[f64]) -> String {
    grid.iter()
        .zip(curve)
        .map(|(t, v)| format!("{},{}", fnum(frame.x(*t)), fnum(frame.y(*v))))
        .collect::<Vec<_>>()
        .join(" ")
}

/// Scatter plot of a score cloud: filled regions bottom-to-top in the given
/// order, then points colored by class (outliers drawn last, on top), then
/// an optional marker for the median or mode.
pub fn render_cloud(
    cloud: &PointCloud2D,
    regions: &[FilledRegion],
    classes: &[CurveClass],
    marker: Option<(Point2, &str)>,
    spec: &PlotSpec,
) -> Result<String, RenderError> {
    let pts = cloud.points();
    if pts.is_empty() {
        return Err(RenderError::EmptyPlot);
    }
    if classes.len() != pts.len() {
        return Err(RenderError::ClassMismatch {
            classes: classes.len(),
            points: pts.len(),
        });
    }
    let mut xmin = f64::INFINITY;
    let mut xmax = f64::NEG_INFINITY;
    let mut ymin = f64::INFINITY;
    let mut ymax = f64::NEG_INFINITY;
    let mut extend = |p: &Point2| {
        xmin = xmin.min(p[0]);
        xmax = xmax.max(p[0]);
        ymin = ymin.min(p[1]);
        ymax = ymax.max(p[1]);
    };
    for p in pts {
        extend(p);
    }
    for r in regions {
        for v in &r.polygon.vertices {
            extend(v);
        }
    }
    if let Some((p, _)) = marker {
        extend(&p);
    }
    let frame = Frame::new(spec, xmin, xmax, ymin, ymax);

    let mut out = String::new();
    open_svg(&mut out, spec);
    draw_axes(&mut out, spec, &frame);
    for r in regions {
        if r.polygon.vertices.len() >= 2 {
            out.push_str(&format!(
                "<polygon points=\"{}\" fill=\"{}\" fill-opacity=\"{}\" stroke=\"none\"><title>{}</title></polygon>\n",
                polygon_path(&frame, &r.polygon.vertices),
                r.fill,
                fnum(r.opacity),
                xml_escape(&r.label)
            ));
        }
    }
    let color_of = |c: &CurveClass, outlier_seq: usize| -> String {
        match c {
            CurveClass::Central => spec.palette.central.clone(),
            CurveClass::Outer => spec.palette.outer.clone(),
            CurveClass::Outlier => {
                let cycle = &spec.palette.outlier_cycle;
                cycle[outlier_seq % cycle.len()].clone()
            }
        }
    };
    for (i, p) in pts.iter().enumerate() {
        if classes[i] == CurveClass::Outlier {
            continue;
        }
        out.push_str(&format!(
            "<circle cx=\"{}\" cy=\"{}\" r=\"3\" fill=\"{}\" stroke=\"#333333\" stroke-width=\"0.4\"/>\n",
            fnum(frame.x(p[0])),
            fnum(frame.y(p[1])),
            color_of(&classes[i], 0)
        ));
    }
    let mut outlier_seq = 0usize;
    for (i, p) in pts.iter().enumerate() {
        if classes[i] != CurveClass::Outlier {
            continue;
        }
        out.push_str(&format!(
            "<circle cx=\"{}\" cy=\"{}\" r=\"4\" fill=\"{}\" stroke=\"#000000\" stroke-width=\"0.8\"/>\n",
            fnum(frame.x(p[0])),
            fnum(frame.y(p[1])),
            color_of(&classes[i], outlier_seq)
        ));
        outlier_seq += 1;
    }
    if let Some((p, label)) = marker {
        let (cx, cy) = (frame.x(p[0]), frame.y(p[1]));
        out.push_str(&format!(
            "<path d=\"M {} {} L {} {} M {} {} L {} {}\" stroke=\"#000000\" stroke-width=\"1.6\"><title>{}</title></path>\n",
            fnum(cx - 6.0),
            fnum(cy),
            fnum(cx + 6.0),
            fnum(cy),
            fnum(cx),
            fnum(cy - 6.0),
            fnum(cx),
            fnum(cy + 6.0),
            xml_escape(label)
        ));
    }
    out.push_str("</svg>\n");
    Ok(out)
}

/// Functional-space summary: light non-outlier band, dark central band,
/// black median polyline, dotted confidence band when present, one colored
/// polyline per outlier with a legend.
pub fn render_functional(
    sample: &FunctionalSample,
    summary: &EnsembleSummary,
    spec: &PlotSpec,
) -> Result<String, RenderError> {
    if sample.n() == 0 || sample.m() == 0 {
        return Err(RenderError::EmptyPlot);
    }
    if summary.classes.len() != sample.n() {
        return Err(RenderError::ClassMismatch {
            classes: summary.classes.len(),
            points: sample.n(),
        });
    }
    let grid = sample.grid();
    let xmin = grid[0];
    let xmax = grid[grid.len() - 1];
    let mut ymin = f64::INFINITY;
    let mut ymax = f64::NEG_INFINITY;
    let mut scan = |vs: &[f64]| {
        for v in vs {
            ymin = ymin.min(*v);
            ymax = ymax.max(*v);
        }
    };
    scan(&summary.nonoutlier_envelope.lower);
    scan(&summary.nonoutlier_envelope.upper);
    scan(&summary.center_curve);
    if let Some(ci) = &summary.ci_band {
        scan(&ci.lower);
        scan(&ci.upper);
    }
    for (i, class) in summary.classes.iter().enumerate() {
        if *class == CurveClass::Outlier {
            scan(sample.curve(i));
        }
    }
    let frame = Frame::new(spec, xmin, xmax, ymin, ymax);

    let band_points = |lower: &[f64], upper: &[f64]| -> String {
        let mut pts: Vec<String> = grid
            .iter()
            .zip(upper)
            .map(|(t, v)| format!("{},{}", fnum(frame.x(*t)), fnum(frame.y(*v))))
            .collect();
        pts.extend(
            grid.iter()
                .rev()
                .zip(lower.iter().rev())
                .map(|(t, v)| format!("{},{}", fnum(frame.x(*t)), fnum(frame.y(*v)))),
        );
        pts.join(" ")
    };

    let mut out = String::new();
    open_svg(&mut out, spec);
    draw_axes(&mut out, spec, &frame);
    out.push_str(&format!(
        "<polygon points=\"{}\" fill=\"{}\" stroke=\"none\"><title>non-outlier envelope</title></polygon>\n",
        band_points(
            &summary.nonoutlier_envelope.lower,
            &summary.nonoutlier_envelope.upper
        ),
        spec.palette.outer
    ));
    out.push_str(&format!(
        "<polygon points=\"{}\" fill=\"{}\" stroke=\"none\"><title>central envelope</title></polygon>\n",
        band_points(
            &summary.central_envelope.lower,
            &summary.central_envelope.upper
        ),
        spec.palette.central
    ));
    out.push_str(&format!(
        "<polyline points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"1.8\"><title>center curve</title></polyline>\n",
        polyline_points(&frame, grid, &summary.center_curve),
        spec.palette.median
    ));
    if let Some(ci) = &summary.ci_band {
        for curve in [&ci.lower, &ci.upper] {
            out.push_str(&format!(
                "<polyline points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"1.2\" stroke-dasharray=\"4 3\"/>\n",
                polyline_points(&frame, grid, curve),
                spec.palette.ci
            ));
        }
    }
    let mut legend: Vec<(String, String)> = Vec::new();
    let mut outlier_seq = 0usize;
    for (i, class) in summary.classes.iter().enumerate() {
        if *class != CurveClass::Outlier {
            continue;
        }
        let color = spec.palette.outlier_cycle
            [outlier_seq % spec.palette.outlier_cycle.len()]
        .clone();
        out.push_str(&format!(
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"1.4\" class=\"outlier\"/>\n",
            polyline_points(&frame, grid, sample.curve(i)),
            color
        ));
        legend.push((sample.labels()[i].clone(), color));
        outlier_seq += 1;
    }
    if !legend.is_empty() {
        let lx = frame.px0 + frame.pw - 150.0;
        let mut ly = frame.py0 + 14.0;
        out.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" font-weight=\"bold\">outliers</text>\n",
            fnum(lx),
            fnum(ly)
        ));
        for (label, color) in &legend {
            ly += 16.0;
            out.push_str(&format!(
                "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"{}\" stroke-width=\"2\"/>\n",
                fnum(lx),
                fnum(ly - 4.0),
                fnum(lx + 18.0),
                fnum(ly - 4.0),
                color
            ));
            out.push_str(&format!(
                "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\">{}</text>\n",
                fnum(lx + 24.0),
                fnum(ly),
                xml_escape(label)
            ));
        }
    }
    out.push_str("</svg>\n");
    Ok(out)
}

/// All sample curves in light grey with an optional highlighted curve on
/// top (used to show a depth ranking without envelopes).
pub fn render_curves(
    sample: &FunctionalSample,
    highlight: Option<&[f64]>,
    spec: &PlotSpec,
) -> Result<String, RenderError> {
    if sample.n() == 0 {
        return Err(RenderError::EmptyPlot);
    }
    let grid = sample.grid();
    let mut ymin = f64::INFINITY;
    let mut ymax = f64::NEG_INFINITY;
    for row in sample.values() {
        for v in row {
            ymin = ymin.min(*v);
            ymax = ymax.max(*v);
        }
    }
    if let Some(h) = highlight {
        for v in h {
            ymin = ymin.min(*v);
            ymax = ymax.max(*v);
        }
    }
    let frame = Frame::new(spec, grid[0], grid[grid.len() - 1], ymin, ymax);
    let mut out = String::new();
    open_svg(&mut out, spec);
    draw_axes(&mut out, spec, &frame);
    for row in sample.values() {
        out.push_str(&format!(
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"0.8\"/>\n",
            polyline_points(&frame, grid, row),
            spec.palette.outer
        ));
    }
    if let Some(h) = highlight {
        out.push_str(&format!(
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"1.8\"/>\n",
            polyline_points(&frame, grid, h),
            spec.palette.median
        ));
    }
    out.push_str("</svg>\n");
    Ok(out)
}
