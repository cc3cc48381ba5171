//! SVG figures: per-timestep MAE curves over four snapshot panels comparing
//! predicted and reference profiles.

use std::path::{Path, PathBuf};

use plotters::coord::Shift;
use plotters::prelude::*;

use crate::error::{Error, Result};
use crate::report::{CurvePoint, SnapshotPoint};

/// One model's curve and snapshot profiles.
#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub curve: Vec<CurvePoint>,
    pub snapshots: Vec<SnapshotPoint>,
}

const PALETTE: [RGBColor; 6] = [
    RGBColor(31, 119, 180),
    RGBColor(214, 39, 40),
    RGBColor(44, 160, 44),
    RGBColor(255, 127, 14),
    RGBColor(148, 103, 189),
    RGBColor(140, 86, 75),
];

fn plot_err<E: std::fmt::Debug>(e: E) -> Error {
    Error::Malformed {
        format: "figure",
        detail: format!("{e:?}"),
    }
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    let pad = ((hi - lo) * 0.05).max(1e-9);
    (lo - pad, hi + pad)
}

/// Distinct snapshot times in order of first appearance, at most four.
fn snapshot_times(series: &[Series]) -> Vec<f64> {
    let mut times: Vec<f64> = Vec::new();
    for p in series.iter().flat_map(|s| &s.snapshots) {
        if !times.contains(&p.t) {
            times.push(p.t);
        }
    }
    times.truncate(4);
    times
}

/// Combined figure: MAE curves on top, up to four snapshot panels below.
pub fn render(series: &[Series], title: &str, path: &Path) -> Result<()> {
    if series.is_empty() {
        return Err(Error::Config("nothing to plot".into()));
    }
    let root = SVGBackend::new(path, (1200, 900)).into_drawing_area();
    root.fill(&WHITE).map_err(plot_err)?;
    let (top, bottom) = root.split_vertically(450);

    let (t0, t1) = bounds(series.iter().flat_map(|s| s.curve.iter().map(|p| p.t)));
    let (_, e1) = bounds(series.iter().flat_map(|s| s.curve.iter().map(|p| p.mae)));
    let mut chart = ChartBuilder::on(&top)
        .caption(title, ("sans-serif", 22))
        .margin(12)
        .x_label_area_size(36)
        .y_label_area_size(60)
        .build_cartesian_2d(t0..t1, 0.0..e1)
        .map_err(plot_err)?;
    chart
        .configure_mesh()
        .x_desc("t")
        .y_desc("MAE")
        .draw()
        .map_err(plot_err)?;
    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        chart
            .draw_series(LineSeries::new(s.curve.iter().map(|p| (p.t, p.mae)), color.stroke_width(2)))
            .map_err(plot_err)?
            .label(s.label.clone())
            .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 18, y)], color.stroke_width(2)));
    }
    chart
        .configure_series_labels()
        .background_style(WHITE.mix(0.8))
        .border_style(BLACK)
        .position(SeriesLabelPosition::UpperLeft)
        .draw()
        .map_err(plot_err)?;

    let times = snapshot_times(series);
    let panels = bottom.split_evenly((1, times.len().max(1)));
    for (panel, &t) in panels.iter().zip(&times) {
        snapshot_panel(panel, series, t, 16)?;
    }
    root.present().map_err(plot_err)
}

/// Draws one truth-vs-prediction panel at time `t`.
fn snapshot_panel<DB: DrawingBackend>(area: &DrawingArea<DB, Shift>, series: &[Series], t: f64, font: u32) -> Result<()> {
    let (x0, x1) = bounds(series.iter().flat_map(|s| s.snapshots.iter().map(|p| p.x)));
    let (u0, u1) = bounds(
        series
            .iter()
            .flat_map(|s| s.snapshots.iter().flat_map(|p| [p.truth, p.pred])),
    );
    let mut chart = ChartBuilder::on(area)
        .caption(format!("t = {t}"), ("sans-serif", font))
        .margin(8)
        .x_label_area_size(30)
        .y_label_area_size(44)
        .build_cartesian_2d(x0..x1, u0..u1)
        .map_err(plot_err)?;
    chart.configure_mesh().x_desc("x").draw().map_err(plot_err)?;
    let truth = series[0].snapshots.iter().filter(|p| p.t == t).map(|p| (p.x, p.truth));
    chart
        .draw_series(LineSeries::new(truth, BLACK.stroke_width(2)))
        .map_err(plot_err)?
        .label("reference")
        .legend(|(x, y)| PathElement::new(vec![(x, y), (x + 18, y)], BLACK.stroke_width(2)));
    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let pred = s.snapshots.iter().filter(|p| p.t == t).map(|p| (p.x, p.pred));
        chart
            .draw_series(LineSeries::new(pred, color.stroke_width(1)))
            .map_err(plot_err)?
            .label(s.label.clone())
            .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 18, y)], color.stroke_width(1)));
    }
    if font > 16 {
        chart
            .configure_series_labels()
            .background_style(WHITE.mix(0.8))
            .border_style(BLACK)
            .draw()
            .map_err(plot_err)?;
    }
    Ok(())
}

/// Writes one figure per snapshot time next to `path`, named
/// `<stem>-t<time>.svg`, and returns their paths.
pub fn render_snapshots(series: &[Series], path: &Path) -> Result<Vec<PathBuf>> {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("figure");
    let mut out = Vec::new();
    for t in snapshot_times(series) {
        let file = path.with_file_name(format!("{stem}-t{t}.svg"));
        {
            let root = SVGBackend::new(&file, (800, 500)).into_drawing_area();
            root.fill(&WHITE).map_err(plot_err)?;
            snapshot_panel(&root, series, t, 20)?;
            root.present().map_err(plot_err)?;
        }
        out.push(file);
    }
    Ok(out)
}
