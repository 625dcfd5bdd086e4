//! SVG line panels and heatmaps.

use std::path::Path;

use plotters::prelude::*;
use plotters::style::colors::colormaps::{ColorMap, ViridisRGB};

use crate::error::{CliError, Result};

const PANEL_W: u32 = 480;
const PANEL_H: u32 = 340;
const MAX_COLS: usize = 200;
const MAX_ROWS: usize = 120;

#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone)]
pub struct Panel {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
}

fn plot_err<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Plot(e.to_string())
}

/// Runs of consecutive finite points; NaN breaks a line.
fn segments(points: &[(f64, f64)]) -> Vec<Vec<(f64, f64)>> {
    let mut out = Vec::new();
    let mut current = Vec::new();
    for &(x, y) in points {
        if x.is_finite() && y.is_finite() {
            current.push((x, y));
        } else if !current.is_empty() {
            out.push(std::mem::take(&mut current));
        }
    }
    if !current.is_empty() {
        out.push(current);
    }
    out
}

fn padded_range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if !lo.is_finite() {
        return (-1.0, 1.0);
    }
    let pad = if hi > lo { 0.05 * (hi - lo) } else { 0.5 * lo.abs().max(1.0) };
    (lo - pad, hi + pad)
}

/// Grid of line plots, `cols` panels per row.
pub fn line_panels(path: &Path, panels: &[Panel], cols: usize) -> Result<()> {
    let cols = cols.clamp(1, panels.len().max(1));
    let rows = panels.len().div_ceil(cols).max(1);
    let root = SVGBackend::new(path, (PANEL_W * cols as u32, PANEL_H * rows as u32)).into_drawing_area();
    root.fill(&WHITE).map_err(plot_err)?;
    let areas = root.split_evenly((rows, cols));
    for (panel, area) in panels.iter().zip(areas.iter()) {
        let xs = panel.series.iter().flat_map(|s| s.points.iter().map(|p| p.0));
        let ys = panel.series.iter().flat_map(|s| s.points.iter().map(|p| p.1));
        let (x0, x1) = padded_range(xs);
        let (y0, y1) = padded_range(ys);
        let mut chart = ChartBuilder::on(area)
            .caption(&panel.title, ("sans-serif", 16))
            .margin(8)
            .x_label_area_size(36)
            .y_label_area_size(56)
            .build_cartesian_2d(x0..x1, y0..y1)
            .map_err(plot_err)?;
        chart
            .configure_mesh()
            .x_desc(panel.x_label.as_str())
            .y_desc(panel.y_label.as_str())
            .draw()
            .map_err(plot_err)?;
        for (i, series) in panel.series.iter().enumerate() {
            let color = Palette99::pick(i).to_rgba();
            let mut labelled = false;
            for seg in segments(&series.points) {
                let drawn = chart
                    .draw_series(LineSeries::new(seg, color.stroke_width(2)))
                    .map_err(plot_err)?;
                if !labelled && !series.label.is_empty() {
                    drawn
                        .label(series.label.as_str())
                        .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 16, y)], color.stroke_width(2)));
                    labelled = true;
                }
            }
        }
        if panel.series.iter().any(|s| !s.label.is_empty()) {
            chart
                .configure_series_labels()
                .background_style(WHITE.mix(0.8))
                .border_style(BLACK)
                .draw()
                .map_err(plot_err)?;
        }
    }
    root.present().map_err(plot_err)
}

fn percentile(sorted: &[f64], q: f64) -> f64 {
    let idx = ((sorted.len() - 1) as f64 * q).round() as usize;
    sorted[idx]
}

/// Heatmap of `values` (row-major, one row per `ys` entry) on a log color
/// scale clamped to the 2–98% percentiles, with an optional overlaid track.
pub fn heatmap(
    path: &Path,
    title: &str,
    (x_label, y_label): (&str, &str),
    xs: &[f64],
    ys: &[f64],
    values: &[f64],
    track: Option<&[(f64, f64)]>,
) -> Result<()> {
    if xs.is_empty() || ys.is_empty() || values.len() != xs.len() * ys.len() {
        return Err(CliError::Plot("heatmap dimensions do not match".into()));
    }
    let col_step = xs.len().div_ceil(MAX_COLS);
    let row_step = ys.len().div_ceil(MAX_ROWS);
    let cols: Vec<usize> = (0..xs.len()).step_by(col_step).collect();
    let rows: Vec<usize> = (0..ys.len()).step_by(row_step).collect();
    let logs: Vec<f64> = values
        .iter()
        .map(|v| if *v > 0.0 && v.is_finite() { v.log10() } else { f64::NAN })
        .collect();
    let mut finite: Vec<f64> = logs.iter().copied().filter(|v| v.is_finite()).collect();
    finite.sort_by(f64::total_cmp);
    let (lo, hi) = if finite.is_empty() {
        (0.0, 1.0)
    } else {
        (percentile(&finite, 0.02), percentile(&finite, 0.98))
    };
    let span = if hi > lo { hi - lo } else { 1.0 };

    let edges = |grid: &[f64], picks: &[usize], i: usize| -> (f64, f64) {
        let c = grid[picks[i]];
        let left = if i == 0 { c } else { 0.5 * (grid[picks[i - 1]] + c) };
        let right = if i + 1 == picks.len() { c } else { 0.5 * (c + grid[picks[i + 1]]) };
        (left, right)
    };
    let (x0, x1) = (xs[0], xs[xs.len() - 1]);
    let (y0, y1) = (ys[0], ys[ys.len() - 1]);
    let (y0, y1) = if y1 > y0 { (y0, y1) } else { (y0 - 0.5, y0 + 0.5) };
    let (x0, x1) = if x1 > x0 { (x0, x1) } else { (x0 - 0.5, x0 + 0.5) };

    let root = SVGBackend::new(path, (720, 520)).into_drawing_area();
    root.fill(&WHITE).map_err(plot_err)?;
    let mut chart = ChartBuilder::on(&root)
        .caption(title, ("sans-serif", 18))
        .margin(10)
        .x_label_area_size(40)
        .y_label_area_size(60)
        .build_cartesian_2d(x0..x1, y0..y1)
        .map_err(plot_err)?;
    chart
        .configure_mesh()
        .disable_mesh()
        .x_desc(x_label)
        .y_desc(y_label)
        .draw()
        .map_err(plot_err)?;
    let mut cells = Vec::with_capacity(rows.len() * cols.len());
    for (ri, &r) in rows.iter().enumerate() {
        let (b, t) = edges(ys, &rows, ri);
        for (ci, &c) in cols.iter().enumerate() {
            let (l, rt) = edges(xs, &cols, ci);
            let v = logs[r * xs.len() + c];
            let color = if v.is_finite() {
                ViridisRGB.get_color_normalized(v.clamp(lo, hi), lo, lo + span)
            } else if values[r * xs.len() + c] == f64::INFINITY {
                ViridisRGB.get_color_normalized(1.0, 0.0, 1.0)
            } else {
                RGBColor(200, 200, 200)
            };
            cells.push(Rectangle::new([(l, b), (rt, t)], color.filled()));
        }
    }
    chart.draw_series(cells).map_err(plot_err)?;
    if let Some(track) = track {
        for seg in segments(track) {
            chart
                .draw_series(LineSeries::new(seg, RED.stroke_width(2)))
                .map_err(plot_err)?;
        }
    }
    root.present().map_err(plot_err)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nan_splits_lines() {
        let pts = [(0.0, 1.0), (1.0, f64::NAN), (2.0, 3.0), (3.0, 4.0)];
        let segs = segments(&pts);
        assert_eq!(segs.len(), 2);
        assert_eq!(segs[1], vec![(2.0, 3.0), (3.0, 4.0)]);
    }

    #[test]
    fn writes_svg_files() {
        let dir = tempfile::tempdir().unwrap();
        let lines = dir.path().join("lines.svg");
        let panel = Panel {
            title: "t".into(),
            x_label: "x".into(),
            y_label: "y".into(),
            series: vec![Series {
                label: "a".into(),
                points: (0..10).map(|i| (i as f64, (i * i) as f64)).collect(),
            }],
        };
        line_panels(&lines, &[panel.clone(), panel], 2).unwrap();
        assert!(std::fs::read_to_string(&lines).unwrap().starts_with("<svg"));

        let heat = dir.path().join("heat.svg");
        let xs: Vec<f64> = (0..300).map(|i| i as f64).collect();
        let ys: Vec<f64> = (0..5).map(|i| i as f64).collect();
        let mut values: Vec<f64> = (0..1500).map(|i| 1.0 + i as f64).collect();
        values[7] = f64::INFINITY;
        values[8] = f64::NAN;
        heatmap(&heat, "h", ("x", "y"), &xs, &ys, &values, Some(&[(1.0, 0.0), (2.0, 4.0)])).unwrap();
        assert!(std::fs::read_to_string(&heat).unwrap().contains("<rect"));
    }
}
