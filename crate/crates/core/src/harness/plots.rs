//! SVG panels of the aggregated curves, each with a CSV sidecar holding
//! exactly the plotted points.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use plotters::coord::ranged1d::{AsRangedCoord, ValueFormatter};
use plotters::prelude::*;

use crate::analysis::AggregateCurve;
use crate::error::{Error, Result};

use super::experiment::ExperimentResult;
use super::export::{fmt_f64, write_atomic};

const MAX_POINTS: usize = 2000;
const WIDTH: u32 = 900;
const HEIGHT: u32 = 600;
/// Log scale on y once the plotted values span more than this ratio.
const LOG_SPAN: f64 = 100.0;

const COLORS: [RGBColor; 8] = [
    RGBColor(31, 119, 180),
    RGBColor(214, 39, 40),
    RGBColor(44, 160, 44),
    RGBColor(255, 127, 14),
    RGBColor(148, 103, 189),
    RGBColor(140, 86, 75),
    RGBColor(227, 119, 194),
    RGBColor(23, 190, 207),
];

/// Plotted samples of one curve: `(x, mean, lower, upper)`.
struct Line {
    label: String,
    pts: Vec<(f64, f64, f64, f64)>,
}

fn thin(c: &AggregateCurve, drop_zero_x: bool) -> Line {
    let idx: Vec<usize> = (0..c.len()).filter(|&i| !(drop_zero_x && c.x[i] == 0)).collect();
    let stride = idx.len().div_ceil(MAX_POINTS).max(1);
    let mut keep: Vec<usize> = idx.iter().copied().step_by(stride).collect();
    if let Some(&last) = idx.last() {
        if keep.last() != Some(&last) {
            keep.push(last);
        }
    }
    Line {
        label: c.method.clone(),
        pts: keep
            .into_iter()
            .map(|i| (c.x[i] as f64, c.mean[i], c.mean[i] - c.std[i], c.mean[i] + c.std[i]))
            .collect(),
    }
}

struct Panel<'a> {
    title: &'a str,
    x_desc: &'a str,
    y_desc: &'a str,
    log_x: bool,
}

fn sidecar(lines: &[Line]) -> String {
    let mut s = String::from("method,x,mean,lower,upper\n");
    for l in lines {
        for &(x, m, lo, hi) in &l.pts {
            writeln!(s, "{},{},{},{},{}", l.label, x, fmt_f64(m), fmt_f64(lo), fmt_f64(hi)).unwrap();
        }
    }
    s
}

fn y_bounds(lines: &[Line]) -> (f64, f64, bool) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut min_pos = f64::INFINITY;
    for l in lines {
        for &(_, m, a, b) in &l.pts {
            for v in [m, a, b] {
                if v.is_finite() {
                    lo = lo.min(v);
                    hi = hi.max(v);
                    if v > 0.0 {
                        min_pos = min_pos.min(v);
                    }
                }
            }
        }
    }
    if !lo.is_finite() {
        return (0.0, 1.0, false);
    }
    if min_pos.is_finite() && hi / min_pos > LOG_SPAN {
        return (min_pos / 1.5, hi * 1.5, true);
    }
    let pad = if hi > lo {
        0.05 * (hi - lo)
    } else {
        0.5 * hi.abs().max(1.0)
    };
    (lo - pad, hi + pad, false)
}

fn render<X, Y>(
    root: &DrawingArea<SVGBackend<'_>, plotters::coord::Shift>,
    p: &Panel,
    x: X,
    y: Y,
    lines: &[Line],
    y_floor: Option<f64>,
) -> std::result::Result<(), String>
where
    X: AsRangedCoord<Value = f64>,
    Y: AsRangedCoord<Value = f64>,
    X::CoordDescType: ValueFormatter<f64>,
    Y::CoordDescType: ValueFormatter<f64>,
{
    let mut chart = ChartBuilder::on(root)
        .caption(p.title, ("sans-serif", 22))
        .margin(15)
        .x_label_area_size(45)
        .y_label_area_size(80)
        .build_cartesian_2d(x, y)
        .map_err(|e| e.to_string())?;
    chart
        .configure_mesh()
        .x_desc(p.x_desc)
        .y_desc(p.y_desc)
        .x_label_formatter(&|v| format!("{v:.3e}"))
        .y_label_formatter(&|v| format!("{v:.2e}"))
        .draw()
        .map_err(|e| e.to_string())?;
    let clamp = |v: f64| y_floor.map_or(v, |f| v.max(f));
    for (i, l) in lines.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let mut band: Vec<(f64, f64)> = l.pts.iter().map(|&(x, _, _, hi)| (x, clamp(hi))).collect();
        band.extend(l.pts.iter().rev().map(|&(x, _, lo, _)| (x, clamp(lo))));
        chart
            .draw_series(std::iter::once(Polygon::new(band, color.mix(0.2).filled())))
            .map_err(|e| e.to_string())?;
        chart
            .draw_series(LineSeries::new(
                l.pts.iter().map(|&(x, m, _, _)| (x, clamp(m))),
                color.stroke_width(2),
            ))
            .map_err(|e| e.to_string())?
            .label(l.label.as_str())
            .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 20, y)], color.stroke_width(2)));
    }
    chart
        .configure_series_labels()
        .background_style(WHITE.mix(0.9))
        .border_style(BLACK)
        .position(SeriesLabelPosition::UpperRight)
        .draw()
        .map_err(|e| e.to_string())?;
    root.present().map_err(|e| e.to_string())
}

fn draw_panel(path: &Path, p: &Panel, curves: &[&AggregateCurve]) -> Result<Vec<PathBuf>> {
    let lines: Vec<Line> = curves
        .iter()
        .map(|c| thin(c, p.log_x))
        .filter(|l| !l.pts.is_empty())
        .collect();
    if lines.is_empty() {
        return Err(Error::EmptyResult(format!("no data for plot '{}'", p.title)));
    }
    let xs = lines.iter().flat_map(|l| l.pts.iter().map(|q| q.0));
    let (x_lo, x_hi) = xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    let x_hi = if x_hi > x_lo { x_hi } else { x_lo + 1.0 };
    let (y_lo, y_hi, log_y) = y_bounds(&lines);
    let y_floor = log_y.then_some(y_lo);

    let mut svg = String::new();
    {
        let root = SVGBackend::with_string(&mut svg, (WIDTH, HEIGHT)).into_drawing_area();
        root.fill(&WHITE).map_err(|e| Error::Plot(e.to_string()))?;
        let r = match (p.log_x, log_y) {
            (true, true) => render(
                &root,
                p,
                (x_lo..x_hi).log_scale(),
                (y_lo..y_hi).log_scale(),
                &lines,
                y_floor,
            ),
            (true, false) => render(&root, p, (x_lo..x_hi).log_scale(), y_lo..y_hi, &lines, y_floor),
            (false, true) => render(&root, p, x_lo..x_hi, (y_lo..y_hi).log_scale(), &lines, y_floor),
            (false, false) => render(&root, p, x_lo..x_hi, y_lo..y_hi, &lines, y_floor),
        };
        r.map_err(Error::Plot)?;
    }
    write_atomic(path, svg.as_bytes())?;
    let side = path.with_extension("csv");
    write_atomic(&side, sidecar(&lines).as_bytes())?;
    Ok(vec![path.to_path_buf(), side])
}

/// Gradient norm vs SFO, drift vs iteration and batch size vs iteration.
/// Returns the written files.
pub fn emit_plots(result: &ExperimentResult, dir: &Path) -> Result<Vec<PathBuf>> {
    let pick = |f: fn(&super::experiment::MethodCurves) -> Option<&AggregateCurve>| -> Vec<&AggregateCurve> {
        result.curves.iter().filter_map(f).collect()
    };
    let grad = pick(|c| c.grad_norm.as_ref());
    let drift = pick(|c| c.drift_sq_by_iter.as_ref());
    let batch = pick(|c| c.batch_size_by_iter.as_ref());
    if grad.is_empty() {
        return Err(Error::EmptyResult(format!(
            "experiment '{}' has no completed runs",
            result.name
        )));
    }
    let n = &result.name;
    let mut files = draw_panel(
        &dir.join(format!("{n}_grad_norm_vs_sfo.svg")),
        &Panel {
            title: &format!("{n}: gradient norm"),
            x_desc: "SFO calls",
            y_desc: "||grad f(x^k)||",
            log_x: true,
        },
        &grad,
    )?;
    files.extend(draw_panel(
        &dir.join(format!("{n}_drift_vs_iter.svg")),
        &Panel {
            title: &format!("{n}: drift"),
            x_desc: "iteration",
            y_desc: "||x^k - x^0||^2",
            log_x: false,
        },
        &drift,
    )?);
    files.extend(draw_panel(
        &dir.join(format!("{n}_batch_vs_iter.svg")),
        &Panel {
            title: &format!("{n}: batch size"),
            x_desc: "iteration",
            y_desc: "batch size",
            log_x: false,
        },
        &batch,
    )?);
    Ok(files)
}
